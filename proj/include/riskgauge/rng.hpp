#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace riskgauge {

// Seed derivation: SplitMix64 finalizer chained over (master, FNV-1a(tag), indices).
// The engine is std::mt19937_64, whose output sequence is fixed by the standard.
// Distributions are implemented here because the std:: ones are
// implementation-defined and would break cross-platform reproducibility.

std::uint64_t splitmix64(std::uint64_t x) noexcept;
std::uint64_t fnv1a64(std::string_view s) noexcept;
std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                          std::uint64_t a = 0, std::uint64_t b = 0) noexcept;

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();

    /// Uniform integer on [0, bound), unbiased (Lemire's method).
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via the Marsaglia polar method (one value per call; no caching).
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }

    /// Fisher-Yates permutation of 0..n-1.
    std::vector<std::size_t> permutation(std::size_t n);

private:
    std::mt19937_64 engine_;
};

} // namespace riskgauge
