#pragma once

#include "riskgauge/conformal.hpp"
#include "riskgauge/dataset.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace riskgauge {

/// Y = X1 |ln|X2/100|| + X2 |ln|X1/100|| + eps with independent Gaussian X1, X2, eps.
struct SyntheticParams {
    double mu1 = 70.0;
    double mu2 = 40.0;
    double sigma1 = 20.0;
    double sigma2 = 10.0;
    double sigma_eps = 5.0;
};

/// Noise-free response.
double synthetic_response(double x1, double x2);

/// Rows with a zero covariate are redrawn; with `positive_only`, so is any row
/// with a nonpositive covariate (needed before applying the log tilt).
Dataset generate_synthetic(std::size_t n, const SyntheticParams& params, std::uint64_t seed,
                           bool positive_only = false);

struct ShiftConfig {
    double beta = 0.0;
};

/// exp(-(beta/100) ln x1 + (beta/100) ln x2) = (x2/x1)^(beta/100), for a single row.
double tilt_weight(std::span<const double> x, double beta);
std::vector<double> tilt_weights(const Matrix& x, double beta);

/// |test| rows drawn with replacement, row i with probability w_i / sum(w).
Dataset resample_shifted(const Dataset& test, double beta, std::uint64_t seed);

/// Likelihood ratio of the tilted covariate distribution, unnormalized.
WeightFn likelihood_ratio_fn(double beta);

struct CoverageRecord {
    double y;
    double a_minus;
    double a_plus;
};

/// Fraction of records with a_minus <= y <= a_plus.
double empirical_true_coverage(std::span<const CoverageRecord> records);

} // namespace riskgauge
