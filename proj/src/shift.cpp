#include "riskgauge/shift.hpp"

#include "riskgauge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace riskgauge {

double synthetic_response(double x1, double x2) {
    return x1 * std::abs(std::log(std::abs(x2 / 100.0))) + x2 * std::abs(std::log(std::abs(x1 / 100.0)));
}

Dataset generate_synthetic(std::size_t n, const SyntheticParams& params, std::uint64_t seed, bool positive_only) {
    if (n < 1) throw std::invalid_argument("generate_synthetic: n must be >= 1");
    if (!(params.sigma1 > 0.0 && params.sigma2 > 0.0 && params.sigma_eps >= 0.0))
        throw std::invalid_argument("generate_synthetic: standard deviations must be positive");
    Rng rng(seed);
    Matrix x(static_cast<Eigen::Index>(n), 2);
    Vector y(static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double x1, x2;
        do {
            x1 = rng.normal(params.mu1, params.sigma1);
            x2 = rng.normal(params.mu2, params.sigma2);
        } while (x1 == 0.0 || x2 == 0.0 || (positive_only && (x1 <= 0.0 || x2 <= 0.0)));
        const double eps = params.sigma_eps > 0.0 ? rng.normal(0.0, params.sigma_eps) : 0.0;
        x(i, 0) = x1;
        x(i, 1) = x2;
        y(i) = synthetic_response(x1, x2) + eps;
    }
    return Dataset(std::move(x), std::move(y));
}

double tilt_weight(std::span<const double> x, double beta) {
    if (!std::isfinite(beta)) throw std::invalid_argument("tilt: beta must be finite");
    if (x.size() < 2) throw std::invalid_argument("tilt: need two covariates");
    if (!(x[0] > 0.0 && x[1] > 0.0)) throw std::invalid_argument("tilt: covariates must be positive");
    const double b = beta / 100.0;
    return std::exp(-b * std::log(x[0]) + b * std::log(x[1]));
}

std::vector<double> tilt_weights(const Matrix& x, double beta) {
    std::vector<double> w(static_cast<std::size_t>(x.rows()));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        try {
            w[static_cast<std::size_t>(i)] =
                tilt_weight({x.data() + i * x.cols(), static_cast<std::size_t>(x.cols())}, beta);
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(std::string(e.what()) + " (row " + std::to_string(i) + ")");
        }
    }
    return w;
}

Dataset resample_shifted(const Dataset& test, double beta, std::uint64_t seed) {
    const auto w = tilt_weights(test.features(), beta);
    std::vector<double> cumulative(w.size());
    double total = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) cumulative[i] = (total += w[i]);
    Rng rng(seed);
    std::vector<std::size_t> picks(test.size());
    for (auto& pick : picks) {
        const double u = rng.uniform() * total;
        auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        if (it == cumulative.end()) --it;
        pick = static_cast<std::size_t>(it - cumulative.begin());
    }
    return test.subset(picks);
}

WeightFn likelihood_ratio_fn(double beta) {
    if (!std::isfinite(beta)) throw std::invalid_argument("likelihood_ratio_fn: beta must be finite");
    return [beta](std::span<const double> x) { return tilt_weight(x, beta); };
}

double empirical_true_coverage(std::span<const CoverageRecord> records) {
    if (records.empty()) throw std::invalid_argument("empirical_true_coverage: no records");
    std::size_t inside = 0;
    for (const auto& r : records) inside += (r.a_minus <= r.y && r.y <= r.a_plus) ? 1 : 0;
    return static_cast<double>(inside) / static_cast<double>(records.size());
}

} // namespace riskgauge
