#pragma once

#include "riskgauge/conformal.hpp"
#include "riskgauge/dataset.hpp"
#include "riskgauge/regressors.hpp"

#include <json.hpp>

#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace riskgauge {

/// Tolerance interval I(x) = [a_-(x), a_+(x)] around the reference prediction mu_hat.
struct FixedTau {
    double tau = 10.0;  // [mu_hat - tau, mu_hat + tau]
};
struct RelativeTau {
    double tau = 0.1;   // [mu_hat - |mu_hat| tau, mu_hat + |mu_hat| tau]
};
struct CustomInterval {
    std::function<std::pair<double, double>(std::span<const double> x, double mu_hat)> endpoints;
};
using IntervalSpec = std::variant<FixedTau, RelativeTau, CustomInterval>;

class InvalidInterval : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct Endpoints {
    double a_minus;
    double a_plus;
};

/// Throws InvalidInterval unless a_minus < a_plus (RelativeTau at mu_hat = 0 included).
Endpoints interval_endpoints(const IntervalSpec& spec, std::span<const double> x, double mu_hat);

struct AlphaSample {
    std::size_t index = 0;
    double alpha = 1.0;
    double a_minus = 0.0;
    double a_plus = 0.0;
    bool feasible = false;  // false: no prediction interval fits, alpha = 1
};

/// Smallest miscoverage whose conformal interval lies inside [a_minus, a_plus],
/// read off the point masses directly. Containment is closed: a mass located
/// exactly at an endpoint counts as inside.
AlphaSample alpha_xz(const PointMassSet& pms, double a_minus, double a_plus);

/// Reference implementation of alpha_xz: scans every level at which the interval
/// can change, in ascending order, and returns the first whose interval fits.
AlphaSample alpha_xz_oracle(const PointMassSet& pms, double a_minus, double a_plus);
AlphaSample alpha_xz_oracle(const SchemeState& state, std::span<const double> x, double a_minus, double a_plus);

enum class FastMode {
    Literal,    // (1/(n+1)) * #{S_i >= tau}
    Corrected,  // agrees with alpha_xz for unweighted split with a fixed tau
};

/// X-independent miscoverage for unweighted split conformal with a fixed-width interval.
double alpha_exchangeable_fast(std::span<const double> scores, double tau, FastMode mode);

struct RiskReport {
    std::string method;
    int c = 1;
    std::vector<AlphaSample> samples;
    double alpha_I_m = 0.0;
    double coverage_estimate = 1.0;
    double conservative_coverage_bound = 1.0;  // max(0, 1 - c * alpha_I_m)

    std::size_t m() const noexcept { return samples.size(); }
};

/// Risk assessment over an (unlabeled) holdout set. `reference` is the model
/// whose predictions center the tolerance interval.
RiskReport assess_risk(const SchemeState& state, const Dataset& holdout, const IntervalSpec& spec,
                       const FittedModel& reference, std::size_t threads = 1);

/// Summary statistics only, from a list of samples (mean taken in index order).
RiskReport make_report(std::string method, int c, std::vector<AlphaSample> samples);

nlohmann::json to_json(const RiskReport& report);

} // namespace riskgauge
