#pragma once

#include "riskgauge/dataset.hpp"
#include "riskgauge/regressors.hpp"

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace riskgauge {

enum class Method { Split, JackknifePlus, CvPlus };

/// Covariate-shift likelihood ratio w(x) >= 0; only ratios matter, so unnormalized is fine.
using WeightFn = std::function<double(std::span<const double>)>;

struct SchemeSpec {
    Method method = Method::Split;
    std::size_t folds = 10;  // CV+ only
    bool weighted = false;
    WeightFn weight_fn;      // required when weighted
};

std::string method_name(Method m);
Method parse_method(const std::string& s);
/// "split", "jackknife_plus", "cv_plus", with a "weighted_" prefix when weighted.
std::string scheme_name(const SchemeSpec& spec);

/// Coverage factor: P(Y in T(alpha)) >= 1 - c*alpha.
inline int coverage_factor(Method m) { return m == Method::Split ? 1 : 2; }

// Masses are compared against alpha with this slack so that levels like k/(n+1),
// reached by repeated addition, still hit the intended quantile index.
inline constexpr double kMassTolerance = 1e-12;

using CenterProvider = std::variant<FittedModel, LooEnsemble, FoldEnsemble>;

/// |Y_i - mu_(i)(X_i)| where mu_(i) is the single model, the leave-one-out
/// model for row i, or the model that did not see row i's fold.
std::vector<double> conformity_scores(const CenterProvider& centers, const Dataset& calib);

struct NormalizedWeights {
    std::vector<double> p;
    double tail = 0.0;
};

/// p_i = w_i / (sum_j w_j + w_test), tail = w_test / (same).
NormalizedWeights normalized_weights(std::span<const double> w_calib, double w_test);

/// Discrete distribution used to build the interval at one test input: mass p[i]
/// at lo[i] (lower side) and hi[i] (upper side), plus `tail` at -inf / +inf.
struct PointMassSet {
    std::vector<double> lo;
    std::vector<double> hi;
    std::vector<double> p;
    double tail = 0.0;

    std::size_t size() const noexcept { return p.size(); }
    /// Throws std::invalid_argument unless sizes agree, p >= 0, lo <= hi and masses sum to 1.
    void validate() const;
};

struct PredictionInterval {
    double lo = 0.0;
    double hi = 0.0;
    double alpha = 0.0;

    bool empty() const noexcept { return lo > hi; }
    bool contains(const PredictionInterval& other) const noexcept {
        return lo <= other.lo && other.hi <= hi;
    }
};

/// Smallest upper location v (or +inf) whose mass strictly above v, tail included, is <= alpha.
double quantile_upper(const PointMassSet& pms, double alpha);
/// Largest lower location v (or -inf) whose mass strictly below v, tail included, is <= alpha.
double quantile_lower(const PointMassSet& pms, double alpha);
PredictionInterval predict_interval(const PointMassSet& pms, double alpha);

/// Everything needed to produce point masses at a new input: calibration scores,
/// the center model(s), and the calibration weights when weighted.
class SchemeState {
public:
    static SchemeState split(FittedModel model, const Dataset& calib, WeightFn weight_fn = {});
    static SchemeState jackknife_plus(LooEnsemble ensemble, const Dataset& train, WeightFn weight_fn = {});
    static SchemeState cv_plus(FoldEnsemble ensemble, const Dataset& train, WeightFn weight_fn = {});

    Method method() const noexcept { return method_; }
    int c() const noexcept { return coverage_factor(method_); }
    bool weighted() const noexcept { return static_cast<bool>(weight_fn_); }
    std::size_t size() const noexcept { return scores_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    const std::vector<double>& scores() const noexcept { return scores_; }
    const std::vector<double>& calibration_weights() const noexcept { return calib_weights_; }
    const CenterProvider& centers() const noexcept { return centers_; }

    /// mu_(i)(x) for every calibration index i.
    std::vector<double> centers_at(std::span<const double> x) const;
    PointMassSet point_masses(std::span<const double> x) const;

private:
    SchemeState(Method method, CenterProvider centers, const Dataset& calib, WeightFn weight_fn);

    Method method_;
    CenterProvider centers_;
    std::vector<double> scores_;
    std::vector<double> calib_weights_;
    WeightFn weight_fn_;
    std::size_t dim_;
};

PredictionInterval predict_interval(const SchemeState& state, std::span<const double> x, double alpha);

} // namespace riskgauge
