#include "riskgauge/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace riskgauge {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

struct Located {
    double value;
    double mass;
};

// Positive-mass locations sorted ascending. Zero-mass points never move a quantile.
std::vector<Located> support(std::span<const double> values, std::span<const double> p) {
    std::vector<Located> out;
    out.reserve(values.size());
    for (std::size_t i = 0; i < values.size(); ++i)
        if (p[i] > 0.0) out.push_back({values[i], p[i]});
    std::stable_sort(out.begin(), out.end(), [](const Located& a, const Located& b) { return a.value < b.value; });
    return out;
}
} // namespace

std::string method_name(Method m) {
    switch (m) {
    case Method::Split: return "split";
    case Method::JackknifePlus: return "jackknife_plus";
    case Method::CvPlus: return "cv_plus";
    }
    return "unknown";
}

Method parse_method(const std::string& s) {
    if (s == "split") return Method::Split;
    if (s == "jackknife_plus" || s == "jackknife+" || s == "jk+") return Method::JackknifePlus;
    if (s == "cv_plus" || s == "cv+") return Method::CvPlus;
    throw std::invalid_argument("unknown method '" + s + "' (expected split, jackknife_plus or cv_plus)");
}

std::string scheme_name(const SchemeSpec& spec) {
    return (spec.weighted ? "weighted_" : "") + method_name(spec.method);
}

std::vector<double> conformity_scores(const CenterProvider& centers, const Dataset& calib) {
    if (!calib.has_labels()) throw std::invalid_argument("conformity_scores: calibration set has no labels");
    const auto n = calib.size();
    std::vector<double> s(n);
    if (const auto* model = std::get_if<FittedModel>(&centers)) {
        for (std::size_t i = 0; i < n; ++i) s[i] = std::abs(calib.label(i) - model->predict(calib.row(i)));
    } else if (const auto* loo = std::get_if<LooEnsemble>(&centers)) {
        if (loo->size() != n)
            throw std::invalid_argument("conformity_scores: leave-one-out ensemble has " +
                                        std::to_string(loo->size()) + " models for " + std::to_string(n) +
                                        " calibration rows");
        for (std::size_t i = 0; i < n; ++i)
            s[i] = std::abs(calib.label(i) - loo->models[i].predict(calib.row(i)));
    } else {
        const auto& folds = std::get<FoldEnsemble>(centers);
        if (folds.folds.fold.size() != n || folds.models.size() != folds.folds.k)
            throw std::invalid_argument("conformity_scores: fold ensemble does not match calibration set");
        for (std::size_t i = 0; i < n; ++i)
            s[i] = std::abs(calib.label(i) - folds.model_for_row(i).predict(calib.row(i)));
    }
    return s;
}

NormalizedWeights normalized_weights(std::span<const double> w_calib, double w_test) {
    double total = 0.0;
    for (double w : w_calib) {
        if (!(std::isfinite(w) && w >= 0.0))
            throw std::invalid_argument("normalized_weights: weights must be finite and >= 0");
        total += w;
    }
    if (!(std::isfinite(w_test) && w_test >= 0.0))
        throw std::invalid_argument("normalized_weights: test weight must be finite and >= 0");
    total += w_test;
    if (!(total > 0.0) || !std::isfinite(total))
        throw std::invalid_argument("normalized_weights: weights sum to zero");
    NormalizedWeights out;
    out.p.resize(w_calib.size());
    for (std::size_t i = 0; i < w_calib.size(); ++i) out.p[i] = w_calib[i] / total;
    out.tail = w_test / total;
    return out;
}

void PointMassSet::validate() const {
    if (lo.size() != p.size() || hi.size() != p.size())
        throw std::invalid_argument("PointMassSet: inconsistent sizes");
    if (!(tail >= 0.0 && tail <= 1.0)) throw std::invalid_argument("PointMassSet: tail mass outside [0,1]");
    double total = tail;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (!(p[i] >= 0.0 && p[i] <= 1.0)) throw std::invalid_argument("PointMassSet: mass outside [0,1]");
        if (!(lo[i] <= hi[i])) throw std::invalid_argument("PointMassSet: lower location above upper location");
        total += p[i];
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("PointMassSet: masses do not sum to 1");
}

double quantile_upper(const PointMassSet& pms, double alpha) {
    const auto pts = support(pms.hi, pms.p);
    double result = kInf;
    double above = pms.tail;
    for (std::size_t j = pts.size(); j > 0;) {
        const double v = pts[j - 1].value;
        if (above > alpha + kMassTolerance) break;
        result = v;
        while (j > 0 && pts[j - 1].value == v) above += pts[--j].mass;
    }
    return result;
}

double quantile_lower(const PointMassSet& pms, double alpha) {
    const auto pts = support(pms.lo, pms.p);
    double result = -kInf;
    double below = pms.tail;
    for (std::size_t j = 0; j < pts.size();) {
        const double v = pts[j].value;
        if (below > alpha + kMassTolerance) break;
        result = v;
        while (j < pts.size() && pts[j].value == v) below += pts[j++].mass;
    }
    return result;
}

PredictionInterval predict_interval(const PointMassSet& pms, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("predict_interval: alpha outside [0,1]");
    return {quantile_lower(pms, alpha), quantile_upper(pms, alpha), alpha};
}

SchemeState::SchemeState(Method method, CenterProvider centers, const Dataset& calib, WeightFn weight_fn)
    : method_(method), centers_(std::move(centers)), weight_fn_(std::move(weight_fn)), dim_(calib.dim()) {
    scores_ = conformity_scores(centers_, calib);
    calib_weights_.assign(calib.size(), 1.0);
    if (weight_fn_) {
        for (std::size_t i = 0; i < calib.size(); ++i) {
            const double w = weight_fn_(calib.row(i));
            if (!(std::isfinite(w) && w >= 0.0))
                throw std::invalid_argument("SchemeState: invalid weight at calibration row " + std::to_string(i));
            calib_weights_[i] = w;
        }
    }
}

SchemeState SchemeState::split(FittedModel model, const Dataset& calib, WeightFn weight_fn) {
    return SchemeState(Method::Split, std::move(model), calib, std::move(weight_fn));
}

SchemeState SchemeState::jackknife_plus(LooEnsemble ensemble, const Dataset& train, WeightFn weight_fn) {
    return SchemeState(Method::JackknifePlus, std::move(ensemble), train, std::move(weight_fn));
}

SchemeState SchemeState::cv_plus(FoldEnsemble ensemble, const Dataset& train, WeightFn weight_fn) {
    return SchemeState(Method::CvPlus, std::move(ensemble), train, std::move(weight_fn));
}

std::vector<double> SchemeState::centers_at(std::span<const double> x) const {
    const auto n = scores_.size();
    if (const auto* model = std::get_if<FittedModel>(&centers_)) return std::vector<double>(n, model->predict(x));
    std::vector<double> out(n);
    if (const auto* loo = std::get_if<LooEnsemble>(&centers_)) {
        for (std::size_t i = 0; i < n; ++i) out[i] = loo->models[i].predict(x);
        return out;
    }
    const auto& folds = std::get<FoldEnsemble>(centers_);
    std::vector<double> per_fold(folds.models.size());
    for (std::size_t f = 0; f < per_fold.size(); ++f) per_fold[f] = folds.models[f].predict(x);
    for (std::size_t i = 0; i < n; ++i) out[i] = per_fold[folds.folds.fold[i]];
    return out;
}

PointMassSet SchemeState::point_masses(std::span<const double> x) const {
    const double w_test = weight_fn_ ? weight_fn_(x) : 1.0;
    auto weights = normalized_weights(calib_weights_, w_test);
    const auto mu = centers_at(x);
    PointMassSet pms;
    pms.lo.resize(mu.size());
    pms.hi.resize(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        pms.lo[i] = mu[i] - scores_[i];
        pms.hi[i] = mu[i] + scores_[i];
    }
    pms.p = std::move(weights.p);
    pms.tail = weights.tail;
    return pms;
}

PredictionInterval predict_interval(const SchemeState& state, std::span<const double> x, double alpha) {
    return predict_interval(state.point_masses(x), alpha);
}

} // namespace riskgauge
