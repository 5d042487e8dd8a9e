#include "riskgauge/invcp.hpp"

#include "riskgauge/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace riskgauge {

Endpoints interval_endpoints(const IntervalSpec& spec, std::span<const double> x, double mu_hat) {
    if (!std::isfinite(mu_hat)) throw InvalidInterval("interval_endpoints: non-finite prediction");
    Endpoints e{};
    if (const auto* fixed = std::get_if<FixedTau>(&spec)) {
        if (!(fixed->tau > 0.0)) throw InvalidInterval("fixed tau must be > 0");
        e = {mu_hat - fixed->tau, mu_hat + fixed->tau};
    } else if (const auto* rel = std::get_if<RelativeTau>(&spec)) {
        if (!(rel->tau > 0.0)) throw InvalidInterval("relative tau must be > 0");
        const double half = std::abs(mu_hat) * rel->tau;
        e = {mu_hat - half, mu_hat + half};
    } else {
        const auto& custom = std::get<CustomInterval>(spec);
        if (!custom.endpoints) throw InvalidInterval("custom interval has no endpoint function");
        const auto [lo, hi] = custom.endpoints(x, mu_hat);
        e = {lo, hi};
    }
    if (!(e.a_minus < e.a_plus)) throw InvalidInterval("tolerance interval is empty (a_- >= a_+)");
    return e;
}

namespace {
void check_inputs(const PointMassSet& pms, double a_minus, double a_plus) {
    pms.validate();
    if (!(a_minus < a_plus) || std::isnan(a_minus) || std::isnan(a_plus))
        throw std::invalid_argument("alpha_xz: need a_minus < a_plus");
}
} // namespace

AlphaSample alpha_xz(const PointMassSet& pms, double a_minus, double a_plus) {
    check_inputs(pms, a_minus, a_plus);
    constexpr double inf = std::numeric_limits<double>::infinity();
    AlphaSample out;
    out.a_minus = a_minus;
    out.a_plus = a_plus;

    // Innermost admissible endpoints: largest upper mass <= a_plus, smallest lower mass >= a_minus.
    double upper_star = -inf;
    double lower_star = inf;
    bool upper_ok = false;
    bool lower_ok = false;
    for (std::size_t i = 0; i < pms.size(); ++i) {
        if (pms.p[i] <= 0.0) continue;
        if (pms.hi[i] <= a_plus && pms.hi[i] >= upper_star) {
            upper_star = pms.hi[i];
            upper_ok = true;
        }
        if (pms.lo[i] >= a_minus && pms.lo[i] <= lower_star) {
            lower_star = pms.lo[i];
            lower_ok = true;
        }
    }
    if (!upper_ok || !lower_ok) {
        out.alpha = 1.0;
        out.feasible = false;
        return out;
    }

    // Mass beyond the admissible endpoints, the +/-inf tail included.
    double alpha_plus = pms.tail;
    double alpha_minus = pms.tail;
    for (std::size_t i = 0; i < pms.size(); ++i) {
        if (pms.hi[i] > upper_star) alpha_plus += pms.p[i];
        if (pms.lo[i] < lower_star) alpha_minus += pms.p[i];
    }
    out.alpha = std::min(1.0, std::max(alpha_minus, alpha_plus));
    out.feasible = true;
    return out;
}

AlphaSample alpha_xz_oracle(const PointMassSet& pms, double a_minus, double a_plus) {
    check_inputs(pms, a_minus, a_plus);
    AlphaSample out;
    out.a_minus = a_minus;
    out.a_plus = a_plus;

    // Jump levels of the interval as a function of alpha: mass strictly beyond each
    // support location on either side.
    std::vector<std::pair<double, double>> upper, lower;
    for (std::size_t i = 0; i < pms.size(); ++i) {
        if (pms.p[i] <= 0.0) continue;
        upper.emplace_back(pms.hi[i], pms.p[i]);
        lower.emplace_back(pms.lo[i], pms.p[i]);
    }
    std::sort(upper.begin(), upper.end());
    std::sort(lower.begin(), lower.end());
    std::vector<double> levels{0.0, 1.0};
    double acc = pms.tail;
    for (std::size_t j = upper.size(); j > 0; --j) {
        if (j == upper.size() || upper[j - 1].first != upper[j].first) levels.push_back(acc);
        acc += upper[j - 1].second;
    }
    acc = pms.tail;
    for (std::size_t j = 0; j < lower.size(); ++j) {
        if (j == 0 || lower[j].first != lower[j - 1].first) levels.push_back(acc);
        acc += lower[j].second;
    }
    std::sort(levels.begin(), levels.end());
    levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

    for (double level : levels) {
        const double a = std::min(1.0, level);
        const auto interval = predict_interval(pms, a);
        if (interval.lo >= a_minus && interval.hi <= a_plus) {
            out.alpha = a;
            out.feasible = true;
            return out;
        }
        if (level >= 1.0) break;
    }
    out.alpha = 1.0;
    out.feasible = false;
    return out;
}

AlphaSample alpha_xz_oracle(const SchemeState& state, std::span<const double> x, double a_minus, double a_plus) {
    return alpha_xz_oracle(state.point_masses(x), a_minus, a_plus);
}

double alpha_exchangeable_fast(std::span<const double> scores, double tau, FastMode mode) {
    if (scores.empty()) throw std::invalid_argument("alpha_exchangeable_fast: no scores");
    if (!(tau > 0.0)) throw std::invalid_argument("alpha_exchangeable_fast: tau must be > 0");
    const std::vector<double> ones(scores.size(), 1.0);
    const auto w = normalized_weights(ones, 1.0);

    if (mode == FastMode::Literal) {
        std::size_t count = 0;
        for (double s : scores) count += s >= tau ? 1 : 0;
        return static_cast<double>(count) / static_cast<double>(scores.size() + 1);
    }

    // Largest score that still fits inside the band; everything above it is miscovered.
    double inner = -1.0;
    bool found = false;
    for (double s : scores) {
        if (s <= tau && s >= inner) {
            inner = s;
            found = true;
        }
    }
    if (!found) return 1.0;
    double alpha = w.tail;
    for (std::size_t i = 0; i < scores.size(); ++i)
        if (scores[i] > inner) alpha += w.p[i];
    return std::min(1.0, alpha);
}

RiskReport make_report(std::string method, int c, std::vector<AlphaSample> samples) {
    if (samples.empty()) throw std::invalid_argument("risk report needs at least one sample");
    RiskReport r;
    r.method = std::move(method);
    r.c = c;
    double sum = 0.0;
    for (const auto& s : samples) sum += s.alpha;
    r.samples = std::move(samples);
    r.alpha_I_m = sum / static_cast<double>(r.samples.size());
    r.coverage_estimate = 1.0 - r.alpha_I_m;
    r.conservative_coverage_bound = std::max(0.0, 1.0 - c * r.alpha_I_m);
    return r;
}

RiskReport assess_risk(const SchemeState& state, const Dataset& holdout, const IntervalSpec& spec,
                       const FittedModel& reference, std::size_t threads) {
    if (holdout.size() == 0) throw std::invalid_argument("assess_risk: empty holdout set");
    if (holdout.dim() != state.dim())
        throw std::invalid_argument("assess_risk: holdout has " + std::to_string(holdout.dim()) +
                                    " features, calibration has " + std::to_string(state.dim()));
    std::vector<AlphaSample> samples(holdout.size());
    parallel_for(holdout.size(), threads, [&](std::size_t j) {
        try {
            const auto x = holdout.row(j);
            const auto e = interval_endpoints(spec, x, reference.predict(x));
            samples[j] = alpha_xz(state.point_masses(x), e.a_minus, e.a_plus);
            samples[j].index = j;
        } catch (const InvalidInterval& err) {
            throw InvalidInterval("holdout point " + std::to_string(j) + ": " + err.what());
        } catch (const std::exception& err) {
            throw std::runtime_error("holdout point " + std::to_string(j) + ": " + err.what());
        }
    });
    const std::string name = (state.weighted() ? "weighted_" : "") + method_name(state.method());
    return make_report(name, state.c(), std::move(samples));
}

nlohmann::json to_json(const RiskReport& report) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& s : report.samples)
        samples.push_back({{"index", s.index},
                           {"alpha", s.alpha},
                           {"a_minus", s.a_minus},
                           {"a_plus", s.a_plus},
                           {"feasible", s.feasible}});
    return {{"method", report.method},
            {"c", report.c},
            {"m", report.m()},
            {"alpha_I_m", report.alpha_I_m},
            {"coverage_estimate", report.coverage_estimate},
            {"conservative_coverage_bound", report.conservative_coverage_bound},
            {"samples", std::move(samples)}};
}

} // namespace riskgauge
