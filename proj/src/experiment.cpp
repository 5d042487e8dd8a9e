#include "riskgauge/experiment.hpp"

#include "riskgauge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace riskgauge {

using nlohmann::json;

namespace {

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
}

double get_real(const json& j, const char* key, const std::string& where) {
    const auto& v = j.at(key);
    if (!v.is_number()) throw ConfigError(where + "." + key + ": expected a number");
    return v.get<double>();
}

std::size_t get_count(const json& v, const std::string& where) {
    if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + ": expected a nonnegative integer");
    return v.get<std::size_t>();
}

json interval_to_json(const IntervalSpec& spec) {
    if (const auto* f = std::get_if<FixedTau>(&spec)) return {{"type", "fixed_tau"}, {"tau", f->tau}};
    if (const auto* r = std::get_if<RelativeTau>(&spec)) return {{"type", "relative_tau"}, {"tau", r->tau}};
    throw ConfigError("custom intervals cannot be serialized");
}

IntervalSpec interval_from_json(const json& j) {
    reject_unknown_keys(j, {"type", "tau"}, "interval");
    if (!j.contains("type") || !j.at("type").is_string()) throw ConfigError("interval.type: expected a string");
    const auto type = j.at("type").get<std::string>();
    const double tau = j.contains("tau") ? get_real(j, "tau", "interval") : 10.0;
    if (!(tau > 0.0)) throw ConfigError("interval.tau must be > 0");
    if (type == "fixed_tau") return FixedTau{tau};
    if (type == "relative_tau") return RelativeTau{tau};
    throw ConfigError("interval.type: unknown '" + type + "' (expected fixed_tau or relative_tau)");
}

MethodSpec method_from_json(const json& j) {
    if (j.is_string()) {
        auto s = j.get<std::string>();
        MethodSpec m;
        if (s.rfind("weighted_", 0) == 0) {
            m.weighted = true;
            s = s.substr(9);
        }
        try {
            m.method = parse_method(s);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("methods: ") + e.what());
        }
        return m;
    }
    reject_unknown_keys(j, {"method", "weighted"}, "methods[]");
    MethodSpec m;
    try {
        m.method = parse_method(j.at("method").get<std::string>());
    } catch (const std::exception& e) {
        throw ConfigError(std::string("methods[].method: ") + e.what());
    }
    if (j.contains("weighted")) {
        if (!j.at("weighted").is_boolean()) throw ConfigError("methods[].weighted: expected a boolean");
        m.weighted = j.at("weighted").get<bool>();
    }
    return m;
}

template <class T, class Fn>
std::vector<T> one_or_many(const json& j, Fn&& parse) {
    std::vector<T> out;
    if (j.is_array()) {
        for (const auto& e : j) out.push_back(parse(e));
        if (out.empty()) throw ConfigError("empty list in config");
    } else {
        out.push_back(parse(j));
    }
    return out;
}

} // namespace

json trainer_to_json(const TrainerSpec& spec) {
    json j{{"model", model_name(spec)}};
    if (const auto* p = std::get_if<PolynomialSpec>(&spec)) j["degree"] = p->degree;
    if (const auto* k = std::get_if<KnnSpec>(&spec)) j["k"] = k->k;
    if (const auto* r = std::get_if<KernelRidgeSpec>(&spec)) {
        if (r->gamma) j["gamma"] = *r->gamma;
        j["lambda"] = r->lambda;
    }
    return j;
}

TrainerSpec trainer_from_json(const json& j) {
    if (!j.is_object() || !j.contains("model") || !j.at("model").is_string())
        throw ConfigError("model: expected an object with a \"model\" name");
    const auto name = j.at("model").get<std::string>();
    TrainerSpec spec;
    if (name == "linear") {
        reject_unknown_keys(j, {"model"}, "model");
        spec = LinearSpec{};
    } else if (name == "polynomial") {
        reject_unknown_keys(j, {"model", "degree"}, "model");
        PolynomialSpec p;
        if (j.contains("degree")) p.degree = static_cast<int>(get_count(j.at("degree"), "model.degree"));
        spec = p;
    } else if (name == "knn") {
        reject_unknown_keys(j, {"model", "k"}, "model");
        KnnSpec k;
        if (j.contains("k")) k.k = get_count(j.at("k"), "model.k");
        spec = k;
    } else if (name == "kernel_ridge") {
        reject_unknown_keys(j, {"model", "gamma", "lambda"}, "model");
        KernelRidgeSpec r;
        if (j.contains("gamma")) r.gamma = get_real(j, "gamma", "model");
        if (j.contains("lambda")) r.lambda = get_real(j, "lambda", "model");
        spec = r;
    } else {
        throw ConfigError("model: unknown '" + name + "' (expected linear, polynomial, knn or kernel_ridge)");
    }
    try {
        validate(spec);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("model: ") + e.what());
    }
    return spec;
}

void ExperimentConfig::validate() const {
    if (models.empty()) throw ConfigError("at least one model is required");
    if (n_total.empty()) throw ConfigError("at least one n_total is required");
    if (trials < 1) throw ConfigError("B must be >= 1");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test_fraction must lie in (0,1)");
    if (!(split_calib_fraction > 0.0 && split_calib_fraction < 1.0))
        throw ConfigError("split_calib_fraction must lie in (0,1)");
    if (methods.empty()) throw ConfigError("at least one method is required");
    if (folds < 2) throw ConfigError("K must be >= 2");
    if (std::holds_alternative<CustomInterval>(interval)) throw ConfigError("custom intervals are not supported here");
    for (auto n : n_total)
        if (n < 4) throw ConfigError("n_total must be >= 4");
    if (shift)
        for (double b : *shift)
            if (!std::isfinite(b) || b < 0.0) throw ConfigError("shift.beta must be finite and >= 0");
}

ExperimentConfig config_from_json(const json& j) {
    reject_unknown_keys(j,
                        {"model", "n_total", "B", "test_fraction", "interval", "methods", "shift",
                         "split_calib_fraction", "K", "master_seed", "output_dir"},
                        "config");
    ExperimentConfig cfg;
    try {
        if (j.contains("model")) cfg.models = one_or_many<TrainerSpec>(j.at("model"), trainer_from_json);
        if (j.contains("n_total"))
            cfg.n_total = one_or_many<std::size_t>(j.at("n_total"), [](const json& v) { return get_count(v, "n_total"); });
        if (j.contains("B")) cfg.trials = get_count(j.at("B"), "B");
        if (j.contains("test_fraction")) cfg.test_fraction = get_real(j, "test_fraction", "config");
        if (j.contains("interval")) cfg.interval = interval_from_json(j.at("interval"));
        if (j.contains("methods")) {
            if (!j.at("methods").is_array()) throw ConfigError("methods: expected a list");
            cfg.methods.clear();
            for (const auto& m : j.at("methods")) cfg.methods.push_back(method_from_json(m));
        }
        if (j.contains("shift") && !j.at("shift").is_null()) {
            const auto& s = j.at("shift");
            reject_unknown_keys(s, {"beta"}, "shift");
            if (!s.contains("beta")) throw ConfigError("shift: missing beta");
            cfg.shift = one_or_many<double>(s.at("beta"), [](const json& v) {
                if (!v.is_number()) throw ConfigError("shift.beta: expected a number");
                return v.get<double>();
            });
        }
        if (j.contains("split_calib_fraction"))
            cfg.split_calib_fraction = get_real(j, "split_calib_fraction", "config");
        if (j.contains("K")) cfg.folds = get_count(j.at("K"), "K");
        if (j.contains("master_seed")) {
            const auto& s = j.at("master_seed");
            if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0))
                throw ConfigError("master_seed: expected a nonnegative integer");
            cfg.master_seed = s.get<std::uint64_t>();
        }
        if (j.contains("output_dir")) {
            if (!j.at("output_dir").is_string()) throw ConfigError("output_dir: expected a string");
            cfg.output_dir = j.at("output_dir").get<std::string>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

json config_to_json(const ExperimentConfig& cfg, bool with_output_dir) {
    json models = json::array();
    for (const auto& m : cfg.models) models.push_back(trainer_to_json(m));
    json methods = json::array();
    for (const auto& m : cfg.methods) methods.push_back({{"method", method_name(m.method)}, {"weighted", m.weighted}});
    json j{{"model", std::move(models)},
           {"n_total", cfg.n_total},
           {"B", cfg.trials},
           {"test_fraction", cfg.test_fraction},
           {"interval", interval_to_json(cfg.interval)},
           {"methods", std::move(methods)},
           {"shift", cfg.shift ? json{{"beta", *cfg.shift}} : json(nullptr)},
           {"split_calib_fraction", cfg.split_calib_fraction},
           {"K", cfg.folds},
           {"master_seed", cfg.master_seed}};
    if (with_output_dir) j["output_dir"] = cfg.output_dir;
    return j;
}

std::vector<Cell> expand_cells(const ExperimentConfig& cfg) {
    std::vector<Cell> cells;
    for (const auto& model : cfg.models)
        for (auto n : cfg.n_total) {
            if (cfg.shift) {
                for (double b : *cfg.shift) cells.push_back({model, n, b});
            } else {
                cells.push_back({model, n, std::nullopt});
            }
        }
    return cells;
}

TrialResult run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial_index) {
    const auto seed = cfg.master_seed;
    const auto n = static_cast<std::uint64_t>(cell.n_total);
    const auto t = static_cast<std::uint64_t>(trial_index);

    const bool any_weighted = std::any_of(cfg.methods.begin(), cfg.methods.end(), [](const auto& m) { return m.weighted; });
    const bool positive_only = cfg.shift.has_value() || any_weighted;

    TrialResult result;
    result.trial = trial_index;
    result.data_seed = derive_seed(seed, "data", n, t);
    result.split_seed = derive_seed(seed, "split", n, t);

    const auto data = generate_synthetic(cell.n_total, cfg.synthetic, result.data_seed, positive_only);
    auto [train, test] = train_test_split(data, cfg.test_fraction, result.split_seed);

    const auto reference = fit(cell.model, train);
    const auto test_pred = reference.predict(test);
    result.metrics = regression_metrics(std::span<const double>(test.labels().data(), test.size()), test_pred);

    const double beta = cell.beta.value_or(0.0);
    const Dataset evaluation = cell.beta ? resample_shifted(test, beta, derive_seed(seed, "shift", n, t)) : test;
    const Dataset holdout = evaluation.without_labels();

    std::vector<CoverageRecord> records;
    records.reserve(evaluation.size());
    for (std::size_t i = 0; i < evaluation.size(); ++i) {
        const auto x = evaluation.row(i);
        const auto e = interval_endpoints(cfg.interval, x, reference.predict(x));
        records.push_back({evaluation.label(i), e.a_minus, e.a_plus});
        result.inside += (e.a_minus <= records.back().y && records.back().y <= e.a_plus) ? 1 : 0;
    }
    result.count = records.size();
    result.empirical_coverage = empirical_true_coverage(records);

    std::optional<std::pair<FittedModel, Dataset>> split_parts;
    std::optional<LooEnsemble> loo;
    std::optional<FoldEnsemble> kfold;

    for (const auto& m : cfg.methods) {
        WeightFn w = m.weighted ? likelihood_ratio_fn(beta) : WeightFn{};
        std::optional<SchemeState> state;
        switch (m.method) {
        case Method::Split:
            if (!split_parts) {
                const auto plan =
                    make_split_plan(train.size(), cfg.split_calib_fraction, derive_seed(seed, "split_cp", n, t));
                split_parts.emplace(fit(cell.model, train.subset(plan.train)), train.subset(plan.test));
            }
            state = SchemeState::split(split_parts->first, split_parts->second, std::move(w));
            break;
        case Method::JackknifePlus:
            if (!loo) loo = fit_loo(cell.model, train);
            state = SchemeState::jackknife_plus(*loo, train, std::move(w));
            break;
        case Method::CvPlus:
            if (!kfold) kfold = fit_kfold(cell.model, train, cfg.folds, derive_seed(seed, "folds", n, t));
            state = SchemeState::cv_plus(*kfold, train, std::move(w));
            break;
        }
        const auto report = assess_risk(*state, holdout, cfg.interval, reference);
        result.estimates.push_back(
            {m.name(), report.c, report.alpha_I_m, report.coverage_estimate, report.conservative_coverage_bound});
    }
    return result;
}

double sample_quantile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("sample_quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

const MethodStats& CellSummary::stats(const std::string& method) const {
    for (const auto& m : methods)
        if (m.method == method) return m;
    throw std::out_of_range("no statistics for method '" + method + "'");
}

CellSummary summarize(const Cell& cell, std::vector<TrialResult> trials) {
    if (trials.empty()) throw std::invalid_argument("summarize: no trials");
    CellSummary s;
    s.cell = cell;
    const auto b = static_cast<double>(trials.size());
    double r2_sum = 0.0;
    bool r2_ok = true;
    for (const auto& t : trials) {
        s.inside += t.inside;
        s.count += t.count;
        s.mean_rmse += t.metrics.rmse / b;
        s.mean_mae += t.metrics.mae / b;
        if (t.metrics.r2) r2_sum += *t.metrics.r2;
        else r2_ok = false;
    }
    if (r2_ok) s.mean_r2 = r2_sum / b;
    s.true_coverage = static_cast<double>(s.inside) / static_cast<double>(s.count);

    for (std::size_t k = 0; k < trials.front().estimates.size(); ++k) {
        std::vector<double> v;
        for (const auto& t : trials) v.push_back(t.estimates.at(k).coverage_estimate);
        MethodStats st;
        st.method = trials.front().estimates[k].method;
        st.c = trials.front().estimates[k].c;
        double sum = 0.0;
        for (double x : v) sum += x;
        st.mean = sum / b;
        double ss = 0.0;
        for (double x : v) ss += (x - st.mean) * (x - st.mean);
        st.sd = v.size() > 1 ? std::sqrt(ss / (b - 1.0)) : 0.0;
        st.q25 = sample_quantile(v, 0.25);
        st.q50 = sample_quantile(v, 0.5);
        st.q75 = sample_quantile(v, 0.75);
        st.min = *std::min_element(v.begin(), v.end());
        st.max = *std::max_element(v.begin(), v.end());
        s.methods.push_back(std::move(st));
    }
    s.trials = std::move(trials);
    return s;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::size_t threads) {
    cfg.validate();
    ExperimentSummary summary;
    summary.config = cfg;
    for (const auto& cell : expand_cells(cfg)) {
        std::vector<TrialResult> trials(cfg.trials);
        parallel_for(cfg.trials, threads, [&](std::size_t t) {
            try {
                trials[t] = run_trial(cfg, cell, t);
            } catch (const std::exception& e) {
                throw std::runtime_error("trial " + std::to_string(t) + " (model " + model_name(cell.model) +
                                         ", n_total " + std::to_string(cell.n_total) + "): " + e.what());
            }
        });
        summary.cells.push_back(summarize(cell, std::move(trials)));
    }
    return summary;
}

} // namespace riskgauge
