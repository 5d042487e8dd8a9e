#pragma once

#include "riskgauge/conformal.hpp"
#include "riskgauge/invcp.hpp"
#include "riskgauge/metrics.hpp"
#include "riskgauge/parallel.hpp"
#include "riskgauge/regressors.hpp"
#include "riskgauge/shift.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace riskgauge {

struct MethodSpec {
    Method method = Method::Split;
    bool weighted = false;

    std::string name() const { return (weighted ? "weighted_" : "") + method_name(method); }
    bool operator==(const MethodSpec&) const = default;
};

/// One experiment grid: every (model, n_total, beta) combination is a cell run for `trials` trials.
struct ExperimentConfig {
    std::vector<TrainerSpec> models{PolynomialSpec{3}};
    std::vector<std::size_t> n_total{1000};
    std::size_t trials = 100;
    double test_fraction = 0.3;
    IntervalSpec interval = FixedTau{10.0};
    std::vector<MethodSpec> methods{{Method::Split, false}, {Method::JackknifePlus, false}, {Method::CvPlus, false}};
    std::optional<std::vector<double>> shift;  // tilt strengths; unset = exchangeable data
    double split_calib_fraction = 0.5;
    std::size_t folds = 10;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";
    SyntheticParams synthetic;

    void validate() const;
};

/// Parses the JSON config; unknown keys and malformed values throw ConfigError.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
ExperimentConfig config_from_json(const nlohmann::json& j);
/// The output directory is left out when `with_output_dir` is false (result files echo only
/// settings that affect results).
nlohmann::json config_to_json(const ExperimentConfig& cfg, bool with_output_dir = true);

nlohmann::json trainer_to_json(const TrainerSpec& spec);
TrainerSpec trainer_from_json(const nlohmann::json& j);

struct Cell {
    TrainerSpec model;
    std::size_t n_total = 0;
    std::optional<double> beta;
};
std::vector<Cell> expand_cells(const ExperimentConfig& cfg);

struct MethodEstimate {
    std::string method;
    int c = 1;
    double alpha_I_m = 0.0;
    double coverage_estimate = 1.0;
    double conservative_bound = 1.0;
};

struct TrialResult {
    std::size_t trial = 0;
    std::uint64_t data_seed = 0;
    std::uint64_t split_seed = 0;
    std::vector<MethodEstimate> estimates;
    std::size_t inside = 0;  // test labels inside I(X)
    std::size_t count = 0;
    double empirical_coverage = 0.0;
    MetricsTriple metrics;
};

TrialResult run_trial(const ExperimentConfig& cfg, const Cell& cell, std::size_t trial_index);

struct MethodStats {
    std::string method;
    int c = 1;
    double mean = 0.0;
    double sd = 0.0;  // sample sd; 0 for a single trial
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double min = 0.0;
    double max = 0.0;

    double iqr() const noexcept { return q75 - q25; }
};

struct CellSummary {
    Cell cell;
    std::vector<MethodStats> methods;
    double true_coverage = 0.0;  // pooled over every trial's test set
    std::size_t inside = 0;
    std::size_t count = 0;
    double mean_rmse = 0.0;
    double mean_mae = 0.0;
    std::optional<double> mean_r2;
    std::vector<TrialResult> trials;

    const MethodStats& stats(const std::string& method) const;
};

struct ExperimentSummary {
    ExperimentConfig config;
    std::vector<CellSummary> cells;
};

/// Linear-interpolation quantile (type 7) of an unsorted sample.
double sample_quantile(std::vector<double> values, double q);
CellSummary summarize(const Cell& cell, std::vector<TrialResult> trials);

/// Trials run on `threads` workers; results do not depend on the schedule.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, std::size_t threads = default_thread_count());

} // namespace riskgauge
