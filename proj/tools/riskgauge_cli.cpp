// riskgauge: conformal risk assessment for regression models.
//
//   riskgauge simulate   --n 1000 --seed 7 --out data.csv
//   riskgauge assess     --train t.csv --calib c.csv --holdout h.csv --method split --tau 10 --model knn --k 5
//   riskgauge experiment --config fig2.json [--out dir] [--format csv,json,svg]
//   riskgauge report     --in dir [--svg]

#include "riskgauge/dataset.hpp"
#include "riskgauge/experiment.hpp"
#include "riskgauge/invcp.hpp"
#include "riskgauge/report.hpp"
#include "riskgauge/shift.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace riskgauge;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AssessOptions {
    std::string train, calib, holdout;
    std::string method = "split";
    bool weighted = false;
    double beta = 0.0;
    double tau = 10.0;
    std::string interval = "fixed_tau";
    std::string model = "knn";
    std::size_t k = 5;
    int degree = 3;
    double gamma = 0.0;
    double lambda = 1.0;
    std::size_t folds = 10;
    std::uint64_t seed = 0;
    std::size_t threads = 0;
};

TrainerSpec trainer_from_options(const AssessOptions& o) {
    if (o.model == "linear") return LinearSpec{};
    if (o.model == "polynomial") return PolynomialSpec{o.degree};
    if (o.model == "knn") return KnnSpec{o.k};
    if (o.model == "kernel_ridge") {
        KernelRidgeSpec r;
        if (o.gamma > 0.0) r.gamma = o.gamma;
        r.lambda = o.lambda;
        return r;
    }
    throw UsageError("unknown --model '" + o.model + "'");
}

int run_assess(const AssessOptions& o) {
    const auto spec = trainer_from_options(o);
    Method method;
    try {
        method = parse_method(o.method);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    IntervalSpec interval;
    if (o.interval == "fixed_tau") interval = FixedTau{o.tau};
    else if (o.interval == "relative_tau") interval = RelativeTau{o.tau};
    else throw UsageError("unknown --interval '" + o.interval + "'");
    if (method == Method::Split && o.calib.empty()) throw UsageError("--calib is required for split");
    if (method != Method::Split && !o.calib.empty())
        throw UsageError("--calib applies to split only; jackknife_plus and cv_plus calibrate on --train");

    const auto train = read_csv_file(o.train);
    const auto holdout = read_csv_file(o.holdout).without_labels();
    const std::size_t threads = o.threads ? o.threads : default_thread_count();
    const WeightFn w = o.weighted ? likelihood_ratio_fn(o.beta) : WeightFn{};

    const auto reference = fit(spec, train);
    std::optional<SchemeState> state;
    switch (method) {
    case Method::Split: state = SchemeState::split(reference, read_csv_file(o.calib), w); break;
    case Method::JackknifePlus: state = SchemeState::jackknife_plus(fit_loo(spec, train, threads), train, w); break;
    case Method::CvPlus: state = SchemeState::cv_plus(fit_kfold(spec, train, o.folds, o.seed, threads), train, w); break;
    }
    const auto report = assess_risk(*state, holdout, interval, reference, threads);
    std::cout << to_json(report).dump(2) << '\n';
    return 0;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Conformal risk assessment for regression models"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand("simulate", "Write a synthetic dataset as CSV");
    std::size_t sim_n = 1000;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    bool sim_positive = false;
    SyntheticParams params;
    simulate->add_option("--n", sim_n, "Number of rows")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--seed", sim_seed, "Random seed");
    simulate->add_option("--out", sim_out, "Output CSV path")->required();
    simulate->add_option("--mu1", params.mu1);
    simulate->add_option("--mu2", params.mu2);
    simulate->add_option("--sigma1", params.sigma1);
    simulate->add_option("--sigma2", params.sigma2);
    simulate->add_option("--sigma-eps", params.sigma_eps);
    simulate->add_flag("--positive", sim_positive, "Redraw rows with a nonpositive covariate");

    auto* assess = app.add_subcommand("assess", "One-shot risk assessment; prints a JSON report");
    AssessOptions ao;
    assess->add_option("--train", ao.train, "Training CSV (x1..xd,y)")->required();
    assess->add_option("--calib", ao.calib, "Calibration CSV (split only)");
    assess->add_option("--holdout", ao.holdout, "Holdout CSV; labels optional and ignored")->required();
    assess->add_option("--method", ao.method, "split | jackknife_plus | cv_plus");
    assess->add_flag("--weighted", ao.weighted, "Weight calibration masses by the tilt likelihood ratio");
    assess->add_option("--beta", ao.beta, "Tilt strength for --weighted");
    assess->add_option("--tau", ao.tau, "Interval half-width (absolute or relative)");
    assess->add_option("--interval", ao.interval, "fixed_tau | relative_tau");
    assess->add_option("--model", ao.model, "linear | polynomial | knn | kernel_ridge");
    assess->add_option("--k", ao.k, "Neighbours for knn");
    assess->add_option("--degree", ao.degree, "Polynomial degree");
    assess->add_option("--gamma", ao.gamma, "Kernel ridge RBF gamma (default: automatic)");
    assess->add_option("--lambda", ao.lambda, "Kernel ridge penalty");
    assess->add_option("--K", ao.folds, "CV+ folds");
    assess->add_option("--seed", ao.seed, "Seed for fold assignment");
    assess->add_option("--threads", ao.threads, "Worker threads (0 = RISKGAUGE_THREADS / auto)");

    auto* experiment = app.add_subcommand("experiment", "Run a Monte Carlo experiment from a JSON config");
    std::string config_path, exp_out, exp_formats = "csv,json";
    std::optional<std::uint64_t> exp_seed;
    experiment->add_option("--config", config_path, "Experiment config JSON")->required();
    experiment->add_option("--out", exp_out, "Output directory (overrides output_dir)");
    experiment->add_option("--seed", exp_seed, "Master seed (overrides master_seed)");
    experiment->add_option("--format", exp_formats, "Comma-separated subset of csv,json,svg");

    auto* report = app.add_subcommand("report", "Re-render outputs from a stored summary.json");
    std::string report_in, report_out, report_formats;
    bool report_svg = false;
    report->add_option("--in", report_in, "Directory holding summary.json")->required();
    report->add_option("--out", report_out, "Output directory (default: --in)");
    report->add_flag("--svg", report_svg, "Render SVG figures");
    report->add_option("--format", report_formats, "Comma-separated subset of csv,json,svg");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "riskgauge: " << e.what() << "\n" << "Run with --help for usage.\n";
        return 2;
    }

    try {
        if (*simulate) {
            write_csv_file(sim_out, generate_synthetic(sim_n, params, sim_seed, sim_positive));
            return 0;
        }
        if (*assess) return run_assess(ao);
        if (*experiment) {
            auto cfg = load_config(config_path);
            if (!exp_out.empty()) cfg.output_dir = exp_out;
            if (exp_seed) cfg.master_seed = *exp_seed;
            std::set<ReportFormat> formats;
            try {
                formats = parse_formats(exp_formats);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            const auto summary = run_experiment(cfg);
            for (const auto& path : emit_report(summary, formats, cfg.output_dir)) std::cout << path << '\n';
            return 0;
        }
        if (*report) {
            std::set<ReportFormat> formats;
            try {
                formats = report_formats.empty() ? std::set<ReportFormat>{ReportFormat::Csv} : parse_formats(report_formats);
            } catch (const std::invalid_argument& e) {
                throw UsageError(e.what());
            }
            if (report_svg) formats.insert(ReportFormat::Svg);
            const auto summary = read_summary(report_in);
            for (const auto& path : emit_report(summary, formats, report_out.empty() ? report_in : report_out))
                std::cout << path << '\n';
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "riskgauge: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "riskgauge: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "riskgauge: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
