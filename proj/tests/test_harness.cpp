#include "riskgauge/experiment.hpp"
#include "riskgauge/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace riskgauge;
using nlohmann::json;

namespace {
ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.models = {LinearSpec{}};
    cfg.n_total = {60};
    cfg.trials = 4;
    cfg.folds = 5;
    cfg.master_seed = 11;
    return cfg;
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto p = text.find(needle); p != std::string::npos; p = text.find(needle, p + 1)) ++n;
    return n;
}
} // namespace

TEST_CASE("config parsing") {
    const auto defaults = config_from_json(json::object());
    CHECK(defaults.trials == 100);
    CHECK(defaults.n_total == std::vector<std::size_t>{1000});
    CHECK(defaults.test_fraction == 0.3);
    CHECK(defaults.folds == 10);
    CHECK(defaults.methods.size() == 3);
    CHECK(std::holds_alternative<PolynomialSpec>(defaults.models.front()));
    CHECK(std::get<FixedTau>(defaults.interval).tau == 10.0);
    CHECK_FALSE(defaults.shift.has_value());

    const auto cfg = config_from_json(json::parse(R"({
        "model": [{"model": "knn", "k": 7}, {"model": "kernel_ridge", "lambda": 0.5}],
        "n_total": [100, 1000], "B": 5, "interval": {"type": "relative_tau", "tau": 0.2},
        "methods": ["weighted_cv_plus", {"method": "jackknife_plus", "weighted": false}],
        "shift": {"beta": [0, 200]}, "K": 4, "master_seed": 9, "output_dir": "o"})"));
    CHECK(std::get<KnnSpec>(cfg.models[0]).k == 7);
    CHECK(std::get<KernelRidgeSpec>(cfg.models[1]).lambda == 0.5);
    CHECK(cfg.n_total.size() == 2);
    CHECK(std::get<RelativeTau>(cfg.interval).tau == 0.2);
    CHECK(cfg.methods[0] == MethodSpec{Method::CvPlus, true});
    CHECK(cfg.methods[1] == MethodSpec{Method::JackknifePlus, false});
    CHECK(cfg.shift->size() == 2);
    CHECK(expand_cells(cfg).size() == 8);
    CHECK(config_from_json(config_to_json(cfg)).methods == cfg.methods);
    CHECK(config_to_json(config_from_json(config_to_json(cfg))) == config_to_json(cfg));

    CHECK_THROWS_AS(config_from_json(json::parse(R"({"bogus": 1})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {"model": "svr"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"model": {"model": "knn", "degree": 2}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"B": 0})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"K": 1})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"test_fraction": 1.5})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"methods": ["bootstrap"]})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"interval": {"type": "fixed_tau", "tau": -1}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"shift": {"beta": "big"}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"n_total": "many"})")), ConfigError);
}

TEST_CASE("trials are deterministic and seeds are cell-shared across beta") {
    auto cfg = small_config();
    const Cell cell{LinearSpec{}, 60, std::nullopt};
    const auto a = run_trial(cfg, cell, 2);
    const auto b = run_trial(cfg, cell, 2);
    CHECK(trial_to_json(a) == trial_to_json(b));
    const auto c = run_trial(cfg, cell, 3);
    CHECK(a.data_seed != c.data_seed);
    CHECK(a.estimates.size() == 3);
    CHECK(a.count == 18);
    for (const auto& e : a.estimates) {
        CHECK(e.coverage_estimate == 1.0 - e.alpha_I_m);
        CHECK((e.coverage_estimate >= 0.0 && e.coverage_estimate <= 1.0));
    }

    cfg.shift = std::vector<double>{0.0, 100.0};
    const auto s0 = run_trial(cfg, Cell{LinearSpec{}, 60, 0.0}, 1);
    const auto s1 = run_trial(cfg, Cell{LinearSpec{}, 60, 100.0}, 1);
    CHECK(s0.data_seed == s1.data_seed);
    CHECK(s0.metrics.rmse == s1.metrics.rmse);
}

TEST_CASE("weighted methods at beta = 0 reproduce unweighted estimates exactly") {
    auto cfg = small_config();
    cfg.shift = std::vector<double>{0.0};
    cfg.methods = {{Method::Split, false}, {Method::Split, true},        {Method::JackknifePlus, false},
                   {Method::JackknifePlus, true}, {Method::CvPlus, false}, {Method::CvPlus, true}};
    for (std::size_t t = 0; t < 3; ++t) {
        const auto r = run_trial(cfg, Cell{PolynomialSpec{2}, 60, 0.0}, t);
        for (std::size_t k = 0; k < r.estimates.size(); k += 2) CHECK(r.estimates[k].alpha_I_m == r.estimates[k + 1].alpha_I_m);
    }
}

TEST_CASE("aggregation") {
    auto cfg = small_config();
    cfg.trials = 1;
    const auto single = run_experiment(cfg, 1);
    REQUIRE(single.cells.size() == 1);
    for (const auto& m : single.cells[0].methods) {
        CHECK(m.sd == 0.0);
        CHECK(m.q25 == m.mean);
        CHECK(m.q75 == m.mean);
    }

    cfg.trials = 7;
    const auto s = run_experiment(cfg, 1);
    const auto& cell = s.cells[0];
    CHECK(cell.trials.size() == 7);
    for (std::size_t k = 0; k < cell.methods.size(); ++k) {
        std::vector<double> v;
        for (const auto& t : cell.trials) v.push_back(t.estimates[k].coverage_estimate);
        double mean = 0.0;
        for (double x : v) mean += x / 7.0;
        double ss = 0.0;
        for (double x : v) ss += (x - mean) * (x - mean);
        CHECK(std::abs(cell.methods[k].mean - mean) < 1e-12);
        CHECK(std::abs(cell.methods[k].sd - std::sqrt(ss / 6.0)) < 1e-12);
        std::sort(v.begin(), v.end());
        CHECK(std::abs(cell.methods[k].q50 - v[3]) < 1e-12);
        CHECK(std::abs(cell.methods[k].q25 - (v[1] + 0.5 * (v[2] - v[1]))) < 1e-12);
        CHECK(cell.methods[k].min == v.front());
        CHECK(cell.methods[k].max == v.back());
    }
    std::size_t inside = 0, count = 0;
    for (const auto& t : cell.trials) {
        inside += t.inside;
        count += t.count;
    }
    CHECK(cell.true_coverage == static_cast<double>(inside) / static_cast<double>(count));

    const auto parallel = run_experiment(cfg, 4);
    CHECK(summary_to_json(parallel) == summary_to_json(s));
}

TEST_CASE("sample quantile") {
    CHECK(sample_quantile({3, 1, 2, 4}, 0.5) == 2.5);
    CHECK(sample_quantile({3, 1, 2, 4}, 0.25) == 1.75);
    CHECK(sample_quantile({5}, 0.75) == 5);
    CHECK_THROWS(sample_quantile({}, 0.5));
}

TEST_CASE("report outputs") {
    auto cfg = small_config();
    cfg.trials = 3;
    cfg.shift = std::vector<double>{0, 50, 100, 150, 200};
    cfg.methods = {{Method::Split, false}, {Method::CvPlus, true}};
    const auto s = run_experiment(cfg, 2);
    CHECK(s.cells.size() == 5);

    const auto csv = summary_csv(s);
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(header == "model,n_total,beta,method,mean,sd,q25,q50,q75,true_coverage");
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);)
        if (!line.empty()) ++rows;
    CHECK(rows == 10);

    const auto j = summary_to_json(s);
    CHECK(summary_to_json(summary_from_json(j)) == j);
    CHECK(j.at("cells").size() == 5);
    CHECK_FALSE(j.at("config").contains("output_dir"));

    const auto box = boxplot_svg(s);
    CHECK(count_of(box, "class=\"panel\"") == 5);
    CHECK(box.rfind("<svg", 0) == 0);
    const auto hist = histogram_svg(s.cells[0]);
    CHECK(count_of(hist, "class=\"series\"") == 2);
    CHECK(hist.find("true-coverage") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "riskgauge_report_test";
    std::filesystem::remove_all(dir);
    const auto written = emit_report(s, parse_formats("csv,json,svg"), dir.string());
    CHECK(std::filesystem::exists(dir / "summary.csv"));
    CHECK(std::filesystem::exists(dir / "summary.json"));
    CHECK(std::filesystem::exists(dir / "trials.jsonl"));
    CHECK(std::filesystem::exists(dir / "boxplot.svg"));
    CHECK(written.size() == 4 + s.cells.size());
    std::ifstream jsonl(dir / "trials.jsonl");
    std::size_t trial_lines = 0;
    for (std::string line; std::getline(jsonl, line);) {
        const auto t = json::parse(line);
        CHECK(t.contains("beta"));
        ++trial_lines;
    }
    CHECK(trial_lines == 15);
    CHECK(summary_to_json(read_summary(dir.string())) == j);
    std::filesystem::remove_all(dir);

    CHECK(parse_formats("svg").size() == 1);
    CHECK_THROWS(parse_formats("pdf"));
}
