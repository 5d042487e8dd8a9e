#include "riskgauge/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace riskgauge {

using nlohmann::json;

std::set<ReportFormat> parse_formats(const std::string& list) {
    std::set<ReportFormat> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item == "csv") out.insert(ReportFormat::Csv);
        else if (item == "json") out.insert(ReportFormat::Json);
        else if (item == "svg") out.insert(ReportFormat::Svg);
        else if (!item.empty()) throw std::invalid_argument("unknown format '" + item + "' (expected csv, json, svg)");
    }
    if (out.empty()) throw std::invalid_argument("no output format given");
    return out;
}

namespace {

json optional_real(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> read_optional_real(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

json cell_key(const Cell& c) {
    return {{"model", trainer_to_json(c.model)}, {"n_total", c.n_total}, {"beta", optional_real(c.beta)}};
}

std::string cell_label(const Cell& c) {
    std::string label = model_name(c.model) + ", n=" + std::to_string(c.n_total);
    if (c.beta) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ", beta=%g", *c.beta);
        label += buf;
    }
    return label;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string px(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2"};

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << content;
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

} // namespace

json trial_to_json(const TrialResult& t) {
    json estimates = json::array();
    for (const auto& e : t.estimates)
        estimates.push_back({{"method", e.method},
                             {"c", e.c},
                             {"alpha_I_m", e.alpha_I_m},
                             {"coverage_estimate", e.coverage_estimate},
                             {"conservative_bound", e.conservative_bound}});
    return {{"trial", t.trial},
            {"data_seed", t.data_seed},
            {"split_seed", t.split_seed},
            {"estimates", std::move(estimates)},
            {"inside", t.inside},
            {"count", t.count},
            {"empirical_coverage", t.empirical_coverage},
            {"metrics", {{"rmse", t.metrics.rmse}, {"mae", t.metrics.mae}, {"r2", optional_real(t.metrics.r2)}}}};
}

TrialResult trial_from_json(const json& j) {
    TrialResult t;
    t.trial = j.at("trial").get<std::size_t>();
    t.data_seed = j.at("data_seed").get<std::uint64_t>();
    t.split_seed = j.at("split_seed").get<std::uint64_t>();
    for (const auto& e : j.at("estimates"))
        t.estimates.push_back({e.at("method").get<std::string>(), e.at("c").get<int>(), e.at("alpha_I_m").get<double>(),
                               e.at("coverage_estimate").get<double>(), e.at("conservative_bound").get<double>()});
    t.inside = j.at("inside").get<std::size_t>();
    t.count = j.at("count").get<std::size_t>();
    t.empirical_coverage = j.at("empirical_coverage").get<double>();
    const auto& m = j.at("metrics");
    t.metrics = {m.at("rmse").get<double>(), m.at("mae").get<double>(), read_optional_real(m.at("r2"))};
    return t;
}

json summary_to_json(const ExperimentSummary& s) {
    json cells = json::array();
    for (const auto& c : s.cells) {
        json methods = json::array();
        for (const auto& m : c.methods)
            methods.push_back({{"method", m.method},
                               {"c", m.c},
                               {"mean", m.mean},
                               {"sd", m.sd},
                               {"q25", m.q25},
                               {"q50", m.q50},
                               {"q75", m.q75},
                               {"min", m.min},
                               {"max", m.max}});
        json trials = json::array();
        for (const auto& t : c.trials) trials.push_back(trial_to_json(t));
        json cj = cell_key(c.cell);
        cj["true_coverage"] = c.true_coverage;
        cj["inside"] = c.inside;
        cj["count"] = c.count;
        cj["metrics"] = {{"rmse", c.mean_rmse}, {"mae", c.mean_mae}, {"r2", optional_real(c.mean_r2)}};
        cj["methods"] = std::move(methods);
        cj["trials"] = std::move(trials);
        cells.push_back(std::move(cj));
    }
    return {{"config", config_to_json(s.config, false)}, {"cells", std::move(cells)}};
}

ExperimentSummary summary_from_json(const json& j) {
    ExperimentSummary s;
    s.config = config_from_json(j.at("config"));
    for (const auto& cj : j.at("cells")) {
        CellSummary c;
        c.cell.model = trainer_from_json(cj.at("model"));
        c.cell.n_total = cj.at("n_total").get<std::size_t>();
        c.cell.beta = read_optional_real(cj.at("beta"));
        c.true_coverage = cj.at("true_coverage").get<double>();
        c.inside = cj.at("inside").get<std::size_t>();
        c.count = cj.at("count").get<std::size_t>();
        c.mean_rmse = cj.at("metrics").at("rmse").get<double>();
        c.mean_mae = cj.at("metrics").at("mae").get<double>();
        c.mean_r2 = read_optional_real(cj.at("metrics").at("r2"));
        for (const auto& m : cj.at("methods"))
            c.methods.push_back({m.at("method").get<std::string>(), m.at("c").get<int>(), m.at("mean").get<double>(),
                                 m.at("sd").get<double>(), m.at("q25").get<double>(), m.at("q50").get<double>(),
                                 m.at("q75").get<double>(), m.at("min").get<double>(), m.at("max").get<double>()});
        for (const auto& t : cj.at("trials")) c.trials.push_back(trial_from_json(t));
        s.cells.push_back(std::move(c));
    }
    return s;
}

std::string summary_csv(const ExperimentSummary& s) {
    std::string out = "model,n_total,beta,method,mean,sd,q25,q50,q75,true_coverage\n";
    for (const auto& c : s.cells)
        for (const auto& m : c.methods) {
            out += model_name(c.cell.model) + "," + std::to_string(c.cell.n_total) + "," +
                   (c.cell.beta ? fmt(*c.cell.beta) : std::string()) + "," + m.method + "," + fmt(m.mean) + "," +
                   fmt(m.sd) + "," + fmt(m.q25) + "," + fmt(m.q50) + "," + fmt(m.q75) + "," + fmt(c.true_coverage) +
                   "\n";
        }
    return out;
}

std::string histogram_svg(const CellSummary& cell) {
    constexpr double width = 640, height = 400, left = 60, right = 20, top = 40, bottom = 50;
    constexpr int bins = 25;
    double lo = cell.true_coverage, hi = cell.true_coverage;
    for (const auto& t : cell.trials)
        for (const auto& e : t.estimates) {
            lo = std::min(lo, e.coverage_estimate);
            hi = std::max(hi, e.coverage_estimate);
        }
    const double pad = std::max(1e-3, 0.05 * (hi - lo));
    lo -= pad;
    hi += pad;
    const double bin_width = (hi - lo) / bins;

    std::vector<std::vector<int>> counts(cell.methods.size(), std::vector<int>(bins, 0));
    int peak = 1;
    for (const auto& t : cell.trials)
        for (std::size_t k = 0; k < t.estimates.size() && k < counts.size(); ++k) {
            auto b = static_cast<int>((t.estimates[k].coverage_estimate - lo) / bin_width);
            b = std::clamp(b, 0, bins - 1);
            peak = std::max(peak, ++counts[k][static_cast<std::size_t>(b)]);
        }

    auto sx = [&](double v) { return left + (v - lo) / (hi - lo) * (width - left - right); };
    auto sy = [&](double c) { return height - bottom - c / peak * (height - top - bottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">Coverage estimates ("
      << cell_label(cell.cell) << ")</text>\n";
    o << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + tick * (hi - lo) / 4;
        o << "<text x=\"" << px(sx(v)) << "\" y=\"" << height - bottom + 18 << "\" text-anchor=\"middle\" font-size=\"11\">"
          << fmt(std::round(v * 1000) / 1000) << "</text>\n";
    }
    for (std::size_t k = 0; k < counts.size(); ++k) {
        const char* color = kPalette[k % std::size(kPalette)];
        o << "<g class=\"series\" data-method=\"" << cell.methods[k].method << "\" fill=\"" << color
          << "\" fill-opacity=\"0.45\">\n";
        for (int b = 0; b < bins; ++b) {
            if (!counts[k][static_cast<std::size_t>(b)]) continue;
            const double x0 = sx(lo + b * bin_width), x1 = sx(lo + (b + 1) * bin_width);
            const double y0 = sy(counts[k][static_cast<std::size_t>(b)]);
            o << "<rect x=\"" << px(x0) << "\" y=\"" << px(y0) << "\" width=\"" << px(x1 - x0) << "\" height=\""
              << px(height - bottom - y0) << "\"/>\n";
        }
        o << "</g>\n";
        o << "<text x=\"" << width - right - 150 << "\" y=\"" << top + 16 * (k + 1) << "\" font-size=\"12\" fill=\""
          << color << "\">" << cell.methods[k].method << "</text>\n";
    }
    o << "<line class=\"true-coverage\" x1=\"" << px(sx(cell.true_coverage)) << "\" y1=\"" << top << "\" x2=\""
      << px(sx(cell.true_coverage)) << "\" y2=\"" << height - bottom
      << "\" stroke=\"green\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
    o << "</svg>\n";
    return o.str();
}

std::string boxplot_svg(const ExperimentSummary& s) {
    constexpr double panel_w = 260, height = 380, top = 50, bottom = 60, left = 50;
    const double width = left + panel_w * static_cast<double>(std::max<std::size_t>(1, s.cells.size())) + 20;
    double lo = 1.0, hi = 0.0;
    for (const auto& c : s.cells) {
        lo = std::min(lo, c.true_coverage);
        hi = std::max(hi, c.true_coverage);
        for (const auto& m : c.methods) {
            lo = std::min(lo, m.min);
            hi = std::max(hi, m.max);
        }
    }
    if (hi <= lo) {
        lo -= 0.01;
        hi += 0.01;
    }
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
    auto sy = [&](double v) { return height - bottom - (v - lo) / (hi - lo) * (height - top - bottom); };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">Coverage estimates over "
      << s.config.trials << " trials</text>\n";
    for (int tick = 0; tick <= 4; ++tick) {
        const double v = lo + tick * (hi - lo) / 4;
        o << "<text x=\"" << left - 6 << "\" y=\"" << px(sy(v) + 4) << "\" text-anchor=\"end\" font-size=\"11\">"
          << fmt(std::round(v * 1000) / 1000) << "</text>\n";
    }
    for (std::size_t p = 0; p < s.cells.size(); ++p) {
        const auto& c = s.cells[p];
        const double x0 = left + panel_w * static_cast<double>(p);
        o << "<g class=\"panel\" data-n-total=\"" << c.cell.n_total << "\"";
        if (c.cell.beta) o << " data-beta=\"" << fmt(*c.cell.beta) << "\"";
        o << ">\n";
        o << "<rect x=\"" << px(x0 + 4) << "\" y=\"" << top << "\" width=\"" << panel_w - 8 << "\" height=\""
          << height - top - bottom << "\" fill=\"none\" stroke=\"#999\"/>\n";
        o << "<text x=\"" << px(x0 + panel_w / 2) << "\" y=\"" << top - 8
          << "\" text-anchor=\"middle\" font-size=\"12\">" << cell_label(c.cell) << "</text>\n";
        const double slot = (panel_w - 20) / static_cast<double>(std::max<std::size_t>(1, c.methods.size()));
        for (std::size_t k = 0; k < c.methods.size(); ++k) {
            const auto& m = c.methods[k];
            const double cx = x0 + 10 + slot * (static_cast<double>(k) + 0.5);
            const double bw = slot * 0.6;
            const char* color = kPalette[k % std::size(kPalette)];
            o << "<line x1=\"" << px(cx) << "\" y1=\"" << px(sy(m.min)) << "\" x2=\"" << px(cx) << "\" y2=\""
              << px(sy(m.max)) << "\" stroke=\"" << color << "\"/>\n";
            o << "<rect x=\"" << px(cx - bw / 2) << "\" y=\"" << px(sy(m.q75)) << "\" width=\"" << px(bw)
              << "\" height=\"" << px(std::max(0.5, sy(m.q25) - sy(m.q75))) << "\" fill=\"" << color
              << "\" fill-opacity=\"0.4\" stroke=\"" << color << "\"/>\n";
            o << "<line x1=\"" << px(cx - bw / 2) << "\" y1=\"" << px(sy(m.q50)) << "\" x2=\"" << px(cx + bw / 2)
              << "\" y2=\"" << px(sy(m.q50)) << "\" stroke=\"black\"/>\n";
            o << "<text x=\"" << px(cx) << "\" y=\"" << height - bottom + 14 << "\" text-anchor=\"end\" font-size=\"9\" "
              << "transform=\"rotate(-30 " << px(cx) << " " << height - bottom + 14 << ")\">" << m.method << "</text>\n";
        }
        o << "<line class=\"true-coverage\" x1=\"" << px(x0 + 4) << "\" y1=\"" << px(sy(c.true_coverage)) << "\" x2=\""
          << px(x0 + panel_w - 4) << "\" y2=\"" << px(sy(c.true_coverage))
          << "\" stroke=\"green\" stroke-width=\"2\" stroke-dasharray=\"6,4\"/>\n";
        o << "</g>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::vector<std::string> emit_report(const ExperimentSummary& s, const std::set<ReportFormat>& formats,
                                     const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + dir + "': " + ec.message());
    std::vector<std::string> written;
    auto put = [&](const std::string& name, const std::string& content) {
        const auto path = fs::path(dir) / name;
        write_file(path, content);
        written.push_back(path.string());
    };
    if (formats.count(ReportFormat::Csv)) put("summary.csv", summary_csv(s));
    if (formats.count(ReportFormat::Json)) {
        put("summary.json", summary_to_json(s).dump(2) + "\n");
        std::string lines;
        for (const auto& c : s.cells)
            for (const auto& t : c.trials) {
                json j = cell_key(c.cell);
                j.update(trial_to_json(t));
                lines += j.dump() + "\n";
            }
        put("trials.jsonl", lines);
    }
    if (formats.count(ReportFormat::Svg)) {
        for (std::size_t k = 0; k < s.cells.size(); ++k) put("histogram_" + std::to_string(k) + ".svg", histogram_svg(s.cells[k]));
        put("boxplot.svg", boxplot_svg(s));
    }
    return written;
}

ExperimentSummary read_summary(const std::string& dir) {
    const auto path = std::filesystem::path(dir) / "summary.json";
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("malformed '" + path.string() + "': " + e.what());
    }
    return summary_from_json(j);
}

} // namespace riskgauge
