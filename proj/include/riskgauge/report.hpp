#pragma once

#include "riskgauge/experiment.hpp"

#include <json.hpp>

#include <set>
#include <string>
#include <vector>

namespace riskgauge {

enum class ReportFormat { Csv, Json, Svg };

/// Parses "csv,json,svg" (any subset, any order).
std::set<ReportFormat> parse_formats(const std::string& list);

nlohmann::json trial_to_json(const TrialResult& t);
TrialResult trial_from_json(const nlohmann::json& j);
nlohmann::json summary_to_json(const ExperimentSummary& s);
ExperimentSummary summary_from_json(const nlohmann::json& j);

/// Header plus one row per (cell, method).
std::string summary_csv(const ExperimentSummary& s);

/// Histogram of coverage estimates per method for one cell, true coverage dashed.
std::string histogram_svg(const CellSummary& cell);
/// One boxplot panel per cell (e.g. per data size or per tilt strength).
std::string boxplot_svg(const ExperimentSummary& s);

/// Writes summary.csv, summary.json + trials.jsonl, and histogram_<k>.svg + boxplot.svg
/// into `dir` (created if missing). Returns the paths written.
std::vector<std::string> emit_report(const ExperimentSummary& s, const std::set<ReportFormat>& formats,
                                     const std::string& dir);

ExperimentSummary read_summary(const std::string& dir);

} // namespace riskgauge
