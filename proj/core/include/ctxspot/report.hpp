#pragma once

#include <filesystem>
#include <string>

#include "ctxspot/config.hpp"
#include "ctxspot/eval.hpp"

namespace ctxspot {

/// JSON report: every EvalReport field plus the metric configuration and the
/// precision/recall conventions used.
std::string report_to_json_text(const EvalReport& report, const SpottingConfig& cfg);

/// Writes <stem>.json plus <stem>_curves.csv, <stem>_map.csv and
/// <stem>_bins.csv next to it.
void write_report(const EvalReport& report, const SpottingConfig& cfg,
                  const std::filesystem::path& json_path);

}  // namespace ctxspot
