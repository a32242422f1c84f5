#include "ctxspot/report.hpp"

#include <cmath>
#include <fstream>

#include "ctxspot/errors.hpp"
#include "json.hpp"

namespace ctxspot {
namespace {

using nlohmann::json;

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json bound(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json bins_to_json(const std::vector<BinResult>& bins) {
  json arr = json::array();
  for (const auto& b : bins)
    arr.push_back({{"lower", b.lower},
                   {"upper", bound(b.upper)},
                   {"num_actions", b.num_actions},
                   {"average_map", optional_number(b.average_map)}});
  return arr;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw IoError("cannot write " + p.string());
  out.precision(10);
  return out;
}

}  // namespace

std::string report_to_json_text(const EvalReport& report, const SpottingConfig& cfg) {
  json per_class = json::array();
  for (const auto& row : report.map.per_class_ap) {
    json r = json::array();
    for (const auto& ap : row) r.push_back(optional_number(ap));
    per_class.push_back(r);
  }
  json curves = json::array();
  for (const auto& c : report.curves) {
    json points = json::array();
    for (const auto& p : c.points)
      points.push_back({{"tolerance_s", p.tolerance_s},
                        {"tp", p.tp},
                        {"fp", p.fp},
                        {"fn", p.fn},
                        {"precision", p.precision},
                        {"recall", p.recall},
                        {"f1", p.f1}});
    curves.push_back({{"class", c.class_index}, {"threshold", c.threshold}, {"points", points}});
  }
  const MetricConfig& m = cfg.metric;
  const json root = {
      {"average_map", report.map.average_map},
      {"tolerances_s", report.map.tolerances_s},
      {"map", report.map.map},
      {"per_class_ap", per_class},
      {"curves", curves},
      {"game_time_bins", bins_to_json(report.game_time_bins)},
      {"vicinity_bins", bins_to_json(report.vicinity_bins)},
      {"total_ground_truth", report.total_ground_truth},
      {"num_classes", cfg.num_classes},
      {"metric",
       {{"tolerances_s", m.tolerances_s},
        {"half_window", m.half_window},
        {"interpolation",
         m.interpolation == ApInterpolation::kAllPoint ? "all_point" : "eleven_point"},
        {"game_bin_minutes", m.game_bin_minutes},
        {"vicinity_edges_s", m.vicinity_edges_s}}},
      {"conventions",
       {{"precision_without_predictions", 1.0},
        {"recall_without_ground_truth", 1.0},
        {"f1_when_precision_and_recall_zero", 0.0},
        {"ap_without_ground_truth", 0.0},
        {"class_without_ground_truth_or_predictions", "skipped"},
        {"tp_assignment", "greedy by descending confidence, nearest unclaimed ground truth"}}},
  };
  return root.dump(2);
}

void write_report(const EvalReport& report, const SpottingConfig& cfg,
                  const std::filesystem::path& json_path) {
  if (json_path.has_parent_path()) std::filesystem::create_directories(json_path.parent_path());
  {
    auto out = open_out(json_path);
    out << report_to_json_text(report, cfg) << '\n';
  }
  const auto stem = json_path.parent_path() / json_path.stem();
  {
    auto out = open_out(stem.string() + "_curves.csv");
    out << "class,threshold,tolerance_s,tp,fp,fn,precision,recall,f1\n";
    for (const auto& c : report.curves)
      for (const auto& p : c.points)
        out << c.class_index << ',' << c.threshold << ',' << p.tolerance_s << ',' << p.tp << ','
            << p.fp << ',' << p.fn << ',' << p.precision << ',' << p.recall << ',' << p.f1
            << '\n';
  }
  {
    auto out = open_out(stem.string() + "_map.csv");
    out << "tolerance_s,map";
    for (int c = 0; c < cfg.num_classes; ++c) out << ",ap_class_" << c;
    out << '\n';
    for (std::size_t t = 0; t < report.map.tolerances_s.size(); ++t) {
      out << report.map.tolerances_s[t] << ',' << report.map.map[t];
      for (const auto& ap : report.map.per_class_ap[t]) {
        out << ',';
        if (ap) out << *ap;
      }
      out << '\n';
    }
  }
  {
    auto out = open_out(stem.string() + "_bins.csv");
    out << "kind,lower,upper,num_actions,average_map\n";
    auto emit = [&](const char* kind, const std::vector<BinResult>& bins) {
      for (const auto& b : bins) {
        out << kind << ',' << b.lower << ',';
        if (std::isfinite(b.upper)) out << b.upper;
        out << ',' << b.num_actions << ',';
        if (b.average_map) out << *b.average_map;
        out << '\n';
      }
    };
    emit("game_time_minutes", report.game_time_bins);
    emit("vicinity_seconds", report.vicinity_bins);
  }
}

}  // namespace ctxspot
