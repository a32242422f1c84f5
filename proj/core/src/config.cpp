#include "ctxspot/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "ctxspot/hashing.hpp"
#include "json.hpp"

namespace ctxspot {
namespace {

using nlohmann::json;

const SlicingParams kDefaultSlicing[3] = {
    {-40, -20, 120, 180},  // goal
    {-40, -20, 20, 40},    // card
    {-80, -40, 20, 40},    // substitution
};

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  if (!obj.is_object()) fail(where.empty() ? "<root>" : where, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) fail(where.empty() ? key : where + "." + key, "unknown field");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    fail(where.empty() ? key : where + "." + key, e.what());
  }
}

SlicingParams slicing_from_json(const json& j, const std::string& field, double scale) {
  if (!j.is_array() || j.size() != 4) fail(field, "expected [k1, k2, k3, k4]");
  int v[4];
  for (int i = 0; i < 4; ++i) {
    if (!j[i].is_number()) fail(field, "expected numbers");
    const double x = j[i].get<double>() * scale;
    const double r = std::round(x);
    if (std::abs(x - r) > 1e-9) fail(field, "does not map to a whole number of frames");
    v[i] = static_cast<int>(r);
  }
  return {v[0], v[1], v[2], v[3]};
}

json slicing_to_json(const SlicingParams& k) { return json::array({k.k1, k.k2, k.k3, k.k4}); }

}  // namespace

bool is_strictly_ordered(const SlicingParams& k) noexcept {
  return k.k1 < k.k2 && k.k2 < 0 && 0 < k.k3 && k.k3 < k.k4;
}

void validate_slicing(const SlicingParams& k, bool allow_degenerate) {
  if (is_strictly_ordered(k)) return;
  if (allow_degenerate && k.k1 <= k.k2 && k.k2 < 0 && 0 < k.k3 && k.k3 <= k.k4) return;
  std::ostringstream os;
  os << "slicing (" << k.k1 << ", " << k.k2 << ", " << k.k3 << ", " << k.k4
     << ") violates K1 < K2 < 0 < K3 < K4";
  throw ConfigError(os.str());
}

SlicingParams SpottingConfig::slicing_for(int c) const {
  if (ablation.raw_binary_slicing) return kRawBinarySlicing;
  return slicing.at(static_cast<std::size_t>(c));
}

std::array<int, 4> SpottingConfig::pyramid_kernels() const {
  const int r = receptive_field;
  return {std::max(1, r / 7), std::max(1, r / 3), std::max(1, r / 2), std::max(1, r)};
}

void SpottingConfig::validate() const {
  if (num_classes <= 0) fail("num_classes", "must be positive");
  if (chunk_frames <= 0) fail("chunk_frames", "must be positive");
  if (!(fps > 0.0) || !std::isfinite(fps)) fail("fps", "must be positive");
  if (num_predictions <= 0) fail("num_predictions", "must be positive");
  if (static_cast<int>(slicing.size()) != num_classes)
    fail("slicing", "needs one tuple per class");
  for (std::size_t c = 0; c < slicing.size(); ++c) {
    try {
      validate_slicing(slicing[c]);
    } catch (const ConfigError& e) {
      fail("slicing[" + std::to_string(c) + "]", e.what());
    }
  }
  if (!(margins.max > 0.0 && margins.max <= 1.0)) fail("margin_max", "must be in (0, 1]");
  if (!(margins.min >= 0.0 && margins.min < 1.0)) fail("margin_min", "must be in [0, 1)");
  if (!(margins.min < margins.max)) fail("margin_min", "must be below margin_max");
  if (static_cast<int>(alpha.size()) != 2 + num_classes)
    fail("alpha", "needs 2 + num_classes entries");
  for (double a : alpha)
    if (!(a >= 0.0) || !std::isfinite(a)) fail("alpha", "entries must be non-negative");
  if (!(beta >= 0.0)) fail("beta", "must be non-negative");
  if (!(lambda_seg >= 0.0)) fail("lambda_seg", "must be non-negative");
  if (class_features <= 0) fail("class_features", "must be positive");
  if (receptive_field <= 0) fail("receptive_field", "must be positive");
  if (model.feature_dim <= 0) fail("model.feature_dim", "must be positive");
  if (model.mlp_hidden <= 0) fail("model.mlp_hidden", "must be positive");
  if (model.mlp_out <= 0) fail("model.mlp_out", "must be positive");
  for (int ch : model.pyramid_channels)
    if (ch <= 0) fail("model.pyramid_channels", "must be positive");
  if (model.spot_channels1 <= 0) fail("model.spot_channels1", "must be positive");
  if (model.spot_channels2 <= 0) fail("model.spot_channels2", "must be positive");
  if (!(optimizer.lr_initial > 0.0)) fail("optimizer.lr_initial", "must be positive");
  if (!(optimizer.lr_final > 0.0)) fail("optimizer.lr_final", "must be positive");
  if (optimizer.epochs <= 0) fail("optimizer.epochs", "must be positive");
  if (!(optimizer.adam_beta1 >= 0.0 && optimizer.adam_beta1 < 1.0))
    fail("optimizer.adam_beta1", "must be in [0, 1)");
  if (!(optimizer.adam_beta2 >= 0.0 && optimizer.adam_beta2 < 1.0))
    fail("optimizer.adam_beta2", "must be in [0, 1)");
  if (!(optimizer.adam_epsilon > 0.0)) fail("optimizer.adam_epsilon", "must be positive");
  if (optimizer.val_every <= 0) fail("optimizer.val_every", "must be positive");
  if (!(inference.conf_threshold >= 0.0 && inference.conf_threshold <= 1.0))
    fail("inference.conf_threshold", "must be in [0, 1]");
  if (!(inference.dedup_window_s >= 0.0)) fail("inference.dedup_window_s", "must be >= 0");
  if (metric.tolerances_s.empty()) fail("metric.tolerances_s", "must not be empty");
  for (std::size_t i = 0; i < metric.tolerances_s.size(); ++i) {
    if (!(metric.tolerances_s[i] > 0.0)) fail("metric.tolerances_s", "must be positive");
    if (i > 0 && !(metric.tolerances_s[i] > metric.tolerances_s[i - 1]))
      fail("metric.tolerances_s", "must be strictly ascending");
  }
  if (!(metric.game_bin_minutes > 0.0)) fail("metric.game_bin_minutes", "must be positive");
  if (metric.vicinity_edges_s.empty()) fail("metric.vicinity_edges_s", "must not be empty");
  for (std::size_t i = 1; i < metric.vicinity_edges_s.size(); ++i)
    if (!(metric.vicinity_edges_s[i] > metric.vicinity_edges_s[i - 1]))
      fail("metric.vicinity_edges_s", "must be strictly ascending");
  for (int c : highlights.reel_classes)
    if (c < 0 || c >= num_classes) fail("highlights.reel_classes", "class out of range");
  if (highlights.opportunity_class < 0 || highlights.opportunity_class >= num_classes)
    fail("highlights.opportunity_class", "class out of range");
  if (!(highlights.segment_threshold > 0.0 && highlights.segment_threshold < 1.0))
    fail("highlights.segment_threshold", "must be in (0, 1)");
  if (highlights.exclusion_frames < 0) fail("highlights.exclusion_frames", "must be >= 0");
  if (highlights.merge_gap_frames < 0) fail("highlights.merge_gap_frames", "must be >= 0");
  for (double eta : highlights.eta_grid)
    if (!(eta > 0.0 && eta < 1.0)) fail("highlights.eta_grid", "entries must be in (0, 1)");
}

SpottingConfig default_config(int num_classes) {
  if (num_classes <= 0) fail("num_classes", "must be positive");
  SpottingConfig cfg;
  cfg.num_classes = num_classes;
  cfg.slicing.clear();
  for (int c = 0; c < num_classes; ++c) cfg.slicing.push_back(kDefaultSlicing[c % 3]);
  cfg.alpha.assign(static_cast<std::size_t>(2 + num_classes), 1.0);
  cfg.alpha[1] = 5.0;
  return cfg;
}

SpottingConfig config_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  check_keys(root, "",
             {"num_classes", "chunk_frames", "fps", "num_predictions", "slicing",
              "slicing_seconds", "margin_max", "margin_min", "alpha", "beta", "lambda_seg",
              "class_features", "receptive_field", "model", "optimizer", "inference",
              "metric", "highlights", "ablation", "seed"});

  int num_classes = 3;
  read(root, "num_classes", num_classes, "");
  SpottingConfig cfg = default_config(num_classes);

  read(root, "chunk_frames", cfg.chunk_frames, "");
  read(root, "fps", cfg.fps, "");
  read(root, "num_predictions", cfg.num_predictions, "");
  if (root.contains("slicing") && root.contains("slicing_seconds"))
    fail("slicing", "give either slicing (frames) or slicing_seconds, not both");
  for (const char* key : {"slicing", "slicing_seconds"}) {
    if (!root.contains(key)) continue;
    const json& arr = root[key];
    if (!arr.is_array()) fail(key, "expected a list of tuples");
    const double scale = std::string(key) == "slicing" ? 1.0 : cfg.fps;
    cfg.slicing.clear();
    for (std::size_t i = 0; i < arr.size(); ++i)
      cfg.slicing.push_back(
          slicing_from_json(arr[i], std::string(key) + "[" + std::to_string(i) + "]", scale));
  }
  read(root, "margin_max", cfg.margins.max, "");
  read(root, "margin_min", cfg.margins.min, "");
  read(root, "alpha", cfg.alpha, "");
  read(root, "beta", cfg.beta, "");
  read(root, "lambda_seg", cfg.lambda_seg, "");
  read(root, "class_features", cfg.class_features, "");
  read(root, "receptive_field", cfg.receptive_field, "");
  read(root, "seed", cfg.seed, "");

  if (auto it = root.find("model"); it != root.end()) {
    check_keys(*it, "model",
               {"feature_dim", "mlp_hidden", "mlp_out", "pyramid_channels", "spot_channels1",
                "spot_channels2"});
    read(*it, "feature_dim", cfg.model.feature_dim, "model");
    read(*it, "mlp_hidden", cfg.model.mlp_hidden, "model");
    read(*it, "mlp_out", cfg.model.mlp_out, "model");
    read(*it, "pyramid_channels", cfg.model.pyramid_channels, "model");
    read(*it, "spot_channels1", cfg.model.spot_channels1, "model");
    read(*it, "spot_channels2", cfg.model.spot_channels2, "model");
  }
  if (auto it = root.find("optimizer"); it != root.end()) {
    check_keys(*it, "optimizer",
               {"lr_initial", "lr_final", "epochs", "adam_beta1", "adam_beta2",
                "adam_epsilon", "val_every"});
    read(*it, "lr_initial", cfg.optimizer.lr_initial, "optimizer");
    read(*it, "lr_final", cfg.optimizer.lr_final, "optimizer");
    read(*it, "epochs", cfg.optimizer.epochs, "optimizer");
    read(*it, "adam_beta1", cfg.optimizer.adam_beta1, "optimizer");
    read(*it, "adam_beta2", cfg.optimizer.adam_beta2, "optimizer");
    read(*it, "adam_epsilon", cfg.optimizer.adam_epsilon, "optimizer");
    read(*it, "val_every", cfg.optimizer.val_every, "optimizer");
  }
  if (auto it = root.find("inference"); it != root.end()) {
    check_keys(*it, "inference", {"conf_threshold", "dedup_window_s"});
    read(*it, "conf_threshold", cfg.inference.conf_threshold, "inference");
    read(*it, "dedup_window_s", cfg.inference.dedup_window_s, "inference");
  }
  if (auto it = root.find("metric"); it != root.end()) {
    check_keys(*it, "metric",
               {"tolerances_s", "half_window", "interpolation", "game_bin_minutes",
                "vicinity_edges_s"});
    read(*it, "tolerances_s", cfg.metric.tolerances_s, "metric");
    read(*it, "half_window", cfg.metric.half_window, "metric");
    std::string interp;
    read(*it, "interpolation", interp, "metric");
    if (interp == "eleven_point") {
      cfg.metric.interpolation = ApInterpolation::kElevenPoint;
    } else if (!interp.empty() && interp != "all_point") {
      fail("metric.interpolation", "expected all_point or eleven_point");
    }
    read(*it, "game_bin_minutes", cfg.metric.game_bin_minutes, "metric");
    read(*it, "vicinity_edges_s", cfg.metric.vicinity_edges_s, "metric");
  }
  if (auto it = root.find("highlights"); it != root.end()) {
    check_keys(*it, "highlights",
               {"clip_before_s", "clip_after_s", "reel_classes", "opportunity_class",
                "segment_threshold", "exclusion_frames", "merge_gap_frames",
                "opportunity_window_before", "opportunity_window_after", "eta_grid"});
    auto& h = cfg.highlights;
    read(*it, "clip_before_s", h.clip_before_s, "highlights");
    read(*it, "clip_after_s", h.clip_after_s, "highlights");
    read(*it, "reel_classes", h.reel_classes, "highlights");
    read(*it, "opportunity_class", h.opportunity_class, "highlights");
    read(*it, "segment_threshold", h.segment_threshold, "highlights");
    read(*it, "exclusion_frames", h.exclusion_frames, "highlights");
    read(*it, "merge_gap_frames", h.merge_gap_frames, "highlights");
    read(*it, "opportunity_window_before", h.opportunity_window_before, "highlights");
    read(*it, "opportunity_window_after", h.opportunity_window_after, "highlights");
    read(*it, "eta_grid", h.eta_grid, "highlights");
  }
  if (auto it = root.find("ablation"); it != root.end()) {
    check_keys(*it, "ablation", {"raw_binary_slicing", "use_matching"});
    read(*it, "raw_binary_slicing", cfg.ablation.raw_binary_slicing, "ablation");
    read(*it, "use_matching", cfg.ablation.use_matching, "ablation");
  }
  cfg.validate();
  return cfg;
}

SpottingConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string config_to_json_text(const SpottingConfig& cfg) {
  json slicing = json::array();
  for (const auto& k : cfg.slicing) slicing.push_back(slicing_to_json(k));
  const auto& h = cfg.highlights;
  json root = {
      {"num_classes", cfg.num_classes},
      {"chunk_frames", cfg.chunk_frames},
      {"fps", cfg.fps},
      {"num_predictions", cfg.num_predictions},
      {"slicing", slicing},
      {"margin_max", cfg.margins.max},
      {"margin_min", cfg.margins.min},
      {"alpha", cfg.alpha},
      {"beta", cfg.beta},
      {"lambda_seg", cfg.lambda_seg},
      {"class_features", cfg.class_features},
      {"receptive_field", cfg.receptive_field},
      {"model",
       {{"feature_dim", cfg.model.feature_dim},
        {"mlp_hidden", cfg.model.mlp_hidden},
        {"mlp_out", cfg.model.mlp_out},
        {"pyramid_channels", cfg.model.pyramid_channels},
        {"spot_channels1", cfg.model.spot_channels1},
        {"spot_channels2", cfg.model.spot_channels2}}},
      {"optimizer",
       {{"lr_initial", cfg.optimizer.lr_initial},
        {"lr_final", cfg.optimizer.lr_final},
        {"epochs", cfg.optimizer.epochs},
        {"adam_beta1", cfg.optimizer.adam_beta1},
        {"adam_beta2", cfg.optimizer.adam_beta2},
        {"adam_epsilon", cfg.optimizer.adam_epsilon},
        {"val_every", cfg.optimizer.val_every}}},
      {"inference",
       {{"conf_threshold", cfg.inference.conf_threshold},
        {"dedup_window_s", cfg.inference.dedup_window_s}}},
      {"metric",
       {{"tolerances_s", cfg.metric.tolerances_s},
        {"half_window", cfg.metric.half_window},
        {"interpolation", cfg.metric.interpolation == ApInterpolation::kAllPoint
                              ? "all_point"
                              : "eleven_point"},
        {"game_bin_minutes", cfg.metric.game_bin_minutes},
        {"vicinity_edges_s", cfg.metric.vicinity_edges_s}}},
      {"highlights",
       {{"clip_before_s", h.clip_before_s},
        {"clip_after_s", h.clip_after_s},
        {"reel_classes", h.reel_classes},
        {"opportunity_class", h.opportunity_class},
        {"segment_threshold", h.segment_threshold},
        {"exclusion_frames", h.exclusion_frames},
        {"merge_gap_frames", h.merge_gap_frames},
        {"opportunity_window_before", h.opportunity_window_before},
        {"opportunity_window_after", h.opportunity_window_after},
        {"eta_grid", h.eta_grid}}},
      {"ablation",
       {{"raw_binary_slicing", cfg.ablation.raw_binary_slicing},
        {"use_matching", cfg.ablation.use_matching}}},
      {"seed", cfg.seed},
  };
  return root.dump(2);
}

void save_config(const SpottingConfig& cfg, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write config " + path.string());
  out << config_to_json_text(cfg) << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

std::uint64_t config_hash(const SpottingConfig& cfg) {
  return fnv1a64(config_to_json_text(cfg));
}

}  // namespace ctxspot
