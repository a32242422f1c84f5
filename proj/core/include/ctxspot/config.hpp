#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace ctxspot {

/// Per-class context slicing offsets, in frames. A valid tuple satisfies
/// k1 < k2 < 0 < k3 < k4.
struct SlicingParams {
  int k1 = -40;
  int k2 = -20;
  int k3 = 120;
  int k4 = 180;

  friend bool operator==(const SlicingParams&, const SlicingParams&) = default;
};

/// Strict ordering k1 < k2 < 0 < k3 < k4.
bool is_strictly_ordered(const SlicingParams& k) noexcept;

/// Throws ConfigError unless the tuple is strictly ordered. With
/// `allow_degenerate`, k1 == k2 and k3 == k4 are also accepted: this is the
/// raw binary slicing (-1, -1, 1, 1) used to ablate context slicing.
void validate_slicing(const SlicingParams& k, bool allow_degenerate = false);

/// Raw binary annotation slicing: only the action frame counts as positive.
inline constexpr SlicingParams kRawBinarySlicing{-1, -1, 1, 1};

struct Margins {
  double max = 0.9;
  double min = 0.1;
};

struct ModelSizes {
  int feature_dim = 16;
  int mlp_hidden = 32;
  int mlp_out = 16;
  std::array<int, 4> pyramid_channels{4, 8, 16, 32};
  int spot_channels1 = 32;
  int spot_channels2 = 16;

  friend bool operator==(const ModelSizes&, const ModelSizes&) = default;
};

struct OptimizerConfig {
  double lr_initial = 1e-3;
  double lr_final = 1e-6;
  int epochs = 300;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Validation Average-mAP is computed every `val_every` epochs and on the
  /// last epoch.
  int val_every = 10;
};

struct InferenceConfig {
  double conf_threshold = 0.5;
  /// Total width, in seconds, of the per-class duplicate suppression window.
  double dedup_window_s = 10.0;
};

enum class ApInterpolation { kAllPoint, kElevenPoint };

struct MetricConfig {
  std::vector<double> tolerances_s{5, 10, 15, 20, 25, 30, 35, 40, 45, 50, 55, 60};
  /// True: a prediction is within tolerance delta when |offset| <= delta / 2.
  /// False: when |offset| <= delta.
  bool half_window = true;
  ApInterpolation interpolation = ApInterpolation::kAllPoint;
  double game_bin_minutes = 5.0;
  std::vector<double> vicinity_edges_s{0, 10, 20, 30, 40, 50, 60};
};

struct HighlightsConfig {
  double clip_before_s = 15.0;
  double clip_after_s = 20.0;
  /// Classes whose spots become clips (goals and cards by default).
  std::vector<int> reel_classes{0, 1};
  /// Class whose segmentation curve drives opportunity detection.
  int opportunity_class = 0;
  double segment_threshold = 0.5;
  int exclusion_frames = 10;
  int merge_gap_frames = 5;
  /// Ground-truth opportunity window around the planted frame t:
  /// [t - window_before, t + window_after).
  int opportunity_window_before = 10;
  int opportunity_window_after = 20;
  std::vector<double> eta_grid{0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3};
};

/// Switches used to reproduce the loss ablations.
struct AblationConfig {
  bool raw_binary_slicing = false;
  bool use_matching = true;
};

/// All hyperparameters. Model sizes and epoch count are scaled down for
/// single-core training.
struct SpottingConfig {
  int num_classes = 3;
  int chunk_frames = 240;
  double fps = 2.0;
  int num_predictions = 5;
  /// One tuple per class, in frames.
  std::vector<SlicingParams> slicing{{-40, -20, 120, 180},
                                     {-40, -20, 20, 40},
                                     {-80, -40, 20, 40}};
  Margins margins;
  /// 2 + num_classes weights: confidence, location, one per class.
  std::vector<double> alpha{1.0, 5.0, 1.0, 1.0, 1.0};
  double beta = 0.5;
  double lambda_seg = 1.5;
  int class_features = 16;
  int receptive_field = 80;
  ModelSizes model;
  OptimizerConfig optimizer;
  InferenceConfig inference;
  MetricConfig metric;
  HighlightsConfig highlights;
  AblationConfig ablation;
  std::uint64_t seed = 42;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;

  /// Slicing tuple in effect for class `c` (raw binary under ablation).
  SlicingParams slicing_for(int c) const;

  /// Temporal kernel widths of the pyramid: r/7, r/3, r/2, r (at least 1).
  std::array<int, 4> pyramid_kernels() const;
};

/// Defaults for `num_classes` classes: slicing tuples cycle through
/// goal, card, substitution; alpha is 1 everywhere except the location (5).
SpottingConfig default_config(int num_classes = 3);

/// Parses a JSON config. Omitted fields keep their defaults; slicing may be
/// given in frames ("slicing") or seconds ("slicing_seconds", scaled by fps).
SpottingConfig config_from_json_text(const std::string& text);
SpottingConfig load_config(const std::filesystem::path& path);

std::string config_to_json_text(const SpottingConfig& cfg);
void save_config(const SpottingConfig& cfg, const std::filesystem::path& path);

/// Stable 64-bit hash of the canonical JSON form.
std::uint64_t config_hash(const SpottingConfig& cfg);

}  // namespace ctxspot
