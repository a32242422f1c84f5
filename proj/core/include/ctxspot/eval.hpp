#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxspot/annotations.hpp"
#include "ctxspot/config.hpp"
#include "ctxspot/inference.hpp"

namespace ctxspot {

/// Predictions and ground truth of one video.
struct VideoSpots {
  std::string video_id;
  double fps = 2.0;
  std::vector<Spot> predictions;
  std::vector<ActionEvent> ground_truth;
};

struct ToleranceMatch {
  /// Indices into the prediction list, by descending confidence (stable).
  std::vector<int> order;
  /// Per prediction (input order): index of the claimed ground truth, or -1.
  std::vector<int> claimed_gt;
  /// Per ground truth: whether any prediction claimed it.
  std::vector<bool> gt_claimed;
  int num_tp = 0;
  int num_fp = 0;
  int num_fn = 0;

  bool is_tp(int pred) const { return claimed_gt[pred] >= 0; }
};

/// Greedy tolerance matching within one video: predictions by descending
/// confidence each claim the nearest unclaimed same-class ground truth whose
/// offset is at most the tolerance half-width (delta / 2, or delta when
/// `half_window` is false).
ToleranceMatch match_tolerance(std::span<const Spot> preds,
                               std::span<const ActionEvent> gts, double delta_s,
                               double fps, bool half_window = true);

struct LabeledPrediction {
  double confidence = 0.0;
  bool tp = false;
};

/// Area under the precision-recall curve of labeled predictions (sorted by
/// descending confidence, stable). All-point: precision envelope made
/// non-increasing, summed over recall steps. Eleven-point: mean of the
/// envelope at recall 0, 0.1, ..., 1. Returns 0 when n_gt == 0.
double average_precision(std::span<const LabeledPrediction> preds, int n_gt,
                         ApInterpolation interp = ApInterpolation::kAllPoint);

struct MapResult {
  std::vector<double> tolerances_s;
  /// mAP per tolerance.
  std::vector<double> map;
  /// per_class_ap[t][c]; nullopt when class c has neither ground truth nor
  /// predictions (skipped from the mean).
  std::vector<std::vector<std::optional<double>>> per_class_ap;
  double average_map = 0.0;
};

/// mAP per tolerance over all videos, and their mean (uniform-grid AUC).
MapResult average_map(std::span<const VideoSpots> videos, int num_classes,
                      const MetricConfig& metric);

struct ClassCurvePoint {
  double tolerance_s = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  double precision = 1.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassCurve {
  int class_index = 0;
  double threshold = 0.0;
  std::vector<ClassCurvePoint> points;
};

/// Confusion counts, precision, recall and F1 per class and tolerance, using
/// predictions with confidence >= thresholds[c]. With no retained prediction
/// precision is reported as 1; with no ground truth recall is reported as 1.
std::vector<ClassCurve> per_class_curves(std::span<const VideoSpots> videos,
                                         int num_classes, std::span<const double> thresholds,
                                         const MetricConfig& metric);

/// Per-class thresholds on a 0.01 grid maximizing the mean F1 over the
/// tolerance sweep (ties keep the lowest threshold).
std::vector<double> optimize_thresholds(std::span<const VideoSpots> videos,
                                        int num_classes, const MetricConfig& metric);

struct BinResult {
  double lower = 0.0;
  /// +infinity for the open last bin.
  double upper = 0.0;
  int num_actions = 0;
  /// nullopt for empty bins.
  std::optional<double> average_map;
};

/// Ground truths binned by their time in the video (bins of `bin_minutes`).
/// A true positive follows the ground truth it claimed; a false positive
/// follows its nearest same-class ground truth (or its own time when the
/// video has none of that class).
std::vector<BinResult> bin_by_game_time(std::span<const VideoSpots> videos,
                                        int num_classes, const MetricConfig& metric);

/// Ground truths binned by the distance in seconds to the closest other
/// ground truth of the same video, any class. Edges e0 < e1 < ... give bins
/// [e_i, e_{i+1}) and a final open bin [e_last, inf). False positives follow
/// their nearest same-class ground truth, else the nearest of any class;
/// those of videos without ground truth are dropped.
std::vector<BinResult> bin_by_vicinity(std::span<const VideoSpots> videos,
                                       int num_classes, const MetricConfig& metric);

struct EvalReport {
  MapResult map;
  std::vector<ClassCurve> curves;
  std::vector<BinResult> game_time_bins;
  std::vector<BinResult> vicinity_bins;
  int total_ground_truth = 0;
};

EvalReport evaluate(std::span<const VideoSpots> videos, int num_classes,
                    const MetricConfig& metric, std::span<const double> thresholds);

}  // namespace ctxspot
