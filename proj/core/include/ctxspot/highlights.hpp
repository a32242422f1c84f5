#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctxspot/annotations.hpp"
#include "ctxspot/config.hpp"
#include "ctxspot/inference.hpp"

namespace ctxspot {

/// Inclusive frame range with the peak score inside it.
struct FrameInterval {
  int first = 0;
  int last = 0;
  double peak = 0.0;

  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

enum class ClipSource { kSpot, kSegmentation };

struct HighlightClip {
  double start_s = 0.0;
  double end_s = 0.0;
  ClipSource source = ClipSource::kSpot;
  int class_index = 0;
  /// Spot confidence or peak segmentation score.
  double score = 0.0;
};

/// Runs of frames whose score is >= eta, merged across gaps shorter than
/// `merge_gap` frames, minus runs that contain an action frame or lie within
/// `exclusion` frames of one.
std::vector<FrameInterval> detect_opportunity_segments(std::span<const double> curve,
                                                       double eta,
                                                       std::span<const int> action_frames,
                                                       int exclusion, int merge_gap);

/// Clips [t - before, t + after] for spots of the reel classes and for the
/// segmentation intervals, clamped at 0, merged when overlapping, sorted.
std::vector<HighlightClip> build_reel(std::span<const Spot> spots,
                                      std::span<const FrameInterval> intervals,
                                      double fps, const HighlightsConfig& cfg);

struct PrecisionRow {
  double eta = 0.0;
  int inspected = 0;
  int true_positives = 0;
  /// 1 when nothing is inspected.
  double precision = 1.0;
};

struct PrecisionTable {
  /// False when no video carries opportunity annotations.
  bool evaluable = false;
  std::vector<PrecisionRow> rows;
};

/// Segmentation curve of one video (opportunity class) with its annotations.
struct HighlightInput {
  std::vector<double> curve;
  VideoAnnotations annotations;
};

/// For each eta, detected segments count as true positives when they
/// overlap a planted opportunity window of the opportunity class.
PrecisionTable precision_vs_threshold(std::span<const HighlightInput> videos,
                                      const HighlightsConfig& cfg);

std::string clip_source_name(ClipSource s);

}  // namespace ctxspot
