#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ctxspot/config.hpp"
#include "ctxspot/features.hpp"
#include "ctxspot/network.hpp"

namespace ctxspot {

/// A spotting prediction in absolute video coordinates.
struct Spot {
  int class_index = 0;
  int frame = 0;
  double confidence = 0.0;

  friend bool operator==(const Spot&, const Spot&) = default;
};

struct VideoPrediction {
  std::string video_id;
  double fps = 2.0;
  int num_frames = 0;
  std::vector<Spot> spots;
  /// num_frames x C segmentation curves.
  Eigen::MatrixXd seg_curves;
};

/// Per class, keeps the most confident spot and drops every other spot of the
/// same class within window_frames / 2 of a kept one. Result is sorted by
/// frame, then class.
std::vector<Spot> deduplicate_spots(std::vector<Spot> spots, double window_frames);

/// Maps one chunk's predictions to absolute spots (before thresholding).
std::vector<Spot> chunk_spots(const PredictionMatrix& predictions, int chunk_start,
                              int chunk_frames, int num_frames);

/// Splits the video into consecutive N_F chunks (last one zero-padded),
/// concatenates segmentation curves, pools spots above the confidence
/// threshold and deduplicates them. Throws PreconditionError when the
/// parameters are non-finite or the feature width does not match.
VideoPrediction predict_video(const FeatureSequence& features,
                              const ModelParams<float>& params,
                              const SpottingConfig& cfg);

/// "<dir>/<video_id>.spots.json" and "<dir>/<video_id>.seg.csv".
void save_prediction(const VideoPrediction& pred, const std::filesystem::path& dir);
VideoPrediction load_prediction(const std::filesystem::path& spots_json);

}  // namespace ctxspot
