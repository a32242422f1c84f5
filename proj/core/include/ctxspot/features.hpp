#pragma once

#include <filesystem>
#include <string>

#include <Eigen/Core>

namespace ctxspot {

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Per-frame feature vectors of one video, one row per frame.
struct FeatureSequence {
  std::string video_id;
  FeatureMatrix values;

  int num_frames() const { return static_cast<int>(values.rows()); }
  int feature_dim() const { return static_cast<int>(values.cols()); }
};

/// Sidecar path for a feature file: "x.features.bin" -> "x.features.json".
std::filesystem::path feature_sidecar_path(const std::filesystem::path& bin_path);

/// Reads flat little-endian float32 values (row-major) plus the JSON sidecar
/// {"rows", "cols", "video_id"}. Throws FormatError on shape mismatch or
/// non-finite values, IoError when a file cannot be read.
FeatureSequence load_features(const std::filesystem::path& bin_path);

/// Writes the binary file and its sidecar.
void save_features(const FeatureSequence& seq, const std::filesystem::path& bin_path);

}  // namespace ctxspot
