#pragma once

#include <filesystem>
#include <vector>

#include "ctxspot/annotations.hpp"
#include "ctxspot/features.hpp"

namespace ctxspot {

struct LabeledVideo {
  VideoAnnotations annotations;
  FeatureSequence features;
};

struct Dataset {
  std::vector<LabeledVideo> train;
  std::vector<LabeledVideo> val;
};

/// Loads every "<id>.json" annotation file of `dir` together with its
/// "<id>.features.bin", sorted by video id. Throws FormatError when the two
/// disagree on video id or frame count.
std::vector<LabeledVideo> load_split(const std::filesystem::path& dir);

/// Annotations only (no features), sorted by video id.
std::vector<VideoAnnotations> load_annotation_dir(const std::filesystem::path& dir);

}  // namespace ctxspot
