#pragma once

#include <random>
#include <string>
#include <vector>

#include "ctxspot/annotations.hpp"
#include "ctxspot/config.hpp"
#include "ctxspot/features.hpp"

namespace ctxspot {

/// N_F contiguous frames cut from a video, zero-padded past its bounds.
struct Chunk {
  FeatureMatrix features;
  /// Actions inside the chunk, frames relative to `start_frame`.
  std::vector<ActionEvent> actions;
  std::string video_id;
  /// First video frame covered; negative when the chunk starts before frame 0.
  int start_frame = 0;
  int padded_prefix = 0;
  int padded_suffix = 0;
  /// Index into the video's actions that generated the chunk; -1 for
  /// background chunks.
  int source_action = -1;

  bool is_background() const { return source_action < 0; }
};

/// Copies frames [start, start + length) of `features`, zero-filling outside
/// the video, and collects the actions that fall inside.
Chunk extract_chunk(const VideoAnnotations& ann, const FeatureSequence& features,
                    int start, int length);

/// One chunk per ground-truth action, placed so that the action lands at a
/// uniformly random offset, plus ceil(N_GT / C) background-only chunks.
/// Videos without actions yield no chunks.
std::vector<Chunk> sample_chunks(const VideoAnnotations& ann,
                                 const FeatureSequence& features,
                                 const SpottingConfig& cfg, std::mt19937_64& rng);

}  // namespace ctxspot
