#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "ctxspot/annotations.hpp"
#include "ctxspot/config.hpp"

namespace ctxspot {

using ShiftMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Time-shift encoding of a frame range: entry (i, c) is the signed frame
/// offset of frame `first_frame + i` from the action of class c that
/// dominates it.
struct TseMap {
  int first_frame = 0;
  ShiftMatrix values;
  /// Action frames used per class, ascending.
  std::vector<std::vector<int>> action_frames;
};

/// Selects the time-shift of `frame` from its closest past and future
/// actions of one class. Past shifts are >= 0, future shifts < 0; with no
/// action at all the result is k1. Throws PreconditionError when
/// past > frame or future <= frame, ConfigError on invalid slicing.
int tse_frame(int frame, std::optional<int> past_action,
              std::optional<int> future_action, const SlicingParams& k);

/// Encodes every frame of the video.
TseMap tse_video(const VideoAnnotations& ann, const SpottingConfig& cfg);

/// Encodes frames [first_frame, first_frame + count). Frames outside the
/// video follow the same rules (used for zero-padded chunk borders).
TseMap tse_range(const VideoAnnotations& ann, const SpottingConfig& cfg,
                 int first_frame, int count);

}  // namespace ctxspot
