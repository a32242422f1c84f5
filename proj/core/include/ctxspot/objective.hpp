#pragma once

#include <span>

#include "ctxspot/chunking.hpp"
#include "ctxspot/config.hpp"
#include "ctxspot/network.hpp"
#include "ctxspot/spot_loss.hpp"
#include "ctxspot/tse.hpp"

namespace ctxspot {

/// Supervision for one chunk: time-shifts for the segmentation loss and the
/// YOLO-like matrix for the spotting loss.
struct ChunkTargets {
  ShiftMatrix shifts;
  ActionMatrix actions;
};

/// Builds targets for a chunk. The time-shift encoding of the whole video is
/// sliced at the chunk position (padded frames use the same rules).
ChunkTargets make_targets(const Chunk& chunk, const VideoAnnotations& ann,
                          const SpottingConfig& cfg);

struct LossBreakdown {
  double total = 0.0;
  double seg = 0.0;
  double spot = 0.0;
};

/// Forward pass, combined loss and (optionally) backward pass for one chunk.
/// When `grad` is non-empty, `grad_scale` times the parameter gradient of the
/// total loss is added to it.
template <typename T>
LossBreakdown chunk_objective(const ModelParams<T>& params, const RowMatrix<T>& input,
                              const ChunkTargets& targets, const SpottingConfig& cfg,
                              std::span<T> grad = {}, double grad_scale = 1.0);

}  // namespace ctxspot
