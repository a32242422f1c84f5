#pragma once

#include <Eigen/Core>

#include "ctxspot/config.hpp"
#include "ctxspot/tse.hpp"

namespace ctxspot {

/// Log guard. The -ln(1 - a p) pieces use min(p, 1 - kScoreEpsilon), the
/// just-after piece uses max(p, kScoreEpsilon); interior values are exact.
inline constexpr double kScoreEpsilon = 1e-7;

/// Context-aware loss L(p, s) of a segmentation score p for a frame with
/// time-shift s. Six pieces, delimited by the slicing tuple:
///
///   s <= k1          -ln(1 - p)
///   k1 < s <= k2     -ln(1 - (k2 - s) / (k2 - k1) * p)
///   k2 < s < 0       0
///   0 <= s < k3      -ln(s / k3 + (k3 - s) / k3 * p)
///   k3 <= s < k4     -ln(1 - (s - k3) / (k4 - k3) * p)
///   s >= k4          -ln(1 - p)
///
/// Throws PreconditionError when p is outside [0, 1].
double loss_point(double p, int s, const SlicingParams& k);

/// Margin-clamped loss: max(0, L + ln(tau_max)) for 0 <= s < k3 and
/// max(0, L + ln(1 - tau_min)) elsewhere.
double loss_point_clamped(double p, int s, const SlicingParams& k, const Margins& m);

/// d/dp of the clamped loss. Zero wherever the clamp is active (including its
/// boundary) and wherever the log guard moved p.
double grad_point(double p, int s, const SlicingParams& k, const Margins& m);

/// Mean clamped loss over an N_F x C chunk. Throws PreconditionError on a
/// shape mismatch.
double seg_loss_chunk(const Eigen::MatrixXd& scores, const ShiftMatrix& shifts,
                      const SpottingConfig& cfg);

/// Gradient of seg_loss_chunk with respect to every score.
Eigen::MatrixXd seg_loss_chunk_grad(const Eigen::MatrixXd& scores,
                                    const ShiftMatrix& shifts,
                                    const SpottingConfig& cfg);

}  // namespace ctxspot
