#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "ctxspot/config.hpp"

namespace ctxspot {

struct GradCheckResult {
  std::size_t num_checked = 0;
  double worst_rel_error = 0.0;
  /// Where the worst error occurred (block name and index, or a sample label).
  std::string worst_location;
  double tolerance = 0.0;
  bool passed = false;
};

/// |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor);

/// Smallest configuration of the full network: N_F=8, C=2, f=4, D=4,
/// N_pred=2, r=7, with slicing scaled to the chunk.
SpottingConfig tiny_gradcheck_config();

/// Central differences over every parameter of the network, in double
/// precision, on a random chunk with two actions. Parameters are drawn from
/// float, as in training.
GradCheckResult model_gradcheck(const SpottingConfig& cfg, std::uint64_t seed,
                                double step = 1e-4, double tolerance = 1e-3,
                                double floor = 1e-6);

/// grad_point against central differences (steps `step` and `step` / 2,
/// Richardson-extrapolated) on random (p, s, K) samples,
/// skipping samples within `boundary_gap` of a clamp activation boundary or of
/// the score guard.
GradCheckResult seg_loss_gradcheck(int samples, std::uint64_t seed, double step = 1e-6,
                                   double tolerance = 1e-6, double boundary_gap = 1e-4);

}  // namespace ctxspot
