#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "ctxspot/annotations.hpp"

namespace ctxspot {

/// N_GT x (2 + C): presence (1), location frame / N_F, one-hot class.
using ActionMatrix = Eigen::MatrixXd;
/// N_pred x (2 + C): confidence, location, class distribution.
using PredictionMatrix = Eigen::MatrixXd;

/// Result of pairing ground-truth rows with prediction rows.
struct Matching {
  /// (gt_row, pred_row), ordered by gt_row; covers every gt row once.
  std::vector<std::pair<int, int>> pairs;
  /// Prediction rows left unpaired, ascending.
  std::vector<int> unmatched_pred_rows;
  /// Rounds of the iterative procedure (0 when there is no ground truth).
  int iterations = 0;

  /// pred row paired with `gt_row`.
  int pred_for(int gt_row) const { return pairs.at(gt_row).second; }
};

/// YOLO-like encoding of the actions of a chunk, chronological rows.
/// Throws PreconditionError on an out-of-range class or frame.
ActionMatrix yolo_encode(std::span<const ActionEvent> actions, int chunk_frames,
                         int num_classes);

/// Iterative one-to-one matching on locations. Each round, every remaining
/// ground truth points to its nearest remaining prediction; each prediction
/// that is pointed at takes the nearest of the ground truths pointing to it,
/// and the pair is removed. Ties resolve to the lower index. Requires
/// |pred| >= |gt| (PreconditionError otherwise).
Matching iterative_match(std::span<const double> gt_locs,
                         std::span<const double> pred_locs);

/// gt row i paired with prediction row i (the "no matching" ablation).
Matching identity_match(int num_gt, int num_pred);

/// Weighted squared error between matched rows plus beta times the squared
/// confidence of unmatched rows.
double spotting_loss(const ActionMatrix& y, const PredictionMatrix& y_hat,
                     const Matching& m, std::span<const double> alpha, double beta);

/// d spotting_loss / d y_hat with the matching held fixed.
PredictionMatrix spotting_grad(const ActionMatrix& y, const PredictionMatrix& y_hat,
                               const Matching& m, std::span<const double> alpha,
                               double beta);

inline double total_loss(double spot_loss, double seg_loss, double lambda_seg) {
  return spot_loss + lambda_seg * seg_loss;
}

}  // namespace ctxspot
