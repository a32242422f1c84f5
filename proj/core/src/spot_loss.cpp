#include "ctxspot/spot_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ctxspot/errors.hpp"

namespace ctxspot {

ActionMatrix yolo_encode(std::span<const ActionEvent> actions, int chunk_frames,
                         int num_classes) {
  if (chunk_frames <= 0 || num_classes <= 0)
    throw PreconditionError("yolo_encode needs positive chunk length and class count");
  std::vector<ActionEvent> sorted(actions.begin(), actions.end());
  std::sort(sorted.begin(), sorted.end(), chronological);
  ActionMatrix y = ActionMatrix::Zero(static_cast<Eigen::Index>(sorted.size()), 2 + num_classes);
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const auto& a = sorted[i];
    if (a.frame < 0 || a.frame >= chunk_frames)
      throw PreconditionError("action frame " + std::to_string(a.frame) + " outside chunk");
    if (a.class_index < 0 || a.class_index >= num_classes)
      throw PreconditionError("action class " + std::to_string(a.class_index) +
                              " out of range");
    const auto r = static_cast<Eigen::Index>(i);
    y(r, 0) = 1.0;
    y(r, 1) = static_cast<double>(a.frame) / chunk_frames;
    y(r, 2 + a.class_index) = 1.0;
  }
  return y;
}

Matching iterative_match(std::span<const double> gt_locs, std::span<const double> pred_locs) {
  const int n_gt = static_cast<int>(gt_locs.size());
  const int n_pred = static_cast<int>(pred_locs.size());
  if (n_pred < n_gt)
    throw PreconditionError("more ground truths (" + std::to_string(n_gt) +
                            ") than predictions (" + std::to_string(n_pred) + ")");
  std::vector<char> gt_left(n_gt, 1), pred_left(n_pred, 1);
  std::vector<int> pred_of(n_gt, -1);
  std::vector<int> nearest_pred(n_gt);
  int remaining = n_gt;
  Matching m;
  while (remaining > 0) {
    ++m.iterations;
    for (int g = 0; g < n_gt; ++g) {
      if (!gt_left[g]) continue;
      double best = std::numeric_limits<double>::infinity();
      for (int p = 0; p < n_pred; ++p) {
        if (!pred_left[p]) continue;
        const double d = std::abs(gt_locs[g] - pred_locs[p]);
        if (d < best) {
          best = d;
          nearest_pred[g] = p;
        }
      }
    }
    for (int p = 0; p < n_pred; ++p) {
      if (!pred_left[p]) continue;
      int chosen = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int g = 0; g < n_gt; ++g) {
        if (!gt_left[g] || nearest_pred[g] != p) continue;
        const double d = std::abs(gt_locs[g] - pred_locs[p]);
        if (d < best) {
          best = d;
          chosen = g;
        }
      }
      if (chosen < 0) continue;
      pred_of[chosen] = p;
      gt_left[chosen] = 0;
      pred_left[p] = 0;
      --remaining;
    }
  }
  for (int g = 0; g < n_gt; ++g) m.pairs.emplace_back(g, pred_of[g]);
  for (int p = 0; p < n_pred; ++p)
    if (pred_left[p]) m.unmatched_pred_rows.push_back(p);
  return m;
}

Matching identity_match(int num_gt, int num_pred) {
  if (num_pred < num_gt) throw PreconditionError("more ground truths than predictions");
  Matching m;
  for (int g = 0; g < num_gt; ++g) m.pairs.emplace_back(g, g);
  for (int p = num_gt; p < num_pred; ++p) m.unmatched_pred_rows.push_back(p);
  m.iterations = num_gt > 0 ? 1 : 0;
  return m;
}

namespace {

void check(const ActionMatrix& y, const PredictionMatrix& y_hat, const Matching& m,
           std::span<const double> alpha) {
  if (y.rows() > 0 && y.cols() != y_hat.cols())
    throw PreconditionError("ground truth and prediction widths differ");
  if (static_cast<Eigen::Index>(alpha.size()) != y_hat.cols())
    throw PreconditionError("alpha must have one weight per column");
  if (static_cast<Eigen::Index>(m.pairs.size()) != y.rows())
    throw PreconditionError("matching does not cover every ground truth");
  for (const auto& [g, p] : m.pairs)
    if (g < 0 || g >= y.rows() || p < 0 || p >= y_hat.rows())
      throw PreconditionError("matching refers to a missing row");
  for (int p : m.unmatched_pred_rows)
    if (p < 0 || p >= y_hat.rows()) throw PreconditionError("matching refers to a missing row");
}

}  // namespace

double spotting_loss(const ActionMatrix& y, const PredictionMatrix& y_hat, const Matching& m,
                     std::span<const double> alpha, double beta) {
  check(y, y_hat, m, alpha);
  double loss = 0.0;
  for (const auto& [g, p] : m.pairs)
    for (Eigen::Index j = 0; j < y.cols(); ++j) {
      const double e = y(g, j) - y_hat(p, j);
      loss += alpha[j] * e * e;
    }
  for (int p : m.unmatched_pred_rows) loss += beta * y_hat(p, 0) * y_hat(p, 0);
  return loss;
}

PredictionMatrix spotting_grad(const ActionMatrix& y, const PredictionMatrix& y_hat,
                               const Matching& m, std::span<const double> alpha, double beta) {
  check(y, y_hat, m, alpha);
  PredictionMatrix g = PredictionMatrix::Zero(y_hat.rows(), y_hat.cols());
  for (const auto& [gt, p] : m.pairs)
    for (Eigen::Index j = 0; j < y.cols(); ++j)
      g(p, j) = -2.0 * alpha[j] * (y(gt, j) - y_hat(p, j));
  for (int p : m.unmatched_pred_rows) g(p, 0) = 2.0 * beta * y_hat(p, 0);
  return g;
}

}  // namespace ctxspot
