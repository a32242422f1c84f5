#include "ctxspot/seg_loss.hpp"

#include <algorithm>
#include <cmath>

#include "ctxspot/errors.hpp"

namespace ctxspot {
namespace {

enum class Piece { kFar, kJustBeforeRamp, kIgnored, kJustAfter, kTransition };

// Coefficient a of the -ln(1 - a p) pieces.
double piece_coefficient(Piece piece, int s, const SlicingParams& k) {
  switch (piece) {
    case Piece::kFar:
      return 1.0;
    case Piece::kJustBeforeRamp:
      return static_cast<double>(k.k2 - s) / (k.k2 - k.k1);
    case Piece::kTransition:
      return static_cast<double>(s - k.k3) / (k.k4 - k.k3);
    default:
      return 0.0;
  }
}

Piece piece_of(int s, const SlicingParams& k) {
  if (s <= k.k1 || s >= k.k4) return Piece::kFar;
  if (s <= k.k2) return Piece::kJustBeforeRamp;
  if (s < 0) return Piece::kIgnored;
  if (s < k.k3) return Piece::kJustAfter;
  return Piece::kTransition;
}

void check_inputs(double p, const SlicingParams& k) {
  validate_slicing(k, /*allow_degenerate=*/true);
  if (!(p >= 0.0 && p <= 1.0)) throw PreconditionError("segmentation score outside [0, 1]");
}

// Only the side where the active log argument can vanish is guarded: p <= 1 - eps
// for the -ln(1 - a p) pieces, p >= eps for the just-after piece.
double guarded(double p, Piece piece) {
  return piece == Piece::kJustAfter ? std::max(p, kScoreEpsilon)
                                    : std::min(p, 1.0 - kScoreEpsilon);
}

bool in_guard(double p, Piece piece) { return guarded(p, piece) != p; }

double margin_offset(int s, const SlicingParams& k, const Margins& m) {
  return (s >= 0 && s < k.k3) ? std::log(m.max) : std::log1p(-m.min);
}

double raw_loss(double p, int s, const SlicingParams& k) {
  const Piece piece = piece_of(s, k);
  const double q = guarded(p, piece);
  switch (piece) {
    case Piece::kIgnored:
      return 0.0;
    case Piece::kJustAfter:
      return -std::log((s + (k.k3 - s) * q) / k.k3);
    default:
      return -std::log1p(-piece_coefficient(piece, s, k) * q);
  }
}

}  // namespace

double loss_point(double p, int s, const SlicingParams& k) {
  check_inputs(p, k);
  return raw_loss(p, s, k);
}

double loss_point_clamped(double p, int s, const SlicingParams& k, const Margins& m) {
  check_inputs(p, k);
  return std::max(0.0, raw_loss(p, s, k) + margin_offset(s, k, m));
}

double grad_point(double p, int s, const SlicingParams& k, const Margins& m) {
  check_inputs(p, k);
  const Piece piece = piece_of(s, k);
  if (in_guard(p, piece)) return 0.0;
  if (raw_loss(p, s, k) + margin_offset(s, k, m) <= 0.0) return 0.0;
  switch (piece) {
    case Piece::kIgnored:
      return 0.0;
    case Piece::kJustAfter: {
      const double b = static_cast<double>(k.k3 - s) / k.k3;
      return -b / (static_cast<double>(s) / k.k3 + b * p);
    }
    default: {
      const double a = piece_coefficient(piece, s, k);
      return a / (1.0 - a * p);
    }
  }
}

namespace {

void check_shapes(const Eigen::MatrixXd& scores, const ShiftMatrix& shifts,
                  const SpottingConfig& cfg) {
  if (scores.rows() != shifts.rows() || scores.cols() != shifts.cols())
    throw PreconditionError("score and time-shift matrices differ in shape");
  if (scores.cols() != cfg.num_classes)
    throw PreconditionError("score matrix has the wrong number of classes");
  if (scores.rows() == 0) throw PreconditionError("empty score matrix");
}

}  // namespace

double seg_loss_chunk(const Eigen::MatrixXd& scores, const ShiftMatrix& shifts,
                      const SpottingConfig& cfg) {
  check_shapes(scores, shifts, cfg);
  double sum = 0.0;
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const SlicingParams k = cfg.slicing_for(static_cast<int>(c));
    for (Eigen::Index i = 0; i < scores.rows(); ++i)
      sum += loss_point_clamped(scores(i, c), shifts(i, c), k, cfg.margins);
  }
  return sum / static_cast<double>(scores.size());
}

Eigen::MatrixXd seg_loss_chunk_grad(const Eigen::MatrixXd& scores, const ShiftMatrix& shifts,
                                    const SpottingConfig& cfg) {
  check_shapes(scores, shifts, cfg);
  Eigen::MatrixXd g(scores.rows(), scores.cols());
  const double scale = 1.0 / static_cast<double>(scores.size());
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const SlicingParams k = cfg.slicing_for(static_cast<int>(c));
    for (Eigen::Index i = 0; i < scores.rows(); ++i)
      g(i, c) = scale * grad_point(scores(i, c), shifts(i, c), k, cfg.margins);
  }
  return g;
}

}  // namespace ctxspot
