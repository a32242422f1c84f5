#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ctxspot/errors.hpp"
#include "ctxspot/gradcheck.hpp"
#include "ctxspot/seg_loss.hpp"

namespace ctxspot {
namespace {

constexpr SlicingParams kGoal{-40, -20, 120, 180};
const Margins kMargins{0.9, 0.1};

// Reference values below were evaluated with 40-digit arithmetic.
constexpr double kLn2 = 0.69314718055994530942;
constexpr double kLn4Over3 = 0.28768207245178092744;
constexpr double kLn2MinusLn10Over9 = 0.58778666490211900819;
constexpr double kClampedQuarter = 0.18232155679395462621;  // ln(4/3) - ln(10/9)

TEST(SegLoss, WorkedValues) {
  EXPECT_EQ(loss_point(0.37, -10, kGoal), 0.0);
  EXPECT_NEAR(loss_point(1.0, 0, kGoal), 0.0, 1e-12);
  EXPECT_NEAR(loss_point(0.5, -50, kGoal), kLn2, 1e-12);
  EXPECT_NEAR(loss_point(0.5, -30, kGoal), kLn4Over3, 1e-12);
  EXPECT_NEAR(loss_point(0.5, 60, kGoal), kLn4Over3, 1e-12);
}

TEST(SegLoss, ClampedValues) {
  EXPECT_NEAR(loss_point_clamped(0.9, 0, kGoal, kMargins), 0.0, 1e-12);
  for (int s : {-40, -41, -500, 180, 400})
    EXPECT_NEAR(loss_point_clamped(0.05, s, kGoal, kMargins), 0.0, 1e-12) << s;
  EXPECT_NEAR(loss_point_clamped(0.5, -50, kGoal, kMargins), kLn2MinusLn10Over9, 1e-12);
}

TEST(SegLoss, Gradients) {
  EXPECT_NEAR(grad_point(0.5, -50, kGoal, kMargins), 2.0, 1e-12);
  EXPECT_NEAR(grad_point(0.5, 0, kGoal, kMargins), -2.0, 1e-12);
  EXPECT_EQ(grad_point(0.95, 0, kGoal, kMargins), 0.0);
  EXPECT_EQ(grad_point(0.05, -50, kGoal, kMargins), 0.0);
  EXPECT_EQ(grad_point(0.5, -10, kGoal, kMargins), 0.0);
}

TEST(SegLoss, ScoreOutsideUnitIntervalRejected) {
  EXPECT_THROW(loss_point(-0.01, 0, kGoal), PreconditionError);
  EXPECT_THROW(loss_point(1.01, 0, kGoal), PreconditionError);
  EXPECT_THROW(loss_point(std::nan(""), 0, kGoal), PreconditionError);
}

TEST(SegLoss, ZeroScoreAtActionIsFinite) {
  EXPECT_TRUE(std::isfinite(loss_point(0.0, 0, kGoal)));
  EXPECT_TRUE(std::isfinite(loss_point(1.0, -100, kGoal)));
}

TEST(SegLoss, ChunkExamples) {
  SpottingConfig cfg = default_config(1);
  cfg.slicing = {kGoal};
  cfg.chunk_frames = 2;
  Eigen::MatrixXd p(2, 1);
  p << 0.5, 0.5;
  ShiftMatrix s(2, 1);
  s << -50, -30;
  EXPECT_NEAR(kClampedQuarter, loss_point_clamped(0.5, -30, kGoal, kMargins), 1e-12);
  EXPECT_NEAR(seg_loss_chunk(p, s, cfg), 0.3850541108480368172, 1e-12);

  Eigen::MatrixXd one(1, 1);
  one << 0.3;
  ShiftMatrix s1(1, 1);
  s1 << 70;
  EXPECT_NEAR(seg_loss_chunk(one, s1, cfg), loss_point_clamped(0.3, 70, kGoal, kMargins), 1e-15);

  ShiftMatrix wrong(3, 1);
  wrong.setZero();
  EXPECT_THROW(seg_loss_chunk(p, wrong, cfg), PreconditionError);
}

TEST(SegLoss, SatisfiedMarginsGiveZeroChunk) {
  SpottingConfig cfg = default_config(1);
  cfg.slicing = {kGoal};
  ShiftMatrix s(6, 1);
  s << -100, -30, -5, 0, 60, 150;
  Eigen::MatrixXd p(6, 1);
  p << 0.05, 0.0, 0.7, 0.95, 0.99, 0.0;
  EXPECT_NEAR(seg_loss_chunk(p, s, cfg), 0.0, 1e-15);
  EXPECT_TRUE(seg_loss_chunk_grad(p, s, cfg).isZero(0.0));
}

TEST(SegLoss, ChunkGradientIsMeanOfPointGradients) {
  SpottingConfig cfg = default_config(2);
  ShiftMatrix s(3, 2);
  s << -50, 10, 0, -30, 130, 200;
  Eigen::MatrixXd p(3, 2);
  p << 0.4, 0.6, 0.2, 0.5, 0.8, 0.3;
  const Eigen::MatrixXd g = seg_loss_chunk_grad(p, s, cfg);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 2; ++c)
      EXPECT_NEAR(g(i, c), grad_point(p(i, c), s(i, c), cfg.slicing_for(c), cfg.margins) / 6.0,
                  1e-15);
}

SlicingParams random_slicing(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> u(1, 200);
  SlicingParams k;
  k.k2 = -u(rng);
  k.k1 = k.k2 - u(rng);
  k.k3 = u(rng);
  k.k4 = k.k3 + u(rng);
  return k;
}

// Closed forms of the six pieces, written independently of the library.
double piece(int which, double p, double s, const SlicingParams& k) {
  switch (which) {
    case 1: return -std::log(1.0 - p);
    case 2: return -std::log(1.0 - (k.k2 - s) / (k.k2 - k.k1) * p);
    case 3: return 0.0;
    case 4: return -std::log(s / k.k3 + (k.k3 - s) / k.k3 * p);
    case 5: return -std::log(1.0 - (s - k.k3) / (k.k4 - k.k3) * p);
    default: return -std::log(1.0 - p);
  }
}

TEST(SegLoss, PieceBoundariesAgree) {
  std::mt19937_64 rng(23);
  for (int t = 0; t < 100; ++t) {
    const SlicingParams k = random_slicing(rng);
    for (double p = 0.0; p <= 0.99; p += 1.0 / 128) {
      const std::pair<int, int> bounds[] = {{k.k1, 1}, {k.k2, 2}, {k.k3, 4}, {k.k4, 5}};
      for (const auto& [s, left] : bounds) {
        const double l = piece(left, p, s, k), r = piece(left + 1, p, s, k);
        EXPECT_NEAR(l, r, 1e-12) << "K=(" << k.k1 << ',' << k.k2 << ',' << k.k3 << ',' << k.k4
                                 << ") s=" << s << " p=" << p;
        EXPECT_NEAR(loss_point(p, s, k), l, 1e-12);
      }
    }
  }
}

TEST(SegLoss, NonNegativeAndMonotone) {
  std::mt19937_64 rng(29);
  std::uniform_real_distribution<double> up(0.0, 1.0);
  for (int t = 0; t < 2000; ++t) {
    const SlicingParams k = random_slicing(rng);
    std::uniform_int_distribution<int> us(k.k1 - 50, k.k4 + 50);
    const int s = us(rng);
    const double a = up(rng), b = up(rng);
    const double lo = std::min(a, b), hi = std::max(a, b);
    EXPECT_GE(loss_point_clamped(lo, s, k, kMargins), 0.0);
    const int before = k.k1 - 1 - (s % 7 + 7) % 7;
    EXPECT_LE(loss_point_clamped(lo, before, k, kMargins),
              loss_point_clamped(hi, before, k, kMargins));
    EXPECT_GE(loss_point_clamped(lo, 0, k, kMargins), loss_point_clamped(hi, 0, k, kMargins));
  }
}

TEST(SegLoss, GradientMatchesFiniteDifferences) {
  const GradCheckResult r = seg_loss_gradcheck(10000, 1);
  EXPECT_TRUE(r.passed) << r.worst_rel_error << " at " << r.worst_location;
  EXPECT_LT(r.worst_rel_error, 1e-6);
  EXPECT_GT(r.num_checked, 9000u);
}

TEST(SegLoss, GradientSpotChecksAgainstIndependentDifferences) {
  // Plain central difference written here, on points well inside a piece.
  const double h = 1e-5;
  for (double p : {0.2, 0.45, 0.6}) {
    for (int s : {-200, -33, 0, 40, 160}) {
      const double fd = (loss_point_clamped(p + h, s, kGoal, kMargins) -
                         loss_point_clamped(p - h, s, kGoal, kMargins)) /
                        (2 * h);
      EXPECT_NEAR(grad_point(p, s, kGoal, kMargins), fd, 1e-6 * std::max(1.0, std::abs(fd)))
          << p << ' ' << s;
    }
  }
}

}  // namespace
}  // namespace ctxspot
