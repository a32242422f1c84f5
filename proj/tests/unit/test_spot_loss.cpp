#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "ctxspot/errors.hpp"
#include "ctxspot/spot_loss.hpp"

namespace ctxspot {
namespace {

TEST(Yolo, Examples) {
  const std::vector<ActionEvent> one{{0, 60}};
  const ActionMatrix y = yolo_encode(one, 240, 3);
  ASSERT_EQ(y.rows(), 1);
  EXPECT_EQ(y.row(0), (Eigen::RowVectorXd(5) << 1, 0.25, 1, 0, 0).finished());

  EXPECT_EQ(yolo_encode({}, 240, 3).rows(), 0);
  EXPECT_EQ(yolo_encode({}, 240, 3).cols(), 5);

  const std::vector<ActionEvent> two{{2, 120}, {0, 60}};
  const ActionMatrix y2 = yolo_encode(two, 240, 3);
  ASSERT_EQ(y2.rows(), 2);
  EXPECT_DOUBLE_EQ(y2(0, 1), 0.25);
  EXPECT_DOUBLE_EQ(y2(1, 1), 0.5);
  EXPECT_EQ(y2(0, 2), 1.0);
  EXPECT_EQ(y2(1, 4), 1.0);
}

TEST(Yolo, RangeChecks) {
  const std::vector<ActionEvent> bad_frame{{0, 240}}, bad_class{{3, 1}};
  EXPECT_THROW(yolo_encode(bad_frame, 240, 3), PreconditionError);
  EXPECT_THROW(yolo_encode(bad_class, 240, 3), PreconditionError);
}

TEST(Matching, SingleNearest) {
  const std::vector<double> gt{0.5}, pred{0.4, 0.9};
  const Matching m = iterative_match(gt, pred);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<int, int>>{{0, 0}}));
  EXPECT_EQ(m.unmatched_pred_rows, std::vector<int>{1});
}

TEST(Matching, OneRound) {
  const std::vector<double> gt{0.2, 0.8}, pred{0.25, 0.3, 0.9};
  const Matching m = iterative_match(gt, pred);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 2}}));
  EXPECT_EQ(m.iterations, 1);
}

TEST(Matching, TwoRounds) {
  const std::vector<double> gt{0.10, 0.20}, pred{0.14, 0.90};
  const Matching m = iterative_match(gt, pred);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(m.iterations, 2);
  EXPECT_TRUE(m.unmatched_pred_rows.empty());
}

TEST(Matching, TooManyGroundTruths) {
  const std::vector<double> gt{0.1, 0.2}, pred{0.3};
  EXPECT_THROW(iterative_match(gt, pred), PreconditionError);
}

TEST(Matching, EmptyGroundTruth) {
  const std::vector<double> pred{0.3, 0.6};
  const Matching m = iterative_match({}, pred);
  EXPECT_TRUE(m.pairs.empty());
  EXPECT_EQ(m.unmatched_pred_rows, (std::vector<int>{0, 1}));
  EXPECT_EQ(m.iterations, 0);
}

// Reciprocal nearest pairs among all rows, computed directly.
std::set<std::pair<int, int>> mutual_pairs(const std::vector<double>& gt,
                                           const std::vector<double>& pred) {
  auto nearest = [](double x, const std::vector<double>& v) {
    int best = 0;
    for (int j = 1; j < static_cast<int>(v.size()); ++j)
      if (std::abs(v[j] - x) < std::abs(v[best] - x)) best = j;
    return best;
  };
  std::set<std::pair<int, int>> out;
  for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
    const int j = nearest(gt[i], pred);
    if (nearest(pred[j], gt) == i) out.insert({i, j});
  }
  return out;
}

TEST(Matching, RandomInstancesProperties) {
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> ngt(0, 6), extra(0, 4);
  for (int t = 0; t < 10000; ++t) {
    std::vector<double> gt(ngt(rng)), pred(gt.size() + extra(rng));
    if (pred.empty()) pred.resize(1);
    for (double& x : gt) x = u(rng);
    for (double& x : pred) x = u(rng);
    const Matching m = iterative_match(gt, pred);

    ASSERT_LE(m.iterations, static_cast<int>(gt.size()));
    ASSERT_EQ(m.pairs.size(), gt.size());
    std::set<int> used;
    for (int i = 0; i < static_cast<int>(gt.size()); ++i) {
      ASSERT_EQ(m.pairs[i].first, i);
      ASSERT_TRUE(used.insert(m.pairs[i].second).second) << "prediction reused";
    }
    for (int r : m.unmatched_pred_rows) ASSERT_TRUE(used.insert(r).second);
    ASSERT_EQ(used.size(), pred.size());

    if (!gt.empty()) {
      for (const auto& [g, p] : mutual_pairs(gt, pred)) ASSERT_EQ(m.pred_for(g), p);
    }
  }
}

const std::vector<double> kAlpha1{1, 5, 1};

TEST(SpotLoss, WorkedExample) {
  ActionMatrix y(1, 3);
  y << 1, 0.5, 1;
  PredictionMatrix yh(2, 3);
  yh << 0.8, 0.4, 1.0, 0.2, 0.7, 1.0;
  const Matching m = identity_match(1, 2);
  EXPECT_NEAR(spotting_loss(y, yh, m, kAlpha1, 0.5), 0.11, 1e-12);

  const PredictionMatrix g = spotting_grad(y, yh, m, kAlpha1, 0.5);
  EXPECT_NEAR(g(0, 0), -0.4, 1e-12);
  EXPECT_NEAR(g(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(g(0, 2), 0.0, 1e-12);
  EXPECT_NEAR(g(1, 0), 0.2, 1e-12);
  EXPECT_EQ(g(1, 1), 0.0);
  EXPECT_EQ(g(1, 2), 0.0);
}

TEST(SpotLoss, ExactPredictionIsZero) {
  ActionMatrix y(2, 4);
  y << 1, 0.1, 0, 1, 1, 0.6, 1, 0;
  PredictionMatrix yh(3, 4);
  yh << 1, 0.6, 1, 0, 0, 0.3, 0.5, 0.5, 1, 0.1, 0, 1;
  const Matching m = iterative_match(std::vector<double>{0.1, 0.6},
                                     std::vector<double>{0.6, 0.3, 0.1});
  const std::vector<double> alpha{1, 5, 1, 1};
  EXPECT_EQ(spotting_loss(y, yh, m, alpha, 0.5), 0.0);
  EXPECT_TRUE(spotting_grad(y, yh, m, alpha, 0.5).isZero(0.0));
}

TEST(SpotLoss, TotalLoss) {
  EXPECT_EQ(total_loss(0.0, 0.0, 1.5), 0.0);
  EXPECT_NEAR(total_loss(0.11, 0.2, 1.5), 0.41, 1e-15);
  EXPECT_EQ(total_loss(0.11, 0.2, 0.0), 0.11);
}

struct Instance {
  ActionMatrix y;
  PredictionMatrix yh;
};

Instance random_instance(std::mt19937_64& rng, int n_gt, int n_pred, int classes) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> cls(0, classes - 1);
  Instance in{ActionMatrix::Zero(n_gt, 2 + classes), PredictionMatrix::Zero(n_pred, 2 + classes)};
  for (int i = 0; i < n_gt; ++i) {
    in.y(i, 0) = 1;
    in.y(i, 1) = u(rng);
    in.y(i, 2 + cls(rng)) = 1;
  }
  for (int r = 0; r < n_pred; ++r) {
    in.yh(r, 0) = u(rng);
    in.yh(r, 1) = u(rng);
    double total = 0;
    for (int c = 0; c < classes; ++c) total += (in.yh(r, 2 + c) = u(rng) + 1e-3);
    in.yh.row(r).tail(classes) /= total;
  }
  return in;
}

Matching match_rows(const Instance& in) {
  std::vector<double> g(in.y.rows()), p(in.yh.rows());
  for (int i = 0; i < in.y.rows(); ++i) g[i] = in.y(i, 1);
  for (int r = 0; r < in.yh.rows(); ++r) p[r] = in.yh(r, 1);
  return iterative_match(g, p);
}

// Independent restatement: squared errors of paired rows, plus beta * conf^2.
double direct_loss(const Instance& in, const Matching& m, const std::vector<double>& alpha,
                   double beta) {
  double total = 0;
  for (const auto& [g, p] : m.pairs)
    for (int j = 0; j < in.y.cols(); ++j)
      total += alpha[j] * (in.y(g, j) - in.yh(p, j)) * (in.y(g, j) - in.yh(p, j));
  for (int r : m.unmatched_pred_rows) total += beta * in.yh(r, 0) * in.yh(r, 0);
  return total;
}

TEST(SpotLoss, MatchesDirectSumAndIsPermutationInvariant) {
  std::mt19937_64 rng(7);
  const std::vector<double> alpha{1, 5, 1, 1, 1};
  for (int t = 0; t < 10000; ++t) {
    const int n_gt = static_cast<int>(rng() % 6);
    Instance in = random_instance(rng, n_gt, 5, 3);
    const double loss = spotting_loss(in.y, in.yh, match_rows(in), alpha, 0.5);
    ASSERT_NEAR(loss, direct_loss(in, match_rows(in), alpha, 0.5), 1e-12);
    ASSERT_GE(loss, 0.0);

    std::vector<int> perm(5);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance shuffled = in;
    for (int r = 0; r < 5; ++r) shuffled.yh.row(r) = in.yh.row(perm[r]);
    ASSERT_NEAR(spotting_loss(shuffled.y, shuffled.yh, match_rows(shuffled), alpha, 0.5), loss,
                1e-12)
        << "instance " << t;
  }
}

TEST(SpotLoss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(13);
  const std::vector<double> alpha{1, 5, 1, 1, 1};
  const double h = 1e-6;
  double worst = 0;
  for (int t = 0; t < 500; ++t) {
    Instance in = random_instance(rng, static_cast<int>(rng() % 5), 5, 3);
    const Matching m = match_rows(in);
    const PredictionMatrix g = spotting_grad(in.y, in.yh, m, alpha, 0.5);
    for (int r = 0; r < 5; ++r) {
      for (int j = 0; j < 5; ++j) {
        PredictionMatrix up = in.yh, down = in.yh;
        up(r, j) += h;
        down(r, j) -= h;
        const double fd =
            (spotting_loss(in.y, up, m, alpha, 0.5) - spotting_loss(in.y, down, m, alpha, 0.5)) /
            (2 * h);
        const double denom = std::max({std::abs(fd), std::abs(g(r, j)), 1e-6});
        worst = std::max(worst, std::abs(fd - g(r, j)) / denom);
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(SpotLoss, IdentityMatchPairsRowsInOrder) {
  const Matching m = identity_match(2, 5);
  EXPECT_EQ(m.pairs, (std::vector<std::pair<int, int>>{{0, 0}, {1, 1}}));
  EXPECT_EQ(m.unmatched_pred_rows, (std::vector<int>{2, 3, 4}));
}

}  // namespace
}  // namespace ctxspot
