#include "ctxspot/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ctxspot/chunking.hpp"
#include "ctxspot/network.hpp"
#include "ctxspot/objective.hpp"
#include "ctxspot/seg_loss.hpp"

namespace ctxspot {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

SpottingConfig tiny_gradcheck_config() {
  SpottingConfig cfg = default_config(2);
  cfg.chunk_frames = 8;
  cfg.num_predictions = 2;
  cfg.class_features = 4;
  cfg.receptive_field = 7;
  cfg.slicing = {{-4, -2, 3, 5}, {-3, -1, 2, 4}};
  cfg.model.feature_dim = 4;
  cfg.model.mlp_hidden = 8;
  cfg.model.mlp_out = 4;
  cfg.model.pyramid_channels = {2, 2, 2, 2};
  cfg.model.spot_channels1 = 4;
  cfg.model.spot_channels2 = 4;
  cfg.validate();
  return cfg;
}

GradCheckResult model_gradcheck(const SpottingConfig& cfg, std::uint64_t seed, double step,
                                double tolerance, double floor) {
  const NetworkShape shape = NetworkShape::from_config(cfg);
  ModelParams<double> params = cast_params<double>(init_params<float>(shape, seed));
  // Non-zero biases and affine terms so that every block is exercised.
  std::mt19937_64 rng(seed ^ 0x5bd1e995ULL);
  std::normal_distribution<double> n01(0.0, 1.0);
  {
    auto v = params.mutable_values();
    for (int b = 0; b < kNumBlocks; ++b) {
      const auto blk = static_cast<Block>(b);
      const auto [rows, cols] = shape.block_dims(blk);
      if (rows != 1) continue;
      for (std::size_t i = 0; i < params.block_size(blk); ++i)
        v[params.offset(blk) + i] += 0.1 * n01(rng);
    }
  }

  VideoAnnotations ann;
  ann.video_id = "gradcheck";
  ann.fps = cfg.fps;
  ann.num_frames = cfg.chunk_frames;
  ann.actions = {{0, cfg.chunk_frames / 4}, {cfg.num_classes - 1, (3 * cfg.chunk_frames) / 4}};
  std::sort(ann.actions.begin(), ann.actions.end(), chronological);
  FeatureSequence feats;
  feats.video_id = ann.video_id;
  feats.values.resize(cfg.chunk_frames, cfg.model.feature_dim);
  for (Eigen::Index i = 0; i < feats.values.size(); ++i)
    feats.values.data()[i] = static_cast<float>(n01(rng));
  const Chunk chunk = extract_chunk(ann, feats, 0, cfg.chunk_frames);
  const ChunkTargets targets = make_targets(chunk, ann, cfg);
  const RowMatrix<double> input = chunk.features.cast<double>();

  AlignedVector<double> grad(params.size(), 0.0);
  chunk_objective<double>(params, input, targets, cfg, grad);

  GradCheckResult r;
  r.tolerance = tolerance;
  for (int b = 0; b < kNumBlocks; ++b) {
    const auto blk = static_cast<Block>(b);
    for (std::size_t i = 0; i < params.block_size(blk); ++i) {
      const std::size_t k = params.offset(blk) + i;
      const double orig = params.values()[k];
      params.mutable_values()[k] = orig + step;
      const double up = chunk_objective<double>(params, input, targets, cfg).total;
      params.mutable_values()[k] = orig - step;
      const double down = chunk_objective<double>(params, input, targets, cfg).total;
      params.mutable_values()[k] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(grad[k], numeric, floor);
      ++r.num_checked;
      if (err > r.worst_rel_error) {
        r.worst_rel_error = err;
        r.worst_location = std::string(block_name(blk)) + "[" + std::to_string(i) + "]";
      }
    }
  }
  r.passed = r.worst_rel_error < tolerance;
  return r;
}

GradCheckResult seg_loss_gradcheck(int samples, std::uint64_t seed, double step,
                                   double tolerance, double boundary_gap) {
  std::mt19937_64 rng(seed);
  GradCheckResult r;
  r.tolerance = tolerance;
  const Margins m;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  while (static_cast<int>(r.num_checked) < samples) {
    std::uniform_int_distribution<int> neg(1, 60), pos(1, 200);
    SlicingParams k;
    k.k2 = -neg(rng);
    k.k1 = k.k2 - neg(rng);
    k.k3 = pos(rng);
    k.k4 = k.k3 + pos(rng);
    std::uniform_int_distribution<int> shift(k.k1 - 20, k.k4 + 20);
    const int s = shift(rng);
    const double p = unit(rng);
    if (p - step < kScoreEpsilon + boundary_gap || p + step > 1.0 - kScoreEpsilon - boundary_gap)
      continue;
    // Skip samples whose clamp switches within boundary_gap of p.
    const double off = (s >= 0 && s < k.k3) ? std::log(m.max) : std::log1p(-m.min);
    auto margin_at = [&](double q) { return loss_point(q, s, k) + off; };
    const double lo = margin_at(std::max(0.0, p - boundary_gap));
    const double hi = margin_at(std::min(1.0, p + boundary_gap));
    if ((lo > 0.0) != (hi > 0.0) || margin_at(p) == 0.0) continue;
    // One Richardson step on top of the central difference: near p = 1 the
    // plain O(h^2) truncation error alone exceeds the tolerance.
    auto central = [&](double h) {
      return (loss_point_clamped(p + h, s, k, m) - loss_point_clamped(p - h, s, k, m)) /
             (2.0 * h);
    };
    const double numeric = (4.0 * central(0.5 * step) - central(step)) / 3.0;
    const double analytic = grad_point(p, s, k, m);
    const double err = relative_error(analytic, numeric, 1e-12);
    ++r.num_checked;
    if (err > r.worst_rel_error) {
      r.worst_rel_error = err;
      r.worst_location = "p=" + std::to_string(p) + " s=" + std::to_string(s);
    }
  }
  r.passed = r.worst_rel_error < tolerance;
  return r;
}

}  // namespace ctxspot
