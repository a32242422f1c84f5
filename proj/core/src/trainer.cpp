#include "ctxspot/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "ctxspot/chunking.hpp"
#include "ctxspot/errors.hpp"
#include "ctxspot/eval.hpp"
#include "ctxspot/hashing.hpp"
#include "ctxspot/inference.hpp"
#include "ctxspot/objective.hpp"

namespace ctxspot {
namespace {

double validation_average_map(const std::vector<LabeledVideo>& val,
                              const ModelParams<float>& params, const SpottingConfig& cfg) {
  std::vector<VideoSpots> videos;
  for (const auto& v : val) {
    const VideoPrediction p = predict_video(v.features, params, cfg);
    videos.push_back({v.annotations.video_id, v.annotations.fps, p.spots, v.annotations.actions});
  }
  return average_map(videos, cfg.num_classes, cfg.metric).average_map;
}

}  // namespace

AdamOptimizer::AdamOptimizer(std::size_t size, double beta1, double beta2, double epsilon)
    : m_(size, 0.0), v_(size, 0.0), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void AdamOptimizer::step(std::span<float> params, std::span<const float> grad, double lr) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw PreconditionError("optimizer state and parameter sizes differ");
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grad[i];
    m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
    v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] = static_cast<float>(params[i] - lr * m_hat / (std::sqrt(v_hat) + epsilon_));
  }
}

double learning_rate_at(const OptimizerConfig& opt, int epoch) {
  if (opt.epochs <= 1) return opt.lr_initial;
  const double t = static_cast<double>(epoch) / static_cast<double>(opt.epochs - 1);
  return opt.lr_initial + (opt.lr_final - opt.lr_initial) * t;
}

TrainResult train(const Dataset& data, const SpottingConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (data.train.empty()) throw PreconditionError("training split is empty");
  for (const auto& v : data.train) {
    v.annotations.validate(cfg.num_classes);
    if (v.features.feature_dim() != cfg.model.feature_dim)
      throw PreconditionError(v.annotations.video_id + ": feature width " +
                              std::to_string(v.features.feature_dim()) +
                              " differs from model.feature_dim");
  }

  const NetworkShape shape = NetworkShape::from_config(cfg);
  TrainResult result{init_params<float>(shape, mix_seed(cfg.seed, 1)), {}, -1, std::nullopt};
  ModelParams<float>& params = result.params;
  ModelParams<float> best = params;
  AdamOptimizer adam(params.size(), cfg.optimizer.adam_beta1, cfg.optimizer.adam_beta2,
                     cfg.optimizer.adam_epsilon);
  std::mt19937_64 rng(mix_seed(cfg.seed, 2));
  AlignedVector<float> grad(params.size());
  std::vector<std::size_t> order(data.train.size());

  for (int epoch = 0; epoch < cfg.optimizer.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.learning_rate = learning_rate_at(cfg.optimizer, epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t vi : order) {
      const LabeledVideo& video = data.train[vi];
      const std::vector<Chunk> chunks = sample_chunks(video.annotations, video.features, cfg, rng);
      if (chunks.empty()) continue;
      std::fill(grad.begin(), grad.end(), 0.0f);
      const double scale = 1.0 / static_cast<double>(chunks.size());
      for (const Chunk& chunk : chunks) {
        const ChunkTargets targets = make_targets(chunk, video.annotations, cfg);
        LossBreakdown l;
        try {
          l = chunk_objective<float>(params, chunk.features, targets, cfg, grad, scale);
        } catch (const DivergenceError& e) {
          throw DivergenceError(e.what(), epoch);
        }
        if (!std::isfinite(l.total))
          throw DivergenceError("non-finite loss on video " + video.annotations.video_id, epoch);
        rec.loss += l.total;
        rec.seg_loss += l.seg;
        rec.spot_loss += l.spot;
        ++rec.num_chunks;
      }
      if (!std::all_of(grad.begin(), grad.end(), [](float g) { return std::isfinite(g); }))
        throw DivergenceError("non-finite gradient on video " + video.annotations.video_id,
                              epoch);
      adam.step(params.mutable_values(), grad, rec.learning_rate);
    }
    if (rec.num_chunks > 0) {
      rec.loss /= rec.num_chunks;
      rec.seg_loss /= rec.num_chunks;
      rec.spot_loss /= rec.num_chunks;
    }

    const bool last = epoch + 1 == cfg.optimizer.epochs;
    if (!data.val.empty() && ((epoch + 1) % cfg.optimizer.val_every == 0 || last)) {
      rec.val_average_map = validation_average_map(data.val, params, cfg);
      if (!result.best_val_average_map || *rec.val_average_map > *result.best_val_average_map) {
        result.best_val_average_map = rec.val_average_map;
        result.best_epoch = epoch;
        best = params;
      }
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (result.best_epoch >= 0) params = best;
  return result;
}

}  // namespace ctxspot
