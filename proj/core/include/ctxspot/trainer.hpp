#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ctxspot/config.hpp"
#include "ctxspot/dataset.hpp"
#include "ctxspot/network.hpp"

namespace ctxspot {

struct EpochRecord {
  int epoch = 0;
  double learning_rate = 0.0;
  /// Means over all chunks of the epoch.
  double loss = 0.0;
  double seg_loss = 0.0;
  double spot_loss = 0.0;
  int num_chunks = 0;
  std::optional<double> val_average_map;
};

struct TrainResult {
  ModelParams<float> params;
  std::vector<EpochRecord> history;
  /// Epoch whose parameters were kept (-1 when no validation ran).
  int best_epoch = -1;
  std::optional<double> best_val_average_map;
};

/// Adam with bias correction, operating in place on a flat parameter vector.
class AdamOptimizer {
 public:
  AdamOptimizer(std::size_t size, double beta1, double beta2, double epsilon);

  void step(std::span<float> params, std::span<const float> grad, double lr);
  long steps() const { return t_; }

 private:
  std::vector<double> m_;
  std::vector<double> v_;
  double beta1_;
  double beta2_;
  double epsilon_;
  long t_ = 0;
};

/// Learning rate for `epoch` (0-based): linear from lr_initial to lr_final
/// over the configured epoch count.
double learning_rate_at(const OptimizerConfig& opt, int epoch);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// One batch per training video per epoch (chunks resampled every epoch),
/// gradients averaged over the chunks of the batch, Adam step per batch.
/// Keeps the parameters with the best validation Average-mAP. Throws
/// PreconditionError on an empty training set and DivergenceError on a
/// non-finite loss.
TrainResult train(const Dataset& data, const SpottingConfig& cfg,
                  const EpochCallback& on_epoch = {});

}  // namespace ctxspot
