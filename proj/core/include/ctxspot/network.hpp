#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "ctxspot/config.hpp"
#include "ctxspot/spot_loss.hpp"

namespace ctxspot {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Parameter and gradient buffers. Eigen peels vectorized loops by address,
/// so buffers and block starts are kept aligned to make sums reproducible.
template <typename T>
using AlignedVector = std::vector<T, Eigen::aligned_allocator<T>>;

/// Block starts are rounded up to a multiple of this many elements.
inline constexpr std::size_t kBlockAlignElements = 16;

/// Parameter blocks, in checkpoint declaration order.
enum class Block : int {
  kMlp1W, kMlp1B, kMlp2W, kMlp2B,
  kPyr0W, kPyr0B, kPyr1W, kPyr1B, kPyr2W, kPyr2B, kPyr3W, kPyr3B,
  kTcnnW, kTcnnB,
  kNormGamma, kNormBeta,
  kSpot1W, kSpot1B, kSpot2W, kSpot2B,
  kHeadLocW, kHeadLocB, kHeadClsW, kHeadClsB,
  kCount
};

inline constexpr int kNumBlocks = static_cast<int>(Block::kCount);

std::string_view block_name(Block b);

/// Every dimension of the network, derived from a config.
///
/// frame MLP:        D -> mlp_hidden -> mlp_out (ReLU after each)
/// pyramid i:        temporal conv, kernel pyramid_kernels[i], mlp_out ->
///                   pyramid_channels[i], ReLU, same-length zero padding
/// concat:           mlp_out + sum(pyramid_channels) = concat_width
/// tcnn:             temporal conv, kernel 3, concat_width -> C * f
/// segmentation:     per-channel standardization over frames + affine,
///                   sigmoid, score = 1 - 2 |v - 0.5| / sqrt(f) per class
/// spotting:         [ReLU(tcnn), scores] (C*f + C) -> pool -> conv3 (s1)
///                   -> pool -> conv3 (s2) -> pool -> flatten
///                   (pooled_len3 * s2) -> FC(2 N_pred) sigmoid and
///                   FC(C N_pred) row softmax
/// Pooling is max over 3 frames, stride 2, one frame of padding on each
/// side, so a length L becomes (L + 1) / 2.
struct NetworkShape {
  int chunk_frames = 0;
  int feature_dim = 0;
  int mlp_hidden = 0;
  int mlp_out = 0;
  std::array<int, 4> kernels{};
  std::array<int, 4> channels{};
  int concat_width = 0;
  int num_classes = 0;
  int class_features = 0;
  int spot_channels1 = 0;
  int spot_channels2 = 0;
  std::array<int, 3> pooled_len{};
  int flat_size = 0;
  int num_predictions = 0;

  static NetworkShape from_config(const SpottingConfig& cfg);

  int seg_width() const { return num_classes * class_features; }
  int spot_in_width() const { return seg_width() + num_classes; }
  /// (rows, cols) of a parameter block.
  std::pair<int, int> block_dims(Block b) const;

  friend bool operator==(const NetworkShape&, const NetworkShape&) = default;
};

inline int pooled_length(int len) { return (len + 1) / 2; }

/// Flat parameter storage with per-block views. Blocks start on aligned
/// offsets; the zero padding between them is never read by the network. Any
/// mutable access bumps `version()`, which invalidates outstanding forward
/// traces.
template <typename T>
class ModelParams {
 public:
  using Map = Eigen::Map<RowMatrix<T>>;
  using ConstMap = Eigen::Map<const RowMatrix<T>>;

  ModelParams() = default;
  explicit ModelParams(const NetworkShape& shape);

  const NetworkShape& shape() const { return shape_; }
  /// Flat length including padding.
  std::size_t size() const { return values_.size(); }
  /// Number of trainable scalars.
  std::size_t num_parameters() const;
  std::uint64_t version() const { return version_; }

  std::span<const T> values() const { return values_; }
  std::span<T> mutable_values() {
    ++version_;
    return values_;
  }

  std::size_t offset(Block b) const { return offsets_[static_cast<int>(b)]; }
  std::size_t block_size(Block b) const {
    const auto [r, c] = shape_.block_dims(b);
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
  }

  ConstMap block(Block b) const;
  Map mutable_block(Block b);

  bool all_finite() const;

 private:
  NetworkShape shape_;
  AlignedVector<T> values_;
  std::array<std::size_t, kNumBlocks + 1> offsets_{};
  std::uint64_t version_ = 0;
};

/// Kaiming-uniform weights, zero biases, unit gamma, zero beta.
template <typename T>
ModelParams<T> init_params(const NetworkShape& shape, std::uint64_t seed);

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src);

/// Segmentation score of one class feature vector v in (0,1)^f:
/// 1 - 2 |v - 0.5| / sqrt(f). Throws PreconditionError for entries outside
/// (0, 1).
double seg_score_head(std::span<const double> v);

/// d score / d v. Zero at the exact hypercube center.
std::vector<double> seg_score_head_grad(std::span<const double> v);

/// Intermediate activations kept for the backward pass.
template <typename T>
struct ForwardTrace {
  const ModelParams<T>* params = nullptr;
  std::uint64_t params_version = 0;

  RowMatrix<T> input;
  RowMatrix<T> mlp1;
  RowMatrix<T> mlp2;
  std::array<RowMatrix<T>, 4> pyr_cols;
  std::array<RowMatrix<T>, 4> pyr_out;
  RowMatrix<T> concat;
  RowMatrix<T> tcnn_cols;
  RowMatrix<T> tcnn;        // pre-activation class features
  RowMatrix<T> normalized;  // standardized tcnn
  Eigen::Matrix<T, 1, Eigen::Dynamic> inv_std;
  RowMatrix<T> sig;         // sigmoid(gamma * normalized + beta)
  RowMatrix<T> dist;        // |v - 0.5| per frame and class
  RowMatrix<T> spot_in;
  std::array<RowMatrix<T>, 3> pooled;
  std::array<Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 3>
      pool_argmax;
  RowMatrix<T> spot1_cols;
  RowMatrix<T> spot1;
  RowMatrix<T> spot2_cols;
  RowMatrix<T> spot2;
  RowMatrix<T> head_loc;  // sigmoid outputs, N_pred x 2
  RowMatrix<T> head_cls;  // softmax outputs, N_pred x C

  /// N_F x C segmentation scores.
  Eigen::MatrixXd seg_scores;
  /// N_pred x (2 + C).
  PredictionMatrix predictions;
};

/// Runs the network on an N_F x D chunk. Throws PreconditionError on a shape
/// mismatch and DivergenceError (epoch -1) naming the layer that produced a
/// non-finite activation.
template <typename T>
ForwardTrace<T> forward(const RowMatrix<T>& input, const ModelParams<T>& params);

/// Reverse-mode pass. `d_scores` (N_F x C) and `d_predictions`
/// (N_pred x (2 + C)) are loss gradients; the parameter gradient is added to
/// `grad` (same layout as the parameters; use an AlignedVector for
/// reproducible sums). Throws PreconditionError when the
/// trace is stale.
template <typename T>
void backward(const ForwardTrace<T>& trace, const ModelParams<T>& params,
              const Eigen::MatrixXd& d_scores, const Eigen::MatrixXd& d_predictions,
              std::span<T> grad);

}  // namespace ctxspot
