#include "ctxspot/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ctxspot/errors.hpp"

namespace ctxspot {
namespace {

constexpr double kNormEpsilon = 1e-5;
constexpr int kTcnnKernel = 3;
constexpr int kSpotKernel = 3;

using IntMatrix = Eigen::Matrix<int, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

constexpr std::array<Block, 4> kPyrW{Block::kPyr0W, Block::kPyr1W, Block::kPyr2W,
                                     Block::kPyr3W};
constexpr std::array<Block, 4> kPyrB{Block::kPyr0B, Block::kPyr1B, Block::kPyr2B,
                                     Block::kPyr3B};

template <typename T>
T sigmoid(T x) {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

template <typename T>
void check_finite(const RowMatrix<T>& m, const char* layer) {
  if (!m.allFinite())
    throw DivergenceError(std::string("non-finite activation in layer ") + layer, -1);
}

// Same-length temporal im2col: row t holds x[t - pad .. t - pad + k), zero
// outside, pad = (k - 1) / 2.
template <typename T>
void im2col(const RowMatrix<T>& x, int k, RowMatrix<T>& cols) {
  const Eigen::Index len = x.rows();
  const Eigen::Index cin = x.cols();
  const int pad = (k - 1) / 2;
  cols.setZero(len, k * cin);
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int j = 0; j < k; ++j) {
      const Eigen::Index src = t + j - pad;
      if (src < 0 || src >= len) continue;
      cols.row(t).segment(j * cin, cin) = x.row(src);
    }
  }
}

template <typename T>
void col2im_add(const RowMatrix<T>& dcols, int k, RowMatrix<T>& dx) {
  const Eigen::Index len = dx.rows();
  const Eigen::Index cin = dx.cols();
  const int pad = (k - 1) / 2;
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int j = 0; j < k; ++j) {
      const Eigen::Index src = t + j - pad;
      if (src < 0 || src >= len) continue;
      dx.row(src) += dcols.row(t).segment(j * cin, cin);
    }
  }
}

template <typename T>
void relu_inplace(RowMatrix<T>& m) {
  m = m.cwiseMax(T(0));
}

template <typename T>
void relu_mask(RowMatrix<T>& grad, const RowMatrix<T>& activated) {
  grad = (activated.array() > T(0)).select(grad, T(0));
}

// Max over {2t-1, 2t, 2t+1}; out-of-range taps are skipped, ties keep the
// earliest frame.
template <typename T>
void maxpool(const RowMatrix<T>& x, RowMatrix<T>& y, IntMatrix& arg) {
  const Eigen::Index len = x.rows();
  const Eigen::Index out_len = pooled_length(static_cast<int>(len));
  y.resize(out_len, x.cols());
  arg.resize(out_len, x.cols());
  for (Eigen::Index t = 0; t < out_len; ++t) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      T best = -std::numeric_limits<T>::infinity();
      int idx = -1;
      for (Eigen::Index src = 2 * t - 1; src <= 2 * t + 1; ++src) {
        if (src < 0 || src >= len) continue;
        if (x(src, c) > best) {
          best = x(src, c);
          idx = static_cast<int>(src);
        }
      }
      y(t, c) = best;
      arg(t, c) = idx;
    }
  }
}

template <typename T>
RowMatrix<T> unpool(const RowMatrix<T>& dy, const IntMatrix& arg, Eigen::Index len) {
  RowMatrix<T> dx = RowMatrix<T>::Zero(len, dy.cols());
  for (Eigen::Index t = 0; t < dy.rows(); ++t)
    for (Eigen::Index c = 0; c < dy.cols(); ++c) dx(arg(t, c), c) += dy(t, c);
  return dx;
}

template <typename T>
void conv_forward(const RowMatrix<T>& x, int k, const ModelParams<T>& p, Block w, Block b,
                  RowMatrix<T>& cols, RowMatrix<T>& out) {
  im2col(x, k, cols);
  out.noalias() = cols * p.block(w);
  out.rowwise() += p.block(b).row(0);
}

template <typename T>
Eigen::Map<RowMatrix<T>> grad_block(std::span<T> grad, const ModelParams<T>& p, Block b) {
  const auto [rows, cols] = p.shape().block_dims(b);
  return Eigen::Map<RowMatrix<T>>(grad.data() + p.offset(b), rows, cols);
}

// Accumulates weight/bias gradients of y = cols W + b and returns d cols.
template <typename T>
RowMatrix<T> dense_backward(const RowMatrix<T>& in, const RowMatrix<T>& dy,
                            const ModelParams<T>& p, Block w, Block b, std::span<T> grad) {
  grad_block(grad, p, w).noalias() += in.transpose() * dy;
  grad_block(grad, p, b).row(0) += dy.colwise().sum();
  return dy * p.block(w).transpose();
}

template <typename T>
T seg_score(const T* v, int f, T& dist) {
  T sq = 0;
  for (int j = 0; j < f; ++j) sq += (v[j] - T(0.5)) * (v[j] - T(0.5));
  dist = std::sqrt(sq);
  return T(1) - T(2) * dist / std::sqrt(T(f));
}

}  // namespace

std::string_view block_name(Block b) {
  static constexpr std::string_view kNames[kNumBlocks] = {
      "mlp1.weight",  "mlp1.bias",  "mlp2.weight",   "mlp2.bias",     "pyramid0.weight",
      "pyramid0.bias", "pyramid1.weight", "pyramid1.bias", "pyramid2.weight",
      "pyramid2.bias", "pyramid3.weight", "pyramid3.bias", "tcnn.weight", "tcnn.bias",
      "norm.gamma",   "norm.beta",  "spot1.weight",  "spot1.bias",    "spot2.weight",
      "spot2.bias",   "head_loc.weight", "head_loc.bias", "head_cls.weight",
      "head_cls.bias"};
  const int i = static_cast<int>(b);
  if (i < 0 || i >= kNumBlocks) return "unknown";
  return kNames[i];
}

NetworkShape NetworkShape::from_config(const SpottingConfig& cfg) {
  NetworkShape s;
  s.chunk_frames = cfg.chunk_frames;
  s.feature_dim = cfg.model.feature_dim;
  s.mlp_hidden = cfg.model.mlp_hidden;
  s.mlp_out = cfg.model.mlp_out;
  s.kernels = cfg.pyramid_kernels();
  s.channels = cfg.model.pyramid_channels;
  s.concat_width = s.mlp_out;
  for (int c : s.channels) s.concat_width += c;
  s.num_classes = cfg.num_classes;
  s.class_features = cfg.class_features;
  s.spot_channels1 = cfg.model.spot_channels1;
  s.spot_channels2 = cfg.model.spot_channels2;
  s.pooled_len[0] = pooled_length(s.chunk_frames);
  s.pooled_len[1] = pooled_length(s.pooled_len[0]);
  s.pooled_len[2] = pooled_length(s.pooled_len[1]);
  s.flat_size = s.pooled_len[2] * s.spot_channels2;
  s.num_predictions = cfg.num_predictions;
  return s;
}

std::pair<int, int> NetworkShape::block_dims(Block b) const {
  const int cf = seg_width();
  switch (b) {
    case Block::kMlp1W: return {feature_dim, mlp_hidden};
    case Block::kMlp1B: return {1, mlp_hidden};
    case Block::kMlp2W: return {mlp_hidden, mlp_out};
    case Block::kMlp2B: return {1, mlp_out};
    case Block::kPyr0W: return {kernels[0] * mlp_out, channels[0]};
    case Block::kPyr0B: return {1, channels[0]};
    case Block::kPyr1W: return {kernels[1] * mlp_out, channels[1]};
    case Block::kPyr1B: return {1, channels[1]};
    case Block::kPyr2W: return {kernels[2] * mlp_out, channels[2]};
    case Block::kPyr2B: return {1, channels[2]};
    case Block::kPyr3W: return {kernels[3] * mlp_out, channels[3]};
    case Block::kPyr3B: return {1, channels[3]};
    case Block::kTcnnW: return {kTcnnKernel * concat_width, cf};
    case Block::kTcnnB: return {1, cf};
    case Block::kNormGamma: return {1, cf};
    case Block::kNormBeta: return {1, cf};
    case Block::kSpot1W: return {kSpotKernel * spot_in_width(), spot_channels1};
    case Block::kSpot1B: return {1, spot_channels1};
    case Block::kSpot2W: return {kSpotKernel * spot_channels1, spot_channels2};
    case Block::kSpot2B: return {1, spot_channels2};
    case Block::kHeadLocW: return {flat_size, 2 * num_predictions};
    case Block::kHeadLocB: return {1, 2 * num_predictions};
    case Block::kHeadClsW: return {flat_size, num_classes * num_predictions};
    case Block::kHeadClsB: return {1, num_classes * num_predictions};
    default: break;
  }
  throw PreconditionError("unknown parameter block");
}

template <typename T>
ModelParams<T>::ModelParams(const NetworkShape& shape) : shape_(shape) {
  std::size_t total = 0;
  for (int i = 0; i < kNumBlocks; ++i) {
    total = (total + kBlockAlignElements - 1) / kBlockAlignElements * kBlockAlignElements;
    offsets_[i] = total;
    const auto [r, c] = shape.block_dims(static_cast<Block>(i));
    total += static_cast<std::size_t>(r) * static_cast<std::size_t>(c);
  }
  total = (total + kBlockAlignElements - 1) / kBlockAlignElements * kBlockAlignElements;
  offsets_[kNumBlocks] = total;
  values_.assign(total, T(0));
}

template <typename T>
std::size_t ModelParams<T>::num_parameters() const {
  std::size_t n = 0;
  for (int i = 0; i < kNumBlocks; ++i) n += block_size(static_cast<Block>(i));
  return n;
}

template <typename T>
typename ModelParams<T>::ConstMap ModelParams<T>::block(Block b) const {
  const auto [r, c] = shape_.block_dims(b);
  return ConstMap(values_.data() + offset(b), r, c);
}

template <typename T>
typename ModelParams<T>::Map ModelParams<T>::mutable_block(Block b) {
  ++version_;
  const auto [r, c] = shape_.block_dims(b);
  return Map(values_.data() + offset(b), r, c);
}

template <typename T>
bool ModelParams<T>::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
ModelParams<T> init_params(const NetworkShape& shape, std::uint64_t seed) {
  ModelParams<T> p(shape);
  std::mt19937_64 rng(seed);
  for (Block w : {Block::kMlp1W, Block::kMlp2W, Block::kPyr0W, Block::kPyr1W, Block::kPyr2W,
                  Block::kPyr3W, Block::kTcnnW, Block::kSpot1W, Block::kSpot2W,
                  Block::kHeadLocW, Block::kHeadClsW}) {
    auto m = p.mutable_block(w);
    const double bound = std::sqrt(6.0 / static_cast<double>(m.rows()));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<T>(dist(rng));
  }
  p.mutable_block(Block::kNormGamma).setOnes();
  return p;
}

template <typename To, typename From>
ModelParams<To> cast_params(const ModelParams<From>& src) {
  ModelParams<To> dst(src.shape());
  auto out = dst.mutable_values();
  auto in = src.values();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = static_cast<To>(in[i]);
  return dst;
}

double seg_score_head(std::span<const double> v) {
  if (v.empty()) throw PreconditionError("empty class feature vector");
  for (double x : v)
    if (!(x > 0.0 && x < 1.0)) throw PreconditionError("class feature outside (0, 1)");
  double dist = 0.0;
  return seg_score(v.data(), static_cast<int>(v.size()), dist);
}

std::vector<double> seg_score_head_grad(std::span<const double> v) {
  seg_score_head(v);
  const int f = static_cast<int>(v.size());
  double dist = 0.0;
  seg_score(v.data(), f, dist);
  std::vector<double> g(v.size(), 0.0);
  if (dist == 0.0) return g;
  for (int j = 0; j < f; ++j) g[j] = -2.0 / std::sqrt(double(f)) * (v[j] - 0.5) / dist;
  return g;
}

template <typename T>
ForwardTrace<T> forward(const RowMatrix<T>& input, const ModelParams<T>& params) {
  const NetworkShape& s = params.shape();
  if (input.rows() != s.chunk_frames || input.cols() != s.feature_dim)
    throw PreconditionError("chunk is " + std::to_string(input.rows()) + "x" +
                            std::to_string(input.cols()) + ", network expects " +
                            std::to_string(s.chunk_frames) + "x" +
                            std::to_string(s.feature_dim));
  const Eigen::Index len = s.chunk_frames;
  const int cf = s.seg_width();
  const int f = s.class_features;

  ForwardTrace<T> tr;
  tr.params = &params;
  tr.params_version = params.version();
  tr.input = input;

  tr.mlp1.noalias() = input * params.block(Block::kMlp1W);
  tr.mlp1.rowwise() += params.block(Block::kMlp1B).row(0);
  relu_inplace(tr.mlp1);
  tr.mlp2.noalias() = tr.mlp1 * params.block(Block::kMlp2W);
  tr.mlp2.rowwise() += params.block(Block::kMlp2B).row(0);
  relu_inplace(tr.mlp2);
  check_finite(tr.mlp2, "mlp");

  tr.concat.resize(len, s.concat_width);
  tr.concat.leftCols(s.mlp_out) = tr.mlp2;
  int col = s.mlp_out;
  for (int i = 0; i < 4; ++i) {
    conv_forward(tr.mlp2, s.kernels[i], params, kPyrW[i], kPyrB[i], tr.pyr_cols[i],
                 tr.pyr_out[i]);
    relu_inplace(tr.pyr_out[i]);
    tr.concat.middleCols(col, s.channels[i]) = tr.pyr_out[i];
    col += s.channels[i];
  }
  check_finite(tr.concat, "pyramid");

  conv_forward(tr.concat, kTcnnKernel, params, Block::kTcnnW, Block::kTcnnB, tr.tcnn_cols,
               tr.tcnn);
  check_finite(tr.tcnn, "tcnn");

  // Per-channel standardization over frames, affine, sigmoid.
  const Eigen::Matrix<T, 1, Eigen::Dynamic> mean = tr.tcnn.colwise().mean();
  tr.normalized = tr.tcnn.rowwise() - mean;
  const Eigen::Array<T, 1, Eigen::Dynamic> var =
      tr.normalized.array().square().colwise().mean();
  tr.inv_std = (var + T(kNormEpsilon)).rsqrt().matrix();
  tr.normalized.array().rowwise() *= tr.inv_std.array();
  const Eigen::Array<T, 1, Eigen::Dynamic> gamma = params.block(Block::kNormGamma).row(0).array();
  const Eigen::Array<T, 1, Eigen::Dynamic> beta = params.block(Block::kNormBeta).row(0).array();
  tr.sig.resize(len, cf);
  for (Eigen::Index t = 0; t < len; ++t)
    for (int j = 0; j < cf; ++j) tr.sig(t, j) = sigmoid(gamma(j) * tr.normalized(t, j) + beta(j));

  tr.dist.resize(len, s.num_classes);
  RowMatrix<T> scores(len, s.num_classes);
  for (Eigen::Index t = 0; t < len; ++t)
    for (int c = 0; c < s.num_classes; ++c)
      scores(t, c) = seg_score(&tr.sig(t, c * f), f, tr.dist(t, c));
  check_finite(scores, "segmentation");
  tr.seg_scores = scores.template cast<double>().cwiseMax(0.0).cwiseMin(1.0);

  tr.spot_in.resize(len, s.spot_in_width());
  tr.spot_in.leftCols(cf) = tr.tcnn.cwiseMax(T(0));
  tr.spot_in.rightCols(s.num_classes) = scores;

  maxpool(tr.spot_in, tr.pooled[0], tr.pool_argmax[0]);
  conv_forward(tr.pooled[0], kSpotKernel, params, Block::kSpot1W, Block::kSpot1B,
               tr.spot1_cols, tr.spot1);
  relu_inplace(tr.spot1);
  maxpool(tr.spot1, tr.pooled[1], tr.pool_argmax[1]);
  conv_forward(tr.pooled[1], kSpotKernel, params, Block::kSpot2W, Block::kSpot2B,
               tr.spot2_cols, tr.spot2);
  relu_inplace(tr.spot2);
  maxpool(tr.spot2, tr.pooled[2], tr.pool_argmax[2]);
  check_finite(tr.pooled[2], "spotting");

  const Eigen::Map<const RowMatrix<T>> flat(tr.pooled[2].data(), 1, s.flat_size);
  const int np = s.num_predictions;
  RowMatrix<T> loc = flat * params.block(Block::kHeadLocW) + params.block(Block::kHeadLocB);
  RowMatrix<T> cls = flat * params.block(Block::kHeadClsW) + params.block(Block::kHeadClsB);
  tr.head_loc.resize(np, 2);
  tr.head_cls.resize(np, s.num_classes);
  for (int i = 0; i < np; ++i) {
    tr.head_loc(i, 0) = sigmoid(loc(0, 2 * i));
    tr.head_loc(i, 1) = sigmoid(loc(0, 2 * i + 1));
    const auto logits = cls.row(0).segment(i * s.num_classes, s.num_classes);
    const T mx = logits.maxCoeff();
    const auto e = (logits.array() - mx).exp();
    tr.head_cls.row(i) = e / e.sum();
  }
  check_finite(tr.head_loc, "head");
  check_finite(tr.head_cls, "head");

  tr.predictions.resize(np, 2 + s.num_classes);
  tr.predictions.leftCols(2) = tr.head_loc.template cast<double>();
  tr.predictions.rightCols(s.num_classes) = tr.head_cls.template cast<double>();
  return tr;
}

template <typename T>
void backward(const ForwardTrace<T>& tr, const ModelParams<T>& params,
              const Eigen::MatrixXd& d_scores, const Eigen::MatrixXd& d_predictions,
              std::span<T> grad) {
  if (tr.params != &params || tr.params_version != params.version())
    throw PreconditionError("forward trace is stale: parameters changed since forward");
  const NetworkShape& s = params.shape();
  const Eigen::Index len = s.chunk_frames;
  const int cf = s.seg_width();
  const int f = s.class_features;
  const int np = s.num_predictions;
  const int nc = s.num_classes;
  if (d_scores.rows() != len || d_scores.cols() != nc)
    throw PreconditionError("score gradient has the wrong shape");
  if (d_predictions.rows() != np || d_predictions.cols() != 2 + nc)
    throw PreconditionError("prediction gradient has the wrong shape");
  if (grad.size() != params.size()) throw PreconditionError("gradient buffer has the wrong size");

  // Heads.
  RowMatrix<T> dloc(1, 2 * np), dcls(1, nc * np);
  for (int i = 0; i < np; ++i) {
    for (int j = 0; j < 2; ++j) {
      const T y = tr.head_loc(i, j);
      dloc(0, 2 * i + j) = static_cast<T>(d_predictions(i, j)) * y * (T(1) - y);
    }
    T dot = 0;
    for (int c = 0; c < nc; ++c) dot += static_cast<T>(d_predictions(i, 2 + c)) * tr.head_cls(i, c);
    for (int c = 0; c < nc; ++c)
      dcls(0, i * nc + c) =
          tr.head_cls(i, c) * (static_cast<T>(d_predictions(i, 2 + c)) - dot);
  }
  const RowMatrix<T> flat = Eigen::Map<const RowMatrix<T>>(tr.pooled[2].data(), 1, s.flat_size);
  RowMatrix<T> dflat = dense_backward(flat, dloc, params, Block::kHeadLocW, Block::kHeadLocB, grad);
  dflat += dense_backward(flat, dcls, params, Block::kHeadClsW, Block::kHeadClsB, grad);
  const RowMatrix<T> dpool2 = Eigen::Map<const RowMatrix<T>>(dflat.data(), s.pooled_len[2],
                                                             s.spot_channels2);

  // Spotting trunk.
  RowMatrix<T> dspot2 = unpool(dpool2, tr.pool_argmax[2], tr.spot2.rows());
  relu_mask(dspot2, tr.spot2);
  RowMatrix<T> dcols =
      dense_backward(tr.spot2_cols, dspot2, params, Block::kSpot2W, Block::kSpot2B, grad);
  RowMatrix<T> dpool1 = RowMatrix<T>::Zero(tr.pooled[1].rows(), tr.pooled[1].cols());
  col2im_add(dcols, kSpotKernel, dpool1);
  RowMatrix<T> dspot1 = unpool(dpool1, tr.pool_argmax[1], tr.spot1.rows());
  relu_mask(dspot1, tr.spot1);
  dcols = dense_backward(tr.spot1_cols, dspot1, params, Block::kSpot1W, Block::kSpot1B, grad);
  RowMatrix<T> dpool0 = RowMatrix<T>::Zero(tr.pooled[0].rows(), tr.pooled[0].cols());
  col2im_add(dcols, kSpotKernel, dpool0);
  const RowMatrix<T> dspot_in = unpool(dpool0, tr.pool_argmax[0], len);

  // Segmentation head.
  RowMatrix<T> dscore = d_scores.template cast<T>();
  dscore += dspot_in.rightCols(nc);
  RowMatrix<T> dz(len, cf);
  const T head_scale = T(-2) / std::sqrt(T(f));
  for (Eigen::Index t = 0; t < len; ++t) {
    for (int c = 0; c < nc; ++c) {
      const T dist = tr.dist(t, c);
      for (int j = 0; j < f; ++j) {
        const int k = c * f + j;
        const T v = tr.sig(t, k);
        const T dv = dist > T(0) ? dscore(t, c) * head_scale * (v - T(0.5)) / dist : T(0);
        dz(t, k) = dv * v * (T(1) - v);
      }
    }
  }
  grad_block(grad, params, Block::kNormGamma).row(0) +=
      (dz.array() * tr.normalized.array()).colwise().sum().matrix();
  grad_block(grad, params, Block::kNormBeta).row(0) += dz.colwise().sum();
  RowMatrix<T> dnorm = dz.array().rowwise() * params.block(Block::kNormGamma).row(0).array();
  const T inv_len = T(1) / static_cast<T>(len);
  const Eigen::Matrix<T, 1, Eigen::Dynamic> sum_g = dnorm.colwise().sum();
  const Eigen::Array<T, 1, Eigen::Dynamic> sum_gx =
      (dnorm.array() * tr.normalized.array()).colwise().sum();
  RowMatrix<T> dtcnn(len, cf);
  for (Eigen::Index t = 0; t < len; ++t)
    for (int k = 0; k < cf; ++k)
      dtcnn(t, k) = tr.inv_std(k) * inv_len *
                    (static_cast<T>(len) * dnorm(t, k) - sum_g(k) -
                     tr.normalized(t, k) * sum_gx(k));

  // Class features also feed the spotting head through a ReLU.
  RowMatrix<T> dfeat = dspot_in.leftCols(cf);
  dtcnn += (tr.tcnn.array() > T(0)).select(dfeat, T(0));

  dcols = dense_backward(tr.tcnn_cols, dtcnn, params, Block::kTcnnW, Block::kTcnnB, grad);
  RowMatrix<T> dconcat = RowMatrix<T>::Zero(len, s.concat_width);
  col2im_add(dcols, kTcnnKernel, dconcat);

  RowMatrix<T> dmlp2 = dconcat.leftCols(s.mlp_out);
  int col = s.mlp_out;
  for (int i = 0; i < 4; ++i) {
    RowMatrix<T> dpyr = dconcat.middleCols(col, s.channels[i]);
    col += s.channels[i];
    relu_mask(dpyr, tr.pyr_out[i]);
    dcols = dense_backward(tr.pyr_cols[i], dpyr, params, kPyrW[i], kPyrB[i], grad);
    col2im_add(dcols, s.kernels[i], dmlp2);
  }

  relu_mask(dmlp2, tr.mlp2);
  RowMatrix<T> dmlp1 = dense_backward(tr.mlp1, dmlp2, params, Block::kMlp2W, Block::kMlp2B, grad);
  relu_mask(dmlp1, tr.mlp1);
  dense_backward(tr.input, dmlp1, params, Block::kMlp1W, Block::kMlp1B, grad);
}

template class ModelParams<float>;
template class ModelParams<double>;
template ModelParams<float> init_params<float>(const NetworkShape&, std::uint64_t);
template ModelParams<double> init_params<double>(const NetworkShape&, std::uint64_t);
template ModelParams<double> cast_params<double, float>(const ModelParams<float>&);
template ModelParams<float> cast_params<float, double>(const ModelParams<double>&);
template ModelParams<float> cast_params<float, float>(const ModelParams<float>&);
template ModelParams<double> cast_params<double, double>(const ModelParams<double>&);
template ForwardTrace<float> forward<float>(const RowMatrix<float>&, const ModelParams<float>&);
template ForwardTrace<double> forward<double>(const RowMatrix<double>&,
                                              const ModelParams<double>&);
template void backward<float>(const ForwardTrace<float>&, const ModelParams<float>&,
                              const Eigen::MatrixXd&, const Eigen::MatrixXd&, std::span<float>);
template void backward<double>(const ForwardTrace<double>&, const ModelParams<double>&,
                               const Eigen::MatrixXd&, const Eigen::MatrixXd&,
                               std::span<double>);

}  // namespace ctxspot
