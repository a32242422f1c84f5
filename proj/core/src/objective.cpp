#include "ctxspot/objective.hpp"

#include "ctxspot/errors.hpp"
#include "ctxspot/seg_loss.hpp"

namespace ctxspot {

ChunkTargets make_targets(const Chunk& chunk, const VideoAnnotations& ann,
                          const SpottingConfig& cfg) {
  if (static_cast<int>(chunk.actions.size()) > cfg.num_predictions)
    throw PreconditionError("chunk of " + chunk.video_id + " at frame " +
                            std::to_string(chunk.start_frame) + " holds " +
                            std::to_string(chunk.actions.size()) +
                            " actions, more than num_predictions");
  ChunkTargets t;
  t.shifts = tse_range(ann, cfg, chunk.start_frame, cfg.chunk_frames).values;
  t.actions = yolo_encode(chunk.actions, cfg.chunk_frames, cfg.num_classes);
  return t;
}

template <typename T>
LossBreakdown chunk_objective(const ModelParams<T>& params, const RowMatrix<T>& input,
                              const ChunkTargets& targets, const SpottingConfig& cfg,
                              std::span<T> grad, double grad_scale) {
  const ForwardTrace<T> trace = forward(input, params);
  const PredictionMatrix& y_hat = trace.predictions;
  const ActionMatrix& y = targets.actions;

  Matching m;
  if (cfg.ablation.use_matching) {
    std::vector<double> gt(y.rows()), pred(y_hat.rows());
    for (Eigen::Index i = 0; i < y.rows(); ++i) gt[i] = y(i, 1);
    for (Eigen::Index i = 0; i < y_hat.rows(); ++i) pred[i] = y_hat(i, 1);
    m = iterative_match(gt, pred);
  } else {
    m = identity_match(static_cast<int>(y.rows()), static_cast<int>(y_hat.rows()));
  }

  LossBreakdown out;
  out.seg = seg_loss_chunk(trace.seg_scores, targets.shifts, cfg);
  out.spot = spotting_loss(y, y_hat, m, cfg.alpha, cfg.beta);
  out.total = total_loss(out.spot, out.seg, cfg.lambda_seg);

  if (!grad.empty()) {
    Eigen::MatrixXd d_scores = seg_loss_chunk_grad(trace.seg_scores, targets.shifts, cfg);
    d_scores *= cfg.lambda_seg * grad_scale;
    Eigen::MatrixXd d_pred = spotting_grad(y, y_hat, m, cfg.alpha, cfg.beta);
    d_pred *= grad_scale;
    backward(trace, params, d_scores, d_pred, grad);
  }
  return out;
}

template LossBreakdown chunk_objective<float>(const ModelParams<float>&,
                                              const RowMatrix<float>&, const ChunkTargets&,
                                              const SpottingConfig&, std::span<float>, double);
template LossBreakdown chunk_objective<double>(const ModelParams<double>&,
                                               const RowMatrix<double>&, const ChunkTargets&,
                                               const SpottingConfig&, std::span<double>,
                                               double);

}  // namespace ctxspot
