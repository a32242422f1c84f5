#include "ctxspot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ctxspot/errors.hpp"

namespace ctxspot {
namespace {

constexpr double kFrameSlack = 1e-9;

double tolerance_frames(double delta_s, double fps, bool half_window) {
  return (half_window ? delta_s / 2.0 : delta_s) * fps;
}

double mean_of(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Per tolerance, per class: labeled predictions and ground-truth count.
struct ClassPool {
  std::vector<LabeledPrediction> preds;
  int n_gt = 0;
};

// mAP over classes of one pool set; nullopt entries are skipped classes.
double pooled_map(const std::vector<ClassPool>& pools, ApInterpolation interp,
                  std::vector<std::optional<double>>* per_class) {
  std::vector<double> aps;
  for (const auto& pool : pools) {
    std::optional<double> ap;
    if (pool.n_gt > 0 || !pool.preds.empty()) {
      ap = average_precision(pool.preds, pool.n_gt, interp);
      aps.push_back(*ap);
    }
    if (per_class) per_class->push_back(ap);
  }
  return mean_of(aps);
}

// Index of the nearest same-class ground truth (lower index on ties), -1 when
// there is none.
int nearest_gt(const Spot& p, std::span<const ActionEvent> gts, bool same_class) {
  int best = -1;
  int best_d = std::numeric_limits<int>::max();
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (same_class && gts[g].class_index != p.class_index) continue;
    const int d = std::abs(gts[g].frame - p.frame);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(g);
    }
  }
  return best;
}

// Binned Average-mAP given a bin per ground truth and a rule assigning
// unmatched predictions to a bin (-1 drops the prediction).
template <typename FpBin>
std::vector<BinResult> binned_map(std::span<const VideoSpots> videos, int num_classes,
                                  const MetricConfig& metric,
                                  const std::vector<std::vector<int>>& gt_bin,
                                  std::vector<BinResult> bins, FpBin fp_bin) {
  const std::size_t nb = bins.size();
  for (std::size_t v = 0; v < videos.size(); ++v)
    for (int b : gt_bin[v]) ++bins[b].num_actions;

  // sums[b] accumulates mAP over tolerances.
  std::vector<double> sums(nb, 0.0);
  for (double delta : metric.tolerances_s) {
    std::vector<std::vector<ClassPool>> pools(nb, std::vector<ClassPool>(num_classes));
    for (std::size_t v = 0; v < videos.size(); ++v) {
      const auto& vid = videos[v];
      for (std::size_t g = 0; g < vid.ground_truth.size(); ++g)
        ++pools[gt_bin[v][g]][vid.ground_truth[g].class_index].n_gt;
      const ToleranceMatch m = match_tolerance(vid.predictions, vid.ground_truth, delta,
                                               vid.fps, metric.half_window);
      for (std::size_t p = 0; p < vid.predictions.size(); ++p) {
        const Spot& s = vid.predictions[p];
        const int b = m.is_tp(static_cast<int>(p)) ? gt_bin[v][m.claimed_gt[p]]
                                                   : fp_bin(vid, s, gt_bin[v]);
        if (b < 0) continue;
        pools[b][s.class_index].preds.push_back({s.confidence, m.is_tp(static_cast<int>(p))});
      }
    }
    for (std::size_t b = 0; b < nb; ++b)
      sums[b] += pooled_map(pools[b], metric.interpolation, nullptr);
  }
  for (std::size_t b = 0; b < nb; ++b)
    if (bins[b].num_actions > 0)
      bins[b].average_map = sums[b] / static_cast<double>(metric.tolerances_s.size());
  return bins;
}

void check_classes(std::span<const VideoSpots> videos, int num_classes) {
  for (const auto& v : videos) {
    for (const auto& s : v.predictions)
      if (s.class_index < 0 || s.class_index >= num_classes)
        throw PreconditionError(v.video_id + ": prediction class out of range");
    for (const auto& g : v.ground_truth)
      if (g.class_index < 0 || g.class_index >= num_classes)
        throw PreconditionError(v.video_id + ": ground-truth class out of range");
  }
}

}  // namespace

ToleranceMatch match_tolerance(std::span<const Spot> preds, std::span<const ActionEvent> gts,
                               double delta_s, double fps, bool half_window) {
  if (!(delta_s > 0.0)) throw PreconditionError("tolerance must be positive");
  const double tol = tolerance_frames(delta_s, fps, half_window) + kFrameSlack;
  ToleranceMatch m;
  m.order.resize(preds.size());
  std::iota(m.order.begin(), m.order.end(), 0);
  std::stable_sort(m.order.begin(), m.order.end(), [&](int a, int b) {
    return preds[a].confidence > preds[b].confidence;
  });
  m.claimed_gt.assign(preds.size(), -1);
  m.gt_claimed.assign(gts.size(), false);
  for (int p : m.order) {
    int best = -1;
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (m.gt_claimed[g] || gts[g].class_index != preds[p].class_index) continue;
      const int d = std::abs(gts[g].frame - preds[p].frame);
      if (d <= tol && d < best_d) {
        best_d = d;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      m.claimed_gt[p] = best;
      m.gt_claimed[best] = true;
      ++m.num_tp;
    } else {
      ++m.num_fp;
    }
  }
  m.num_fn = static_cast<int>(gts.size()) - m.num_tp;
  return m;
}

double average_precision(std::span<const LabeledPrediction> preds, int n_gt,
                         ApInterpolation interp) {
  if (n_gt <= 0) return 0.0;
  std::vector<LabeledPrediction> sorted(preds.begin(), preds.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const auto& a, const auto& b) { return a.confidence > b.confidence; });
  const std::size_t n = sorted.size();
  std::vector<double> precision(n), recall(n);
  int tp = 0;
  for (std::size_t k = 0; k < n; ++k) {
    tp += sorted[k].tp ? 1 : 0;
    precision[k] = static_cast<double>(tp) / static_cast<double>(k + 1);
    recall[k] = static_cast<double>(tp) / n_gt;
  }
  // Non-increasing precision envelope.
  for (std::size_t k = n; k-- > 1;) precision[k - 1] = std::max(precision[k - 1], precision[k]);

  if (interp == ApInterpolation::kElevenPoint) {
    double sum = 0.0;
    for (int i = 0; i <= 10; ++i) {
      const double r = i / 10.0;
      for (std::size_t k = 0; k < n; ++k) {
        if (recall[k] >= r - 1e-12) {
          sum += precision[k];
          break;
        }
      }
    }
    return sum / 11.0;
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    ap += (recall[k] - prev_recall) * precision[k];
    prev_recall = recall[k];
  }
  return ap;
}

MapResult average_map(std::span<const VideoSpots> videos, int num_classes,
                      const MetricConfig& metric) {
  if (metric.tolerances_s.empty()) throw PreconditionError("empty tolerance set");
  check_classes(videos, num_classes);
  MapResult r;
  r.tolerances_s = metric.tolerances_s;
  for (double delta : metric.tolerances_s) {
    std::vector<ClassPool> pools(num_classes);
    for (const auto& v : videos) {
      for (const auto& g : v.ground_truth) ++pools[g.class_index].n_gt;
      const ToleranceMatch m =
          match_tolerance(v.predictions, v.ground_truth, delta, v.fps, metric.half_window);
      for (std::size_t p = 0; p < v.predictions.size(); ++p)
        pools[v.predictions[p].class_index].preds.push_back(
            {v.predictions[p].confidence, m.is_tp(static_cast<int>(p))});
    }
    std::vector<std::optional<double>> per_class;
    r.map.push_back(pooled_map(pools, metric.interpolation, &per_class));
    r.per_class_ap.push_back(std::move(per_class));
  }
  r.average_map = mean_of(r.map);
  return r;
}

std::vector<ClassCurve> per_class_curves(std::span<const VideoSpots> videos, int num_classes,
                                         std::span<const double> thresholds,
                                         const MetricConfig& metric) {
  if (static_cast<int>(thresholds.size()) != num_classes)
    throw PreconditionError("need one threshold per class");
  check_classes(videos, num_classes);
  std::vector<ClassCurve> curves;
  for (int c = 0; c < num_classes; ++c) {
    ClassCurve curve;
    curve.class_index = c;
    curve.threshold = thresholds[c];
    // Retained predictions and ground truths of class c, per video.
    std::vector<std::vector<Spot>> kept(videos.size());
    std::vector<std::vector<ActionEvent>> gts(videos.size());
    for (std::size_t v = 0; v < videos.size(); ++v) {
      for (const auto& s : videos[v].predictions)
        if (s.class_index == c && s.confidence >= thresholds[c]) kept[v].push_back(s);
      for (const auto& g : videos[v].ground_truth)
        if (g.class_index == c) gts[v].push_back(g);
    }
    for (double delta : metric.tolerances_s) {
      ClassCurvePoint pt;
      pt.tolerance_s = delta;
      for (std::size_t v = 0; v < videos.size(); ++v) {
        const ToleranceMatch m =
            match_tolerance(kept[v], gts[v], delta, videos[v].fps, metric.half_window);
        pt.tp += m.num_tp;
        pt.fp += m.num_fp;
        pt.fn += m.num_fn;
      }
      pt.precision = pt.tp + pt.fp > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fp) : 1.0;
      pt.recall = pt.tp + pt.fn > 0 ? static_cast<double>(pt.tp) / (pt.tp + pt.fn) : 1.0;
      pt.f1 = pt.precision + pt.recall > 0.0
                  ? 2.0 * pt.precision * pt.recall / (pt.precision + pt.recall)
                  : 0.0;
      curve.points.push_back(pt);
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

std::vector<double> optimize_thresholds(std::span<const VideoSpots> videos, int num_classes,
                                        const MetricConfig& metric) {
  std::vector<double> best(num_classes, 0.0);
  std::vector<double> best_f1(num_classes, -1.0);
  for (int step = 0; step <= 100; ++step) {
    const double th = step / 100.0;
    const std::vector<double> ths(num_classes, th);
    const auto curves = per_class_curves(videos, num_classes, ths, metric);
    for (int c = 0; c < num_classes; ++c) {
      double f1 = 0.0;
      for (const auto& pt : curves[c].points) f1 += pt.f1;
      f1 /= static_cast<double>(curves[c].points.size());
      if (f1 > best_f1[c]) {
        best_f1[c] = f1;
        best[c] = th;
      }
    }
  }
  return best;
}

std::vector<BinResult> bin_by_game_time(std::span<const VideoSpots> videos, int num_classes,
                                        const MetricConfig& metric) {
  check_classes(videos, num_classes);
  const double bin_s = metric.game_bin_minutes * 60.0;
  auto bin_of = [&](int frame, double fps) {
    return static_cast<int>(std::floor(frame / fps / bin_s));
  };
  int max_bin = -1;
  std::vector<std::vector<int>> gt_bin(videos.size());
  for (std::size_t v = 0; v < videos.size(); ++v) {
    for (const auto& g : videos[v].ground_truth) {
      gt_bin[v].push_back(bin_of(g.frame, videos[v].fps));
      max_bin = std::max(max_bin, gt_bin[v].back());
    }
    for (const auto& s : videos[v].predictions)
      max_bin = std::max(max_bin, bin_of(s.frame, videos[v].fps));
  }
  std::vector<BinResult> bins(static_cast<std::size_t>(max_bin + 1));
  for (int b = 0; b <= max_bin; ++b) {
    bins[b].lower = b * metric.game_bin_minutes;
    bins[b].upper = (b + 1) * metric.game_bin_minutes;
  }
  return binned_map(videos, num_classes, metric, gt_bin, std::move(bins),
                    [&](const VideoSpots& vid, const Spot& s, const std::vector<int>& gb) {
                      const int g = nearest_gt(s, vid.ground_truth, true);
                      return g >= 0 ? gb[g] : bin_of(s.frame, vid.fps);
                    });
}

std::vector<BinResult> bin_by_vicinity(std::span<const VideoSpots> videos, int num_classes,
                                       const MetricConfig& metric) {
  check_classes(videos, num_classes);
  const auto& edges = metric.vicinity_edges_s;
  if (edges.empty()) throw PreconditionError("no vicinity bin edges");
  std::vector<BinResult> bins(edges.size());
  for (std::size_t i = 0; i < edges.size(); ++i) {
    bins[i].lower = edges[i];
    bins[i].upper = i + 1 < edges.size() ? edges[i + 1] : std::numeric_limits<double>::infinity();
  }
  auto bin_of = [&](double dist_s) {
    int b = 0;
    for (std::size_t i = 0; i < edges.size(); ++i)
      if (dist_s >= edges[i]) b = static_cast<int>(i);
    return b;
  };
  std::vector<std::vector<int>> gt_bin(videos.size());
  for (std::size_t v = 0; v < videos.size(); ++v) {
    const auto& gts = videos[v].ground_truth;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t h = 0; h < gts.size(); ++h)
        if (h != g) d = std::min(d, std::abs(gts[g].frame - gts[h].frame) / videos[v].fps);
      gt_bin[v].push_back(bin_of(d));
    }
  }
  return binned_map(videos, num_classes, metric, gt_bin, std::move(bins),
                    [&](const VideoSpots& vid, const Spot& s, const std::vector<int>& gb) {
                      int g = nearest_gt(s, vid.ground_truth, true);
                      if (g < 0) g = nearest_gt(s, vid.ground_truth, false);
                      return g >= 0 ? gb[g] : -1;
                    });
}

EvalReport evaluate(std::span<const VideoSpots> videos, int num_classes,
                    const MetricConfig& metric, std::span<const double> thresholds) {
  EvalReport r;
  r.map = average_map(videos, num_classes, metric);
  std::vector<double> th(thresholds.begin(), thresholds.end());
  if (th.empty()) th.assign(num_classes, 0.0);
  r.curves = per_class_curves(videos, num_classes, th, metric);
  r.game_time_bins = bin_by_game_time(videos, num_classes, metric);
  r.vicinity_bins = bin_by_vicinity(videos, num_classes, metric);
  for (const auto& v : videos) r.total_ground_truth += static_cast<int>(v.ground_truth.size());
  return r;
}

}  // namespace ctxspot
