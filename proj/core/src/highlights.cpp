#include "ctxspot/highlights.hpp"

#include <algorithm>
#include <cmath>

#include "ctxspot/errors.hpp"

namespace ctxspot {

std::vector<FrameInterval> detect_opportunity_segments(std::span<const double> curve,
                                                       double eta,
                                                       std::span<const int> action_frames,
                                                       int exclusion, int merge_gap) {
  if (!(eta > 0.0 && eta < 1.0)) throw PreconditionError("eta must be in (0, 1)");
  std::vector<FrameInterval> runs;
  const int n = static_cast<int>(curve.size());
  for (int i = 0; i < n;) {
    if (curve[i] < eta) {
      ++i;
      continue;
    }
    FrameInterval run{i, i, curve[i]};
    while (run.last + 1 < n && curve[run.last + 1] >= eta) {
      ++run.last;
      run.peak = std::max(run.peak, curve[run.last]);
    }
    if (!runs.empty() && run.first - runs.back().last - 1 < merge_gap) {
      runs.back().last = run.last;
      runs.back().peak = std::max(runs.back().peak, run.peak);
    } else {
      runs.push_back(run);
    }
    i = run.last + 1;
  }
  std::erase_if(runs, [&](const FrameInterval& r) {
    return std::any_of(action_frames.begin(), action_frames.end(), [&](int a) {
      return a >= r.first - exclusion && a <= r.last + exclusion;
    });
  });
  return runs;
}

std::vector<HighlightClip> build_reel(std::span<const Spot> spots,
                                      std::span<const FrameInterval> intervals, double fps,
                                      const HighlightsConfig& cfg) {
  if (!(fps > 0.0)) throw PreconditionError("fps must be positive");
  std::vector<HighlightClip> clips;
  for (const Spot& s : spots) {
    if (std::find(cfg.reel_classes.begin(), cfg.reel_classes.end(), s.class_index) ==
        cfg.reel_classes.end())
      continue;
    const double t = s.frame / fps;
    clips.push_back({std::max(0.0, t - cfg.clip_before_s), t + cfg.clip_after_s,
                     ClipSource::kSpot, s.class_index, s.confidence});
  }
  for (const FrameInterval& r : intervals) {
    if (r.peak < cfg.segment_threshold) continue;
    clips.push_back({std::max(0.0, r.first / fps - cfg.clip_before_s),
                     r.last / fps + cfg.clip_after_s, ClipSource::kSegmentation,
                     cfg.opportunity_class, r.peak});
  }
  std::sort(clips.begin(), clips.end(), [](const HighlightClip& a, const HighlightClip& b) {
    return a.start_s != b.start_s ? a.start_s < b.start_s : a.end_s < b.end_s;
  });
  std::vector<HighlightClip> reel;
  for (const HighlightClip& c : clips) {
    if (!reel.empty() && c.start_s <= reel.back().end_s) {
      HighlightClip& last = reel.back();
      last.end_s = std::max(last.end_s, c.end_s);
      if (c.source == ClipSource::kSpot && last.source != ClipSource::kSpot) {
        last.source = ClipSource::kSpot;
        last.class_index = c.class_index;
        last.score = c.score;
      } else if (c.source == last.source && c.score > last.score) {
        last.class_index = c.class_index;
        last.score = c.score;
      }
    } else {
      reel.push_back(c);
    }
  }
  return reel;
}

PrecisionTable precision_vs_threshold(std::span<const HighlightInput> videos,
                                      const HighlightsConfig& cfg) {
  PrecisionTable table;
  table.evaluable = std::any_of(videos.begin(), videos.end(), [](const HighlightInput& v) {
    return v.annotations.opportunities.has_value();
  });
  if (!table.evaluable) return table;
  for (double eta : cfg.eta_grid) {
    PrecisionRow row;
    row.eta = eta;
    for (const HighlightInput& v : videos) {
      if (!v.annotations.opportunities) continue;
      const std::vector<int> actions = v.annotations.frames_of(cfg.opportunity_class);
      const auto segments = detect_opportunity_segments(v.curve, eta, actions,
                                                        cfg.exclusion_frames,
                                                        cfg.merge_gap_frames);
      for (const FrameInterval& seg : segments) {
        ++row.inspected;
        const bool hit = std::any_of(
            v.annotations.opportunities->begin(), v.annotations.opportunities->end(),
            [&](const ActionEvent& o) {
              return o.class_index == cfg.opportunity_class &&
                     seg.first < o.frame + cfg.opportunity_window_after &&
                     seg.last >= o.frame - cfg.opportunity_window_before;
            });
        if (hit) ++row.true_positives;
      }
    }
    row.precision = row.inspected > 0
                        ? static_cast<double>(row.true_positives) / row.inspected
                        : 1.0;
    table.rows.push_back(row);
  }
  return table;
}

std::string clip_source_name(ClipSource s) {
  return s == ClipSource::kSpot ? "spot" : "segmentation";
}

}  // namespace ctxspot
