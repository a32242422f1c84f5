#include "ctxspot/tse.hpp"

#include <algorithm>

#include "ctxspot/errors.hpp"

namespace ctxspot {

int tse_frame(int frame, std::optional<int> past_action, std::optional<int> future_action,
              const SlicingParams& k) {
  validate_slicing(k, /*allow_degenerate=*/true);
  if (past_action && *past_action > frame)
    throw PreconditionError("past action after the encoded frame");
  if (future_action && *future_action <= frame)
    throw PreconditionError("future action at or before the encoded frame");

  if (!past_action && !future_action) return k.k1;
  if (!future_action) return frame - *past_action;
  const int s_f = frame - *future_action;
  if (!past_action) return s_f;
  const int s_p = frame - *past_action;

  if (s_p < k.k3) return s_p;
  if (s_p >= k.k4) return s_f;
  if (s_f <= k.k1) return s_p;
  // Transition zone of the past action against the just-before zone of the
  // future one: keep the past shift only when it is strictly closer, in
  // relative terms, to its zone start.
  const long long lhs = static_cast<long long>(s_p - k.k3) * (k.k2 - k.k1);
  const long long rhs = static_cast<long long>(k.k2 - s_f) * (k.k4 - k.k3);
  return lhs < rhs ? s_p : s_f;
}

TseMap tse_range(const VideoAnnotations& ann, const SpottingConfig& cfg, int first_frame,
                 int count) {
  if (count < 0) throw PreconditionError("negative frame count");
  TseMap map;
  map.first_frame = first_frame;
  map.values.resize(count, cfg.num_classes);
  map.action_frames.resize(static_cast<std::size_t>(cfg.num_classes));
  for (int c = 0; c < cfg.num_classes; ++c) {
    const SlicingParams k = cfg.slicing_for(c);
    const std::vector<int> frames = ann.frames_of(c);
    map.action_frames[c] = frames;
    for (int i = 0; i < count; ++i) {
      const int x = first_frame + i;
      // First action strictly after x; the one before it (if any) is <= x.
      auto it = std::upper_bound(frames.begin(), frames.end(), x);
      std::optional<int> future, past;
      if (it != frames.end()) future = *it;
      if (it != frames.begin()) past = *std::prev(it);
      map.values(i, c) = tse_frame(x, past, future, k);
    }
  }
  return map;
}

TseMap tse_video(const VideoAnnotations& ann, const SpottingConfig& cfg) {
  ann.validate(cfg.num_classes);
  return tse_range(ann, cfg, 0, ann.num_frames);
}

}  // namespace ctxspot
