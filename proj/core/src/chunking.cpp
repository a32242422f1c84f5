#include "ctxspot/chunking.hpp"

#include <algorithm>

#include "ctxspot/errors.hpp"

namespace ctxspot {

Chunk extract_chunk(const VideoAnnotations& ann, const FeatureSequence& features, int start,
                    int length) {
  if (length <= 0) throw PreconditionError("chunk length must be positive");
  const int n = features.num_frames();
  Chunk chunk;
  chunk.video_id = ann.video_id;
  chunk.start_frame = start;
  chunk.features = FeatureMatrix::Zero(length, features.feature_dim());
  const int lo = std::max(start, 0);
  const int hi = std::min(start + length, n);
  if (hi > lo) chunk.features.middleRows(lo - start, hi - lo) = features.values.middleRows(lo, hi - lo);
  chunk.padded_prefix = std::clamp(-start, 0, length);
  chunk.padded_suffix = std::clamp(start + length - n, 0, length);
  for (const auto& a : ann.actions)
    if (a.frame >= start && a.frame < start + length)
      chunk.actions.push_back({a.class_index, a.frame - start});
  return chunk;
}

std::vector<Chunk> sample_chunks(const VideoAnnotations& ann, const FeatureSequence& features,
                                 const SpottingConfig& cfg, std::mt19937_64& rng) {
  const int nf = cfg.chunk_frames;
  std::vector<Chunk> out;
  for (std::size_t i = 0; i < ann.actions.size(); ++i) {
    std::uniform_int_distribution<int> offset(0, nf - 1);
    Chunk c = extract_chunk(ann, features, ann.actions[i].frame - offset(rng), nf);
    c.source_action = static_cast<int>(i);
    out.push_back(std::move(c));
  }

  const int n_gt = static_cast<int>(ann.actions.size());
  const int n_background = (n_gt + cfg.num_classes - 1) / cfg.num_classes;
  if (n_background == 0) return out;

  // Starts whose window overlaps the video but holds no action.
  std::vector<int> valid;
  const int n = features.num_frames();
  for (int s = -(nf - 1); s < n; ++s) {
    auto it = std::lower_bound(ann.actions.begin(), ann.actions.end(), s,
                               [](const ActionEvent& a, int f) { return a.frame < f; });
    if (it == ann.actions.end() || it->frame >= s + nf) valid.push_back(s);
  }
  if (valid.empty()) return out;
  std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
  for (int b = 0; b < n_background; ++b)
    out.push_back(extract_chunk(ann, features, valid[pick(rng)], nf));
  return out;
}

}  // namespace ctxspot
