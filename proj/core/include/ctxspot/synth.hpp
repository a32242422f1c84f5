#pragma once

#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "ctxspot/annotations.hpp"
#include "ctxspot/features.hpp"

namespace ctxspot {

/// Synthetic feature sequences with planted actions. Every class owns a
/// random unit "signature" direction injected for `signature_frames` frames
/// from the action frame on, and a weaker "cue" direction injected over the
/// `cue_frames` before it with probability `cue_probability`. Opportunities
/// carry a cue plus a truncated signature but no annotation.
struct SynthSpec {
  int train_videos = 32;
  int val_videos = 8;
  int test_videos = 16;
  int video_frames = 240;
  double fps = 2.0;
  int num_classes = 3;
  int feature_dim = 16;
  /// Actions per video, drawn uniformly in [min_actions, max_actions].
  int min_actions = 3;
  int max_actions = 5;
  int signature_frames = 20;
  int cue_frames = 10;
  double cue_probability = 0.7;
  double amplitude = 3.0;
  double cue_amplitude = 1.0;
  /// Expected opportunities per video, per class.
  std::vector<double> opportunity_rate{0.5, 0.0, 0.0};
  int opportunity_signature_frames = 10;
  double noise_sigma = 1.0;
  std::uint64_t seed = 42;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

SynthSpec synth_spec_from_json_text(const std::string& text);
SynthSpec load_synth_spec(const std::filesystem::path& path);
std::string synth_spec_to_json_text(const SynthSpec& spec);
std::uint64_t synth_spec_hash(const SynthSpec& spec);

/// Class signature and cue directions (unit vectors), fixed by spec.seed.
struct SynthPatterns {
  std::vector<Eigen::VectorXf> signatures;
  std::vector<Eigen::VectorXf> cues;
};

SynthPatterns make_patterns(const SynthSpec& spec);

struct SynthVideo {
  FeatureSequence features;
  VideoAnnotations annotations;
};

/// Generates one video whose action classes are `action_classes` (one entry
/// per action). Throws PreconditionError when the events cannot fit.
SynthVideo generate_video(const SynthSpec& spec, const SynthPatterns& patterns,
                          const std::vector<int>& action_classes,
                          const std::string& video_id, std::mt19937_64& rng);

/// Draws the action count and classes from `rng`.
SynthVideo generate_video(const SynthSpec& spec, std::mt19937_64& rng,
                          const std::string& video_id = "video");

struct SynthSplits {
  std::vector<SynthVideo> train;
  std::vector<SynthVideo> val;
  std::vector<SynthVideo> test;
};

/// Deterministic given spec.seed; action classes are balanced within each
/// split (per-class totals differ by at most one).
SynthSplits generate_splits(const SynthSpec& spec);

/// Writes <out>/{train,val,test}/<id>.json (annotations),
/// <id>.features.bin with its <id>.features.json sidecar, and
/// <out>/manifest.json.
void generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir);

}  // namespace ctxspot
