#include "ctxspot/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "ctxspot/hashing.hpp"
#include "json.hpp"

namespace ctxspot {
namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& field, const std::string& why) {
  throw ConfigError("synth field '" + field + "': " + why);
}

int slot_frames(const SynthSpec& s) { return s.cue_frames + s.signature_frames; }

Eigen::VectorXf random_unit(int dim, std::mt19937_64& rng) {
  std::normal_distribution<float> n(0.0f, 1.0f);
  Eigen::VectorXf v(dim);
  do {
    for (int i = 0; i < dim; ++i) v(i) = n(rng);
  } while (v.norm() < 1e-3f);
  return v.normalized();
}

struct Event {
  int class_index;
  bool annotated;
};

}  // namespace

void SynthSpec::validate() const {
  if (train_videos < 0 || val_videos < 0 || test_videos < 0)
    fail("train_videos", "split sizes must be >= 0");
  if (video_frames <= 0) fail("video_frames", "must be positive");
  if (!(fps > 0.0)) fail("fps", "must be positive");
  if (num_classes <= 0) fail("num_classes", "must be positive");
  if (feature_dim <= 0) fail("feature_dim", "must be positive");
  if (min_actions < 0 || max_actions < min_actions)
    fail("max_actions", "need 0 <= min_actions <= max_actions");
  if (signature_frames < 1) fail("signature_frames", "must be >= 1");
  if (cue_frames < 1) fail("cue_frames", "must be >= 1");
  if (!(cue_probability >= 0.0 && cue_probability <= 1.0))
    fail("cue_probability", "must be in [0, 1]");
  if (!(amplitude > 0.0)) fail("amplitude", "must be positive");
  if (!(cue_amplitude >= 0.0)) fail("cue_amplitude", "must be >= 0");
  if (static_cast<int>(opportunity_rate.size()) != num_classes)
    fail("opportunity_rate", "needs one rate per class");
  for (double r : opportunity_rate)
    if (!(r >= 0.0)) fail("opportunity_rate", "rates must be >= 0");
  if (opportunity_signature_frames < 1 || opportunity_signature_frames > signature_frames)
    fail("opportunity_signature_frames", "must be in [1, signature_frames]");
  if (!(noise_sigma > 0.0)) fail("noise_sigma", "must be positive");
  if (max_actions * slot_frames(*this) > video_frames)
    fail("video_frames", "too short for max_actions events");
}

SynthSpec synth_spec_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("synth spec: expected an object");
  static const std::set<std::string> kKeys = {
      "train_videos", "val_videos", "test_videos", "video_frames", "fps", "num_classes",
      "feature_dim", "min_actions", "max_actions", "signature_frames", "cue_frames",
      "cue_probability", "amplitude", "cue_amplitude", "opportunity_rate",
      "opportunity_signature_frames", "noise_sigma", "seed"};
  for (const auto& [key, _] : root.items())
    if (!kKeys.count(key)) fail(key, "unknown field");

  SynthSpec s;
  auto read = [&](const char* key, auto& out) {
    if (!root.contains(key)) return;
    try {
      root[key].get_to(out);
    } catch (const json::exception& e) {
      fail(key, e.what());
    }
  };
  read("train_videos", s.train_videos);
  read("val_videos", s.val_videos);
  read("test_videos", s.test_videos);
  read("video_frames", s.video_frames);
  read("fps", s.fps);
  read("num_classes", s.num_classes);
  read("feature_dim", s.feature_dim);
  read("min_actions", s.min_actions);
  read("max_actions", s.max_actions);
  read("signature_frames", s.signature_frames);
  read("cue_frames", s.cue_frames);
  read("cue_probability", s.cue_probability);
  read("amplitude", s.amplitude);
  read("cue_amplitude", s.cue_amplitude);
  if (!root.contains("opportunity_rate")) {
    s.opportunity_rate.assign(static_cast<std::size_t>(std::max(s.num_classes, 0)), 0.0);
    if (!s.opportunity_rate.empty()) s.opportunity_rate[0] = 0.5;
  }
  read("opportunity_rate", s.opportunity_rate);
  read("opportunity_signature_frames", s.opportunity_signature_frames);
  read("noise_sigma", s.noise_sigma);
  read("seed", s.seed);
  s.validate();
  return s;
}

SynthSpec load_synth_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open synth spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return synth_spec_from_json_text(ss.str());
}

std::string synth_spec_to_json_text(const SynthSpec& s) {
  const json root = {{"train_videos", s.train_videos},
                     {"val_videos", s.val_videos},
                     {"test_videos", s.test_videos},
                     {"video_frames", s.video_frames},
                     {"fps", s.fps},
                     {"num_classes", s.num_classes},
                     {"feature_dim", s.feature_dim},
                     {"min_actions", s.min_actions},
                     {"max_actions", s.max_actions},
                     {"signature_frames", s.signature_frames},
                     {"cue_frames", s.cue_frames},
                     {"cue_probability", s.cue_probability},
                     {"amplitude", s.amplitude},
                     {"cue_amplitude", s.cue_amplitude},
                     {"opportunity_rate", s.opportunity_rate},
                     {"opportunity_signature_frames", s.opportunity_signature_frames},
                     {"noise_sigma", s.noise_sigma},
                     {"seed", s.seed}};
  return root.dump(2);
}

std::uint64_t synth_spec_hash(const SynthSpec& spec) {
  return fnv1a64(synth_spec_to_json_text(spec));
}

SynthPatterns make_patterns(const SynthSpec& spec) {
  std::mt19937_64 rng(mix_seed(spec.seed, 0));
  const int n = 2 * spec.num_classes;
  std::vector<Eigen::VectorXf> all;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    all.clear();
    for (int i = 0; i < n; ++i) all.push_back(random_unit(spec.feature_dim, rng));
    bool ok = true;
    for (int i = 0; i < n && ok; ++i)
      for (int j = i + 1; j < n && ok; ++j) ok = std::abs(all[i].dot(all[j])) < 0.9f;
    if (ok) break;
    if (attempt == 999)
      throw PreconditionError("cannot draw non-collinear patterns; raise feature_dim");
  }
  SynthPatterns p;
  p.signatures.assign(all.begin(), all.begin() + spec.num_classes);
  p.cues.assign(all.begin() + spec.num_classes, all.end());
  return p;
}

SynthVideo generate_video(const SynthSpec& spec, const SynthPatterns& patterns,
                          const std::vector<int>& action_classes, const std::string& video_id,
                          std::mt19937_64& rng) {
  const int n = spec.video_frames;
  const int slot = slot_frames(spec);
  const int capacity = n / slot;
  if (static_cast<int>(action_classes.size()) > capacity)
    throw PreconditionError("video of " + std::to_string(n) + " frames cannot hold " +
                            std::to_string(action_classes.size()) + " events");

  std::vector<Event> events;
  for (int c : action_classes) {
    if (c < 0 || c >= spec.num_classes) throw PreconditionError("action class out of range");
    events.push_back({c, true});
  }
  // Opportunities fill whatever room the actions leave.
  for (int c = 0; c < spec.num_classes; ++c) {
    if (spec.opportunity_rate[c] <= 0.0) continue;
    std::poisson_distribution<int> count(spec.opportunity_rate[c]);
    const int k = count(rng);
    for (int i = 0; i < k && static_cast<int>(events.size()) < capacity; ++i)
      events.push_back({c, false});
  }
  std::shuffle(events.begin(), events.end(), rng);

  // Slots in order; the free frames are split uniformly among the gaps.
  const int m = static_cast<int>(events.size());
  const int free_frames = n - m * slot;
  std::uniform_int_distribution<int> cut(0, free_frames);
  std::vector<int> gaps(m);
  for (int& g : gaps) g = cut(rng);
  std::sort(gaps.begin(), gaps.end());

  SynthVideo video;
  video.features.video_id = video_id;
  video.features.values.resize(n, spec.feature_dim);
  std::normal_distribution<float> noise(0.0f, static_cast<float>(spec.noise_sigma));
  for (Eigen::Index i = 0; i < video.features.values.size(); ++i)
    video.features.values.data()[i] = noise(rng);

  auto& ann = video.annotations;
  ann.video_id = video_id;
  ann.fps = spec.fps;
  ann.num_frames = n;
  std::vector<ActionEvent> opportunities;
  std::bernoulli_distribution has_cue(spec.cue_probability);
  const auto amp = static_cast<float>(spec.amplitude);
  const auto cue_amp = static_cast<float>(spec.cue_amplitude);
  for (int e = 0; e < m; ++e) {
    const Event& ev = events[e];
    const int t = gaps[e] + e * slot + spec.cue_frames;
    const bool cue = ev.annotated ? has_cue(rng) : true;
    if (cue)
      for (int j = t - spec.cue_frames; j < t; ++j)
        video.features.values.row(j) += cue_amp * patterns.cues[ev.class_index].transpose();
    const int sig = ev.annotated ? spec.signature_frames : spec.opportunity_signature_frames;
    for (int j = t; j < t + sig; ++j)
      video.features.values.row(j) += amp * patterns.signatures[ev.class_index].transpose();
    (ev.annotated ? ann.actions : opportunities).push_back({ev.class_index, t});
  }
  std::sort(ann.actions.begin(), ann.actions.end(), chronological);
  std::sort(opportunities.begin(), opportunities.end(), chronological);
  if (std::any_of(spec.opportunity_rate.begin(), spec.opportunity_rate.end(),
                  [](double r) { return r > 0.0; }))
    ann.opportunities = std::move(opportunities);
  ann.validate(spec.num_classes);
  return video;
}

SynthVideo generate_video(const SynthSpec& spec, std::mt19937_64& rng,
                          const std::string& video_id) {
  spec.validate();
  const SynthPatterns patterns = make_patterns(spec);
  std::uniform_int_distribution<int> count(spec.min_actions, spec.max_actions);
  std::uniform_int_distribution<int> cls(0, spec.num_classes - 1);
  std::vector<int> classes(static_cast<std::size_t>(count(rng)));
  for (int& c : classes) c = cls(rng);
  return generate_video(spec, patterns, classes, video_id, rng);
}

SynthSplits generate_splits(const SynthSpec& spec) {
  spec.validate();
  const SynthPatterns patterns = make_patterns(spec);
  SynthSplits out;
  const std::pair<const char*, int> splits[3] = {
      {"train", spec.train_videos}, {"val", spec.val_videos}, {"test", spec.test_videos}};
  std::vector<SynthVideo>* targets[3] = {&out.train, &out.val, &out.test};
  for (int s = 0; s < 3; ++s) {
    const auto [name, num_videos] = splits[s];
    std::mt19937_64 layout(mix_seed(spec.seed, 1 + static_cast<std::uint64_t>(s)));
    std::uniform_int_distribution<int> count(spec.min_actions, spec.max_actions);
    std::vector<int> counts(static_cast<std::size_t>(num_videos));
    int total = 0;
    for (int& c : counts) total += (c = count(layout));
    // Round-robin classes, shuffled, so per-class totals differ by at most one.
    std::vector<int> classes(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) classes[i] = i % spec.num_classes;
    std::shuffle(classes.begin(), classes.end(), layout);

    int next = 0;
    for (int v = 0; v < num_videos; ++v) {
      std::vector<int> mine(classes.begin() + next, classes.begin() + next + counts[v]);
      next += counts[v];
      char id[32];
      std::snprintf(id, sizeof(id), "%s_%03d", name, v);
      std::mt19937_64 rng(mix_seed(spec.seed, (static_cast<std::uint64_t>(s) + 1) * 1000003ULL +
                                                  static_cast<std::uint64_t>(v)));
      targets[s]->push_back(generate_video(spec, patterns, mine, id, rng));
    }
  }
  return out;
}

void generate_dataset(const SynthSpec& spec, const std::filesystem::path& out_dir) {
  const SynthSplits splits = generate_splits(spec);
  json manifest = {{"seed", spec.seed},
                   {"spec_hash", hex64(synth_spec_hash(spec))},
                   {"spec", json::parse(synth_spec_to_json_text(spec))}};
  const std::pair<const char*, const std::vector<SynthVideo>*> parts[3] = {
      {"train", &splits.train}, {"val", &splits.val}, {"test", &splits.test}};
  try {
    for (const auto& [name, videos] : parts) {
      const auto dir = out_dir / name;
      std::filesystem::create_directories(dir);
      json ids = json::array();
      for (const auto& v : *videos) {
        const std::string& id = v.annotations.video_id;
        save_annotations(v.annotations, dir / (id + ".json"));
        save_features(v.features, dir / (id + ".features.bin"));
        ids.push_back(id);
      }
      manifest["splits"][name] = ids;
    }
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError(e.what());
  }
  std::ofstream out(out_dir / "manifest.json");
  if (!out) throw IoError("cannot write " + (out_dir / "manifest.json").string());
  out << manifest.dump(2) << '\n';
}

}  // namespace ctxspot
