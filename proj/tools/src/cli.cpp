#include "ctxspot_cli/cli.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "ctxspot/annotations.hpp"
#include "ctxspot/checkpoint.hpp"
#include "ctxspot/chunking.hpp"
#include "ctxspot/config.hpp"
#include "ctxspot/dataset.hpp"
#include "ctxspot/errors.hpp"
#include "ctxspot/eval.hpp"
#include "ctxspot/features.hpp"
#include "ctxspot/gradcheck.hpp"
#include "ctxspot/hashing.hpp"
#include "ctxspot/highlights.hpp"
#include "ctxspot/inference.hpp"
#include "ctxspot/network.hpp"
#include "ctxspot/report.hpp"
#include "ctxspot/spot_loss.hpp"
#include "ctxspot/synth.hpp"
#include "ctxspot/trainer.hpp"
#include "ctxspot/tse.hpp"

#ifndef CTXSPOT_VERSION
#define CTXSPOT_VERSION "0.0.0"
#endif

namespace ctxspot::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<fs::path> files_with_suffix(const fs::path& dir, const std::string& suffix) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && ends_with(e.path().filename().string(), suffix))
      out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("short write on " + path.string());
}

fs::path manifest_dir_for(const fs::path& out_file) {
  return out_file.has_parent_path() ? out_file.parent_path() : fs::path(".");
}

// Options shared by every subcommand.
struct Common {
  std::string config;
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string out;
};

SpottingConfig resolve_config(const Common& c) {
  SpottingConfig cfg = c.config.empty() ? default_config() : load_config(c.config);
  if (c.seed_given) cfg.seed = c.seed;
  cfg.validate();
  return cfg;
}

std::vector<VideoSpots> load_video_spots(const std::vector<VideoAnnotations>& gts,
                                         const fs::path& pred_dir) {
  std::vector<VideoSpots> out;
  for (const auto& gt : gts) {
    const fs::path p = pred_dir / (gt.video_id + ".spots.json");
    if (!fs::exists(p)) throw IoError("missing prediction " + p.string());
    const VideoPrediction pred = load_prediction(p);
    out.push_back({gt.video_id, gt.fps, pred.spots, gt.actions});
  }
  return out;
}

std::vector<double> expand_thresholds(const std::vector<double>& given, int num_classes) {
  if (given.size() == 1) return std::vector<double>(num_classes, given[0]);
  if (static_cast<int>(given.size()) != num_classes)
    throw ConfigError("--thresholds needs 1 or num_classes values");
  for (double t : given)
    if (!(t >= 0.0 && t <= 1.0)) throw ConfigError("--thresholds values must lie in [0, 1]");
  return given;
}

Dataset load_dataset(const fs::path& data) {
  Dataset ds;
  ds.train = load_split(data / "train");
  if (fs::is_directory(data / "val")) ds.val = load_split(data / "val");
  return ds;
}

double test_average_map(const std::vector<LabeledVideo>& videos, const ModelParams<float>& params,
                        const SpottingConfig& cfg) {
  std::vector<VideoSpots> spots;
  for (const auto& v : videos) {
    const VideoPrediction p = predict_video(v.features, params, cfg);
    spots.push_back({v.annotations.video_id, v.annotations.fps, p.spots, v.annotations.actions});
  }
  return average_map(spots, cfg.num_classes, cfg.metric).average_map;
}

json epoch_json(const EpochRecord& r) {
  json j = {{"epoch", r.epoch},         {"learning_rate", r.learning_rate},
            {"loss", r.loss},           {"seg_loss", r.seg_loss},
            {"spot_loss", r.spot_loss}, {"num_chunks", r.num_chunks}};
  j["val_average_map"] = r.val_average_map ? json(*r.val_average_map) : json(nullptr);
  return j;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << std::setprecision(10);
  os << "epoch,learning_rate,loss,seg_loss,spot_loss,num_chunks,val_average_map\n";
  for (const auto& r : history) {
    os << r.epoch << ',' << r.learning_rate << ',' << r.loss << ',' << r.seg_loss << ','
       << r.spot_loss << ',' << r.num_chunks << ',';
    if (r.val_average_map) os << *r.val_average_map;
    os << '\n';
  }
  return os.str();
}

json gradcheck_json(const GradCheckResult& r) {
  return {{"num_checked", r.num_checked},
          {"worst_rel_error", r.worst_rel_error},
          {"worst_location", r.worst_location},
          {"tolerance", r.tolerance},
          {"passed", r.passed}};
}

// ---- subcommands ---------------------------------------------------------

struct SynthOpts {
  std::string spec;
};

int run_synth(const Common& c, const SynthOpts& o, RunManifest& m, std::ostream& out) {
  SynthSpec spec = o.spec.empty() ? SynthSpec{} : load_synth_spec(o.spec);
  if (c.seed_given) spec.seed = c.seed;
  spec.validate();
  generate_dataset(spec, c.out);
  m.seed = spec.seed;
  m.config_hash = hex64(synth_spec_hash(spec));
  m.data_hash = o.spec.empty() ? "" : hex64(hash_inputs({o.spec}));
  m.outputs = {"train", "val", "test", "manifest.json"};
  out << json{{"out", c.out}, {"spec_hash", m.config_hash}}.dump() << '\n';
  return kExitOk;
}

struct EncodeOpts {
  std::string annotations;
};

int run_encode(const Common& c, const EncodeOpts& o, RunManifest& m, std::ostream& out) {
  const SpottingConfig cfg = resolve_config(c);
  const VideoAnnotations ann = load_annotations(o.annotations);
  ann.validate(cfg.num_classes);
  const TseMap tse = tse_video(ann, cfg);
  std::ostringstream os;
  os << "frame_index";
  for (int k = 0; k < cfg.num_classes; ++k) os << ",s_class_" << k;
  os << '\n';
  for (Eigen::Index i = 0; i < tse.values.rows(); ++i) {
    os << tse.first_frame + i;
    for (Eigen::Index k = 0; k < tse.values.cols(); ++k) os << ',' << tse.values(i, k);
    os << '\n';
  }
  write_text(c.out, os.str());
  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  m.data_hash = hex64(hash_inputs({o.annotations}));
  m.outputs = {fs::path(c.out).filename().string()};
  out << json{{"out", c.out}, {"frames", tse.values.rows()}}.dump() << '\n';
  return kExitOk;
}

struct TrainOpts {
  std::string data;
  int epochs = 0;
  bool quiet = false;
};

int run_train(const Common& c, const TrainOpts& o, RunManifest& m, std::ostream& out) {
  SpottingConfig cfg = resolve_config(c);
  if (o.epochs > 0) cfg.optimizer.epochs = o.epochs;
  cfg.validate();
  const Dataset ds = load_dataset(o.data);
  const TrainResult res = train(ds, cfg, [&](const EpochRecord& r) {
    if (!o.quiet && r.val_average_map) out << epoch_json(r).dump() << '\n' << std::flush;
  });
  const fs::path dir = c.out;
  fs::create_directories(dir);
  save_checkpoint(res.params, cfg, dir / "model.bin");
  save_config(cfg, dir / "config.json");
  write_text(dir / "history.csv", history_csv(res.history));
  json summary = {{"best_epoch", res.best_epoch},
                  {"epochs", cfg.optimizer.epochs},
                  {"num_parameters", res.params.num_parameters()}};
  summary["best_val_average_map"] =
      res.best_val_average_map ? json(*res.best_val_average_map) : json(nullptr);
  write_text(dir / "train.json", summary.dump(2) + "\n");
  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  m.data_hash = hex64(hash_inputs({fs::path(o.data) / "train", fs::path(o.data) / "val"}));
  m.outputs = {"model.bin", "config.json", "history.csv", "train.json"};
  out << summary.dump() << '\n';
  return kExitOk;
}

struct PredictOpts {
  std::string model;
  std::string features;
  double conf_threshold = -1.0;
  double dedup_window_s = -1.0;
  std::string gt;
  std::string matching_csv;
};

// Chunk-level matchings between ground truth and raw predictions, for
// debugging the spotting head.
std::string matching_rows(const VideoAnnotations& ann, const FeatureSequence& feats,
                          const ModelParams<float>& params, const SpottingConfig& cfg) {
  std::ostringstream os;
  os << std::setprecision(8);
  for (int start = 0; start < feats.num_frames(); start += cfg.chunk_frames) {
    const Chunk chunk = extract_chunk(ann, feats, start, cfg.chunk_frames);
    if (chunk.actions.empty()) continue;
    if (static_cast<int>(chunk.actions.size()) > cfg.num_predictions) continue;
    const ForwardTrace<float> tr = forward<float>(chunk.features, params);
    std::vector<double> gt_locs, pred_locs;
    for (const auto& a : chunk.actions)
      gt_locs.push_back(static_cast<double>(a.frame) / cfg.chunk_frames);
    for (Eigen::Index r = 0; r < tr.predictions.rows(); ++r)
      pred_locs.push_back(tr.predictions(r, 1));
    const Matching mt = iterative_match(gt_locs, pred_locs);
    for (const auto& [g, p] : mt.pairs)
      os << ann.video_id << ',' << start << ',' << g << ',' << p << ',' << gt_locs[g] << ','
         << pred_locs[p] << ',' << mt.iterations << '\n';
  }
  return os.str();
}

int run_predict(const Common& c, const PredictOpts& o, RunManifest& m, std::ostream& out) {
  Common cc = c;
  const fs::path sibling = fs::path(o.model).parent_path() / "config.json";
  if (cc.config.empty() && fs::exists(sibling)) cc.config = sibling.string();
  SpottingConfig cfg = resolve_config(cc);
  if (o.conf_threshold >= 0.0) cfg.inference.conf_threshold = o.conf_threshold;
  if (o.dedup_window_s >= 0.0) cfg.inference.dedup_window_s = o.dedup_window_s;
  cfg.validate();
  const ModelParams<float> params = load_checkpoint(o.model, cfg);

  std::vector<fs::path> inputs;
  if (fs::is_directory(o.features))
    inputs = files_with_suffix(o.features, ".features.bin");
  else
    inputs.push_back(o.features);
  if (inputs.empty()) throw IoError("no feature files under " + o.features);

  std::string matching = "video_id,chunk_start,gt_row,pred_row,gt_loc,pred_loc,iterations\n";
  int num_spots = 0;
  for (const auto& path : inputs) {
    const FeatureSequence feats = load_features(path);
    const VideoPrediction pred = predict_video(feats, params, cfg);
    save_prediction(pred, c.out);
    num_spots += static_cast<int>(pred.spots.size());
    m.outputs.push_back(pred.video_id + ".spots.json");
    m.outputs.push_back(pred.video_id + ".seg.csv");
    if (!o.matching_csv.empty()) {
      if (o.gt.empty()) throw ConfigError("--matching-csv requires --gt");
      const fs::path ann_path = fs::path(o.gt) / (feats.video_id + ".json");
      if (fs::exists(ann_path))
        matching += matching_rows(load_annotations(ann_path), feats, params, cfg);
    }
  }
  if (!o.matching_csv.empty()) write_text(o.matching_csv, matching);
  fs::create_directories(c.out);
  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  m.data_hash = hex64(hash_inputs({o.model, o.features}));
  out << json{{"videos", inputs.size()}, {"spots", num_spots}, {"out", c.out}}.dump() << '\n';
  return kExitOk;
}

struct EvaluateOpts {
  std::string gt;
  std::string pred;
  std::string thresholds;
  std::string val_gt;
  std::string val_pred;
  bool full_window = false;
  bool eleven_point = false;
};

int run_evaluate(const Common& c, const EvaluateOpts& o, RunManifest& m, std::ostream& out) {
  SpottingConfig cfg = resolve_config(c);
  if (o.full_window) cfg.metric.half_window = false;
  if (o.eleven_point) cfg.metric.interpolation = ApInterpolation::kElevenPoint;
  const auto gts = load_annotation_dir(o.gt);
  for (const auto& g : gts) g.validate(cfg.num_classes);
  const auto videos = load_video_spots(gts, o.pred);

  std::vector<double> thresholds;
  if (!o.thresholds.empty()) {
    thresholds = expand_thresholds(parse_number_list(o.thresholds), cfg.num_classes);
  } else if (!o.val_gt.empty() || !o.val_pred.empty()) {
    if (o.val_gt.empty() || o.val_pred.empty())
      throw ConfigError("--val-gt and --val-pred go together");
    const auto val = load_video_spots(load_annotation_dir(o.val_gt), o.val_pred);
    thresholds = optimize_thresholds(val, cfg.num_classes, cfg.metric);
  } else {
    thresholds.assign(cfg.num_classes, cfg.inference.conf_threshold);
  }

  const EvalReport report = evaluate(videos, cfg.num_classes, cfg.metric, thresholds);
  write_report(report, cfg, c.out);
  const fs::path stem = fs::path(c.out).stem();
  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  std::vector<fs::path> inputs{o.gt, o.pred};
  if (!o.val_gt.empty()) inputs.insert(inputs.end(), {o.val_gt, o.val_pred});
  m.data_hash = hex64(hash_inputs(inputs));
  m.outputs = {fs::path(c.out).filename().string(), stem.string() + "_curves.csv",
               stem.string() + "_map.csv", stem.string() + "_bins.csv"};
  out << json{{"average_map", report.map.average_map},
              {"total_ground_truth", report.total_ground_truth},
              {"out", c.out}}
             .dump()
      << '\n';
  return kExitOk;
}

struct HighlightsOpts {
  std::string model_output;
  std::string gt;
  double eta = -1.0;
};

int run_highlights(const Common& c, const HighlightsOpts& o, RunManifest& m, std::ostream& out) {
  SpottingConfig cfg = resolve_config(c);
  if (o.eta >= 0.0) cfg.highlights.segment_threshold = o.eta;
  cfg.validate();
  const HighlightsConfig& h = cfg.highlights;
  const auto gts = load_annotation_dir(o.gt);

  json videos = json::array();
  std::vector<HighlightInput> inputs;
  std::ostringstream clips_csv;
  clips_csv << "video_id,start_s,end_s,source,class,score\n";
  for (const auto& gt : gts) {
    gt.validate(cfg.num_classes);
    const fs::path p = fs::path(o.model_output) / (gt.video_id + ".spots.json");
    if (!fs::exists(p)) throw IoError("missing prediction " + p.string());
    const VideoPrediction pred = load_prediction(p);
    if (pred.seg_curves.cols() <= h.opportunity_class)
      throw FormatError(p.string() + ": no segmentation curve for the opportunity class");
    const Eigen::VectorXd col = pred.seg_curves.col(h.opportunity_class);
    std::vector<double> curve(col.data(), col.data() + col.size());
    const std::vector<int> frames = gt.frames_of(h.opportunity_class);
    const auto segments = detect_opportunity_segments(curve, h.segment_threshold, frames,
                                                      h.exclusion_frames, h.merge_gap_frames);
    const auto reel = build_reel(pred.spots, segments, gt.fps, h);

    json jv = {{"video_id", gt.video_id}, {"clips", json::array()}, {"segments", json::array()}};
    for (const auto& s : segments)
      jv["segments"].push_back({{"first_frame", s.first}, {"last_frame", s.last}, {"peak", s.peak}});
    for (const auto& clip : reel) {
      jv["clips"].push_back({{"start_s", clip.start_s},
                             {"end_s", clip.end_s},
                             {"source", clip_source_name(clip.source)},
                             {"class", clip.class_index},
                             {"score", clip.score}});
      clips_csv << gt.video_id << ',' << clip.start_s << ',' << clip.end_s << ','
                << clip_source_name(clip.source) << ',' << clip.class_index << ',' << clip.score
                << '\n';
    }
    videos.push_back(std::move(jv));
    inputs.push_back({std::move(curve), gt});
  }

  const PrecisionTable table = precision_vs_threshold(inputs, h);
  json prec = {{"status", table.evaluable ? "evaluated" : "not evaluable"},
               {"rows", json::array()}};
  std::ostringstream prec_csv;
  prec_csv << "eta,inspected,true_positives,precision\n";
  for (const auto& r : table.rows) {
    prec["rows"].push_back({{"eta", r.eta},
                            {"inspected", r.inspected},
                            {"true_positives", r.true_positives},
                            {"precision", r.precision}});
    prec_csv << r.eta << ',' << r.inspected << ',' << r.true_positives << ',' << r.precision
             << '\n';
  }
  const json root = {{"segment_threshold", h.segment_threshold},
                     {"videos", std::move(videos)},
                     {"precision_vs_threshold", std::move(prec)}};
  const fs::path json_path = c.out;
  const fs::path base = json_path.parent_path() / json_path.stem();
  write_text(json_path, root.dump(2) + "\n");
  write_text(base.string() + "_clips.csv", clips_csv.str());
  write_text(base.string() + "_precision.csv", prec_csv.str());

  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  m.data_hash = hex64(hash_inputs({o.model_output, o.gt}));
  m.outputs = {json_path.filename().string(), json_path.stem().string() + "_clips.csv",
               json_path.stem().string() + "_precision.csv"};
  out << json{{"videos", gts.size()}, {"evaluable", table.evaluable}, {"out", c.out}}.dump()
      << '\n';
  return kExitOk;
}

struct GradcheckOpts {
  int samples = 10000;
};

int run_gradcheck(const Common& c, const GradcheckOpts& o, RunManifest& m, std::ostream& out) {
  if (o.samples <= 0) throw ConfigError("--samples must be positive");
  // The checks always run on the tiny network; a given config is only
  // validated so that a broken file still fails loudly.
  if (!c.config.empty()) static_cast<void>(resolve_config(c));
  const GradCheckResult seg = seg_loss_gradcheck(o.samples, c.seed);
  const SpottingConfig tiny = tiny_gradcheck_config();
  const GradCheckResult model = model_gradcheck(tiny, c.seed);
  const bool passed = seg.passed && model.passed;
  const json report = {{"seg_loss", gradcheck_json(seg)},
                       {"model", gradcheck_json(model)},
                       {"passed", passed}};
  out << report.dump(2) << '\n';
  if (!c.out.empty()) {
    write_text(fs::path(c.out) / "gradcheck.json", report.dump(2) + "\n");
    m.seed = c.seed;
    m.config_hash = hex64(config_hash(tiny));
    m.outputs = {"gradcheck.json"};
  }
  return passed ? kExitOk : kExitCheckFailed;
}

struct SweepOpts {
  std::string data;
  std::string lambdas = "0,0.1,1.5,10,100";
  int epochs = 0;
};

int run_sweep(const Common& c, const SweepOpts& o, RunManifest& m, std::ostream& out) {
  SpottingConfig cfg = resolve_config(c);
  if (o.epochs > 0) cfg.optimizer.epochs = o.epochs;
  const std::vector<double> lambdas = parse_number_list(o.lambdas);
  const Dataset ds = load_dataset(o.data);
  const fs::path test_dir = fs::path(o.data) / "test";
  const std::vector<LabeledVideo> test =
      fs::is_directory(test_dir) ? load_split(test_dir) : ds.val;
  if (test.empty()) throw PreconditionError("sweep needs a test or val split");

  json rows = json::array();
  std::ostringstream csv;
  csv << std::setprecision(10) << "lambda_seg,best_epoch,val_average_map,test_average_map\n";
  for (double lambda : lambdas) {
    SpottingConfig run = cfg;
    run.lambda_seg = lambda;
    run.validate();
    const TrainResult res = train(ds, run);
    const double test_map = test_average_map(test, res.params, run);
    json row = {{"lambda_seg", lambda}, {"best_epoch", res.best_epoch},
                {"test_average_map", test_map}};
    row["val_average_map"] =
        res.best_val_average_map ? json(*res.best_val_average_map) : json(nullptr);
    out << row.dump() << '\n' << std::flush;
    csv << lambda << ',' << res.best_epoch << ',';
    if (res.best_val_average_map) csv << *res.best_val_average_map;
    csv << ',' << test_map << '\n';
    rows.push_back(std::move(row));
  }
  const fs::path dir = c.out;
  write_text(dir / "sweep.csv", csv.str());
  write_text(dir / "sweep.json", json{{"rows", rows}}.dump(2) + "\n");
  m.seed = cfg.seed;
  m.config_hash = hex64(config_hash(cfg));
  m.data_hash = hex64(hash_inputs({o.data}));
  m.outputs = {"sweep.csv", "sweep.json"};
  return kExitOk;
}

void report_error(std::ostream& err, const std::string& kind, const std::string& message,
                  int code, const json& extra = json::object()) {
  json j = {{"error", kind}, {"message", message}, {"exit_code", code}};
  j.update(extra);
  err << j.dump() << '\n';
}

}  // namespace

std::string tool_version() { return CTXSPOT_VERSION; }

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw ConfigError("malformed number '" + item + "' in list '" + text + "'");
    }
    if (used != item.size() || !std::isfinite(v))
      throw ConfigError("malformed number '" + item + "' in list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw ConfigError("empty number list");
  return out;
}

std::uint64_t hash_inputs(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::pair<std::string, fs::path>> files;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::recursive_directory_iterator(p))
        if (e.is_regular_file())
          files.emplace_back(fs::relative(e.path(), p).generic_string(), e.path());
    } else if (fs::is_regular_file(p)) {
      files.emplace_back(p.filename().generic_string(), p);
    }
  }
  std::sort(files.begin(), files.end());
  std::uint64_t h = fnv1a64("");
  for (const auto& [name, path] : files) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    h = fnv1a64(name, h);
    h = fnv1a64(ss.str(), h);
  }
  return h;
}

void write_manifest(const RunManifest& m, const std::filesystem::path& dir) {
  const json j = {{"command", m.command},         {"argv", m.argv},
                  {"config_hash", m.config_hash}, {"data_hash", m.data_hash},
                  {"seed", m.seed},               {"tool_version", tool_version()},
                  {"started_at", m.started_at},   {"finished_at", m.finished_at},
                  {"outputs", m.outputs}};
  write_text(dir / "run_manifest.json", j.dump(2) + "\n");
}

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Context-aware action spotting: losses, training, evaluation, highlights",
               "ctxspot"};
  app.require_subcommand(1);
  app.set_version_flag("--version", tool_version());

  Common common;
  auto add_common = [&](CLI::App* sub, bool needs_out) {
    sub->add_option("--config", common.config, "JSON config (defaults when omitted)");
    sub->add_option_function<std::uint64_t>(
        "--seed",
        [&](const std::uint64_t& s) {
          common.seed = s;
          common.seed_given = true;
        },
        "Seed for all randomness (default 42)");
    auto* opt = sub->add_option("--out", common.out, "Output path");
    if (needs_out) opt->required();
  };

  SynthOpts synth_o;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  add_common(synth, true);
  synth->add_option("--spec", synth_o.spec, "Synthetic spec JSON");

  EncodeOpts encode_o;
  auto* encode = app.add_subcommand("encode", "Dump the time-shift encoding of a video as CSV");
  add_common(encode, true);
  encode->add_option("--annotations", encode_o.annotations, "Annotation JSON")
      ->required();

  TrainOpts train_o;
  auto* train_cmd = app.add_subcommand("train", "Train on <data>/train, validate on <data>/val");
  add_common(train_cmd, true);
  train_cmd->add_option("--data", train_o.data, "Dataset directory")
      ->required();
  train_cmd->add_option("--epochs", train_o.epochs, "Override optimizer.epochs");
  train_cmd->add_flag("--quiet", train_o.quiet, "No per-validation progress lines");

  PredictOpts predict_o;
  auto* predict = app.add_subcommand("predict", "Run a checkpoint over feature files");
  add_common(predict, true);
  predict->add_option("--model", predict_o.model, "Checkpoint")
      ->required();
  predict->add_option("--features", predict_o.features, "Feature file or directory")
      ->required()
      ->check(CLI::ExistingPath);
  predict->add_option("--conf-threshold", predict_o.conf_threshold, "Spot confidence threshold");
  predict->add_option("--dedup-window", predict_o.dedup_window_s, "Dedup window in seconds");
  predict->add_option("--gt", predict_o.gt, "Annotation directory (for --matching-csv)");
  predict->add_option("--matching-csv", predict_o.matching_csv,
                      "Dump per-chunk ground-truth/prediction matchings");

  EvaluateOpts eval_o;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Average-mAP report");
  add_common(evaluate_cmd, true);
  evaluate_cmd->add_option("--gt", eval_o.gt, "Annotation directory")
      ->required();
  evaluate_cmd->add_option("--pred", eval_o.pred, "Prediction directory")
      ->required();
  evaluate_cmd->add_option("--thresholds", eval_o.thresholds,
                           "Per-class confidence thresholds for the P/R/F1 curves");
  evaluate_cmd->add_option("--val-gt", eval_o.val_gt, "Validation annotations (F1 thresholds)");
  evaluate_cmd->add_option("--val-pred", eval_o.val_pred, "Validation predictions");
  evaluate_cmd->add_flag("--full-window", eval_o.full_window, "Tolerance window +-delta");
  evaluate_cmd->add_flag("--eleven-point", eval_o.eleven_point, "11-point AP interpolation");

  HighlightsOpts hl_o;
  auto* highlights = app.add_subcommand("highlights", "Highlight reel and precision table");
  add_common(highlights, true);
  highlights->add_option("--model-output", hl_o.model_output, "Prediction directory")
      ->required();
  highlights->add_option("--gt", hl_o.gt, "Annotation directory")
      ->required();
  highlights->add_option("--eta", hl_o.eta, "Segmentation threshold for reel clips");

  GradcheckOpts gc_o;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  add_common(gradcheck, false);
  gradcheck->add_option("--samples", gc_o.samples, "Loss samples");

  SweepOpts sweep_o;
  auto* sweep = app.add_subcommand("sweep", "Train over a lambda_seg grid");
  add_common(sweep, true);
  sweep->add_option("--data", sweep_o.data, "Dataset directory")
      ->required();
  sweep->add_option("--lambdas", sweep_o.lambdas, "Comma-separated lambda_seg values");
  sweep->add_option("--epochs", sweep_o.epochs, "Override optimizer.epochs");

  if (argc > 1 && argv[1][0] != '-') {
    const std::string first = argv[1];
    const auto subs = app.get_subcommands([](CLI::App*) { return true; });
    if (std::none_of(subs.begin(), subs.end(),
                     [&](const CLI::App* s) { return s->get_name() == first; })) {
      report_error(err, "usage", "unknown command '" + first + "'", kExitUsage);
      return kExitUsage;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << tool_version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "usage", e.what(), kExitUsage);
    return kExitUsage;
  }

  CLI::App* sub = app.get_subcommands().front();
  RunManifest manifest;
  manifest.command = sub->get_name();
  for (int i = 0; i < argc; ++i) manifest.argv.emplace_back(argv[i]);
  manifest.seed = common.seed;
  manifest.started_at = utc_now();

  try {
    int code = kExitOk;
    fs::path manifest_dir = common.out;
    const std::string& name = manifest.command;
    if (name == "synth") {
      code = run_synth(common, synth_o, manifest, out);
    } else if (name == "encode") {
      code = run_encode(common, encode_o, manifest, out);
      manifest_dir = manifest_dir_for(common.out);
    } else if (name == "train") {
      code = run_train(common, train_o, manifest, out);
    } else if (name == "predict") {
      code = run_predict(common, predict_o, manifest, out);
    } else if (name == "evaluate") {
      code = run_evaluate(common, eval_o, manifest, out);
      manifest_dir = manifest_dir_for(common.out);
    } else if (name == "highlights") {
      code = run_highlights(common, hl_o, manifest, out);
      manifest_dir = manifest_dir_for(common.out);
    } else if (name == "gradcheck") {
      code = run_gradcheck(common, gc_o, manifest, out);
    } else if (name == "sweep") {
      code = run_sweep(common, sweep_o, manifest, out);
    } else {
      report_error(err, "usage", "unknown command " + name, kExitUsage);
      return kExitUsage;
    }
    if (!common.out.empty()) {
      manifest.finished_at = utc_now();
      write_manifest(manifest, manifest_dir);
    }
    if (code == kExitCheckFailed) report_error(err, "check_failed", name + " failed", code);
    return code;
  } catch (const ConfigError& e) {
    report_error(err, "config", e.what(), kExitDataError);
    return kExitDataError;
  } catch (const FormatError& e) {
    report_error(err, "format", e.what(), kExitDataError);
    return kExitDataError;
  } catch (const PreconditionError& e) {
    report_error(err, "precondition", e.what(), kExitDataError);
    return kExitDataError;
  } catch (const IoError& e) {
    report_error(err, "io", e.what(), kExitIoError);
    return kExitIoError;
  } catch (const fs::filesystem_error& e) {
    report_error(err, "io", e.what(), kExitIoError);
    return kExitIoError;
  } catch (const DivergenceError& e) {
    report_error(err, "divergence", e.what(), kExitSoftware, {{"epoch", e.epoch()}});
    return kExitSoftware;
  } catch (const std::exception& e) {
    report_error(err, "internal", e.what(), kExitSoftware);
    return kExitSoftware;
  }
}

}  // namespace ctxspot::cli
