#include "ctxspot/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "json.hpp"

namespace ctxspot {

std::vector<Spot> deduplicate_spots(std::vector<Spot> spots, double window_frames) {
  std::stable_sort(spots.begin(), spots.end(), [](const Spot& a, const Spot& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    return a.frame < b.frame;
  });
  const double half = window_frames / 2.0;
  std::vector<Spot> kept;
  for (const Spot& s : spots) {
    const bool shadowed = std::any_of(kept.begin(), kept.end(), [&](const Spot& k) {
      return k.class_index == s.class_index && std::abs(k.frame - s.frame) <= half;
    });
    if (!shadowed) kept.push_back(s);
  }
  std::sort(kept.begin(), kept.end(), [](const Spot& a, const Spot& b) {
    return a.frame != b.frame ? a.frame < b.frame : a.class_index < b.class_index;
  });
  return kept;
}

std::vector<Spot> chunk_spots(const PredictionMatrix& predictions, int chunk_start,
                              int chunk_frames, int num_frames) {
  const int last = std::min(chunk_start + chunk_frames, num_frames) - 1;
  std::vector<Spot> out;
  for (Eigen::Index i = 0; i < predictions.rows(); ++i) {
    Spot s;
    s.confidence = predictions(i, 0);
    const int offset = static_cast<int>(std::lround(predictions(i, 1) * chunk_frames));
    s.frame = std::clamp(chunk_start + offset, chunk_start, std::max(chunk_start, last));
    Eigen::Index best = 0;
    predictions.row(i).tail(predictions.cols() - 2).maxCoeff(&best);
    s.class_index = static_cast<int>(best);
    out.push_back(s);
  }
  return out;
}

VideoPrediction predict_video(const FeatureSequence& features, const ModelParams<float>& params,
                              const SpottingConfig& cfg) {
  if (!params.all_finite()) throw PreconditionError("model parameters are not finite");
  if (features.feature_dim() != params.shape().feature_dim)
    throw PreconditionError("features have " + std::to_string(features.feature_dim()) +
                            " dimensions, model expects " +
                            std::to_string(params.shape().feature_dim));
  const int n = features.num_frames();
  const int nf = cfg.chunk_frames;
  VideoPrediction pred;
  pred.video_id = features.video_id;
  pred.fps = cfg.fps;
  pred.num_frames = n;
  pred.seg_curves.resize(n, cfg.num_classes);

  std::vector<Spot> pooled;
  for (int start = 0; start < n; start += nf) {
    FeatureMatrix chunk = FeatureMatrix::Zero(nf, features.feature_dim());
    const int real = std::min(nf, n - start);
    chunk.topRows(real) = features.values.middleRows(start, real);
    const ForwardTrace<float> tr = forward(chunk, params);
    pred.seg_curves.middleRows(start, real) = tr.seg_scores.topRows(real);
    for (const Spot& s : chunk_spots(tr.predictions, start, nf, n))
      if (s.confidence >= cfg.inference.conf_threshold) pooled.push_back(s);
  }
  pred.spots = deduplicate_spots(std::move(pooled), cfg.inference.dedup_window_s * cfg.fps);
  return pred;
}

void save_prediction(const VideoPrediction& pred, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json spots = nlohmann::json::array();
  for (const Spot& s : pred.spots)
    spots.push_back({{"class", s.class_index}, {"frame", s.frame}, {"confidence", s.confidence}});
  const nlohmann::json root = {{"video_id", pred.video_id},
                               {"fps", pred.fps},
                               {"num_frames", pred.num_frames},
                               {"spots", spots}};
  const auto json_path = dir / (pred.video_id + ".spots.json");
  std::ofstream out(json_path);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << root.dump(2) << '\n';
  if (!out) throw IoError("short write on " + json_path.string());

  const auto csv_path = dir / (pred.video_id + ".seg.csv");
  std::ofstream csv(csv_path);
  if (!csv) throw IoError("cannot write " + csv_path.string());
  csv << "frame";
  for (Eigen::Index c = 0; c < pred.seg_curves.cols(); ++c) csv << ",class_" << c;
  csv << '\n';
  csv.precision(9);
  for (Eigen::Index i = 0; i < pred.seg_curves.rows(); ++i) {
    csv << i;
    for (Eigen::Index c = 0; c < pred.seg_curves.cols(); ++c) csv << ',' << pred.seg_curves(i, c);
    csv << '\n';
  }
  if (!csv) throw IoError("short write on " + csv_path.string());
}

VideoPrediction load_prediction(const std::filesystem::path& spots_json) {
  std::ifstream in(spots_json);
  if (!in) throw IoError("cannot open " + spots_json.string());
  std::stringstream ss;
  ss << in.rdbuf();
  VideoPrediction pred;
  try {
    const auto root = nlohmann::json::parse(ss.str());
    pred.video_id = root.at("video_id").get<std::string>();
    pred.fps = root.at("fps").get<double>();
    pred.num_frames = root.at("num_frames").get<int>();
    for (const auto& s : root.at("spots"))
      pred.spots.push_back(
          {s.at("class").get<int>(), s.at("frame").get<int>(), s.at("confidence").get<double>()});
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(spots_json.string() + ": " + e.what());
  }

  const auto csv_path = spots_json.parent_path() / (pred.video_id + ".seg.csv");
  std::ifstream csv(csv_path);
  if (!csv) return pred;
  std::string line;
  std::getline(csv, line);
  const auto num_classes = std::count(line.begin(), line.end(), ',');
  std::vector<std::vector<double>> rows;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::stringstream ls(line);
    std::string cell;
    std::vector<double> row;
    std::getline(ls, cell, ',');
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<long>(row.size()) != num_classes)
      throw FormatError(csv_path.string() + ": ragged row");
    rows.push_back(std::move(row));
  }
  pred.seg_curves.resize(static_cast<Eigen::Index>(rows.size()), num_classes);
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (long c = 0; c < num_classes; ++c) pred.seg_curves(i, c) = rows[i][c];
  return pred;
}

}  // namespace ctxspot
