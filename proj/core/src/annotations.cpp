#include "ctxspot/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "ctxspot/errors.hpp"
#include "json.hpp"

namespace ctxspot {
namespace {

using nlohmann::json;

std::vector<ActionEvent> events_from_json(const json& arr, const std::string& field) {
  if (!arr.is_array()) throw FormatError("annotations: '" + field + "' must be a list");
  std::vector<ActionEvent> out;
  out.reserve(arr.size());
  for (const auto& e : arr) {
    if (!e.is_object() || !e.contains("class") || !e.contains("frame"))
      throw FormatError("annotations: each entry of '" + field + "' needs class and frame");
    if (!e["class"].is_number_integer() || !e["frame"].is_number_integer())
      throw FormatError("annotations: class and frame must be integers in '" + field + "'");
    out.push_back({e["class"].get<int>(), e["frame"].get<int>()});
  }
  std::sort(out.begin(), out.end(), chronological);
  return out;
}

json events_to_json(const std::vector<ActionEvent>& events) {
  json arr = json::array();
  for (const auto& e : events) arr.push_back({{"class", e.class_index}, {"frame", e.frame}});
  return arr;
}

void check_events(const std::vector<ActionEvent>& events, const VideoAnnotations& ann,
                  int num_classes, const char* what) {
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string field = std::string(what) + "[" + std::to_string(i) + "]";
    if (e.frame < 0 || e.frame >= ann.num_frames)
      throw FormatError(ann.video_id + ": " + field + ".frame: frame index " +
                        std::to_string(e.frame) + " out of range [0, " +
                        std::to_string(ann.num_frames) + ")");
    if (e.class_index < 0 || (num_classes >= 0 && e.class_index >= num_classes))
      throw FormatError(ann.video_id + ": " + field + ".class: class index " +
                        std::to_string(e.class_index) + " out of range");
    if (i > 0 && !chronological(events[i - 1], e))
      throw FormatError(ann.video_id + ": " + what +
                        " are not sorted or repeat a (class, frame) pair");
  }
}

}  // namespace

void VideoAnnotations::validate(int num_classes) const {
  if (video_id.empty()) throw FormatError("annotations: empty video_id");
  if (!(fps > 0.0) || !std::isfinite(fps)) throw FormatError(video_id + ": fps must be positive");
  if (num_frames <= 0) throw FormatError(video_id + ": num_frames must be positive");
  check_events(actions, *this, num_classes, "actions");
  if (opportunities) check_events(*opportunities, *this, num_classes, "opportunities");
}

std::vector<int> VideoAnnotations::frames_of(int c) const {
  std::vector<int> frames;
  for (const auto& a : actions)
    if (a.class_index == c) frames.push_back(a.frame);
  return frames;
}

VideoAnnotations annotations_from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("annotations are not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw FormatError("annotations: expected an object");
  VideoAnnotations ann;
  try {
    ann.video_id = root.at("video_id").get<std::string>();
    ann.fps = root.at("fps").get<double>();
    ann.num_frames = root.at("num_frames").get<int>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("annotations: ") + e.what());
  }
  ann.actions = events_from_json(root.value("actions", json::array()), "actions");
  if (root.contains("opportunities"))
    ann.opportunities = events_from_json(root["opportunities"], "opportunities");
  ann.validate();
  return ann;
}

VideoAnnotations load_annotations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open annotations " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return annotations_from_json_text(ss.str());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::string annotations_to_json_text(const VideoAnnotations& ann) {
  json root = {{"video_id", ann.video_id},
               {"fps", ann.fps},
               {"num_frames", ann.num_frames},
               {"actions", events_to_json(ann.actions)}};
  if (ann.opportunities) root["opportunities"] = events_to_json(*ann.opportunities);
  return root.dump(2);
}

void save_annotations(const VideoAnnotations& ann, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write annotations " + path.string());
  out << annotations_to_json_text(ann) << '\n';
  if (!out) throw IoError("short write on " + path.string());
}

}  // namespace ctxspot
