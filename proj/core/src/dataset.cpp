#include "ctxspot/dataset.hpp"

#include <algorithm>

#include "ctxspot/errors.hpp"

namespace ctxspot {
namespace {

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::vector<std::filesystem::path> annotation_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw IoError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string name = entry.path().filename().string();
    if (!ends_with(name, ".json") || ends_with(name, ".features.json")) continue;
    if (name == "manifest.json" || name == "run_manifest.json") continue;
    files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

std::vector<VideoAnnotations> load_annotation_dir(const std::filesystem::path& dir) {
  std::vector<VideoAnnotations> out;
  for (const auto& f : annotation_files(dir)) out.push_back(load_annotations(f));
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.video_id < b.video_id; });
  return out;
}

std::vector<LabeledVideo> load_split(const std::filesystem::path& dir) {
  std::vector<LabeledVideo> out;
  for (const auto& f : annotation_files(dir)) {
    LabeledVideo v;
    v.annotations = load_annotations(f);
    auto bin = f;
    bin.replace_extension(".features.bin");
    v.features = load_features(bin);
    if (v.features.video_id != v.annotations.video_id)
      throw FormatError(bin.string() + ": video id '" + v.features.video_id +
                        "' differs from annotations '" + v.annotations.video_id + "'");
    if (v.features.num_frames() != v.annotations.num_frames)
      throw FormatError(bin.string() + ": " + std::to_string(v.features.num_frames()) +
                        " frames, annotations say " +
                        std::to_string(v.annotations.num_frames));
    out.push_back(std::move(v));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.annotations.video_id < b.annotations.video_id;
  });
  return out;
}

}  // namespace ctxspot
