#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace ctxspot {

/// A single annotated (or planted) event.
struct ActionEvent {
  int class_index = 0;
  int frame = 0;

  friend bool operator==(const ActionEvent&, const ActionEvent&) = default;
};

/// Orders by frame, then by class.
inline bool chronological(const ActionEvent& a, const ActionEvent& b) {
  return a.frame != b.frame ? a.frame < b.frame : a.class_index < b.class_index;
}

struct VideoAnnotations {
  std::string video_id;
  double fps = 2.0;
  int num_frames = 0;
  /// Sorted chronologically; at most one action per (class, frame).
  std::vector<ActionEvent> actions;
  /// Unannotated interesting events; only synthetic data carries these.
  std::optional<std::vector<ActionEvent>> opportunities;

  /// Throws FormatError when an invariant is broken. `num_classes` < 0 skips
  /// the class range check.
  void validate(int num_classes = -1) const;

  /// Frames of the actions of class `c`, ascending.
  std::vector<int> frames_of(int c) const;
};

/// Reads the JSON annotation schema:
/// {"video_id", "fps", "num_frames", "actions": [{"class", "frame"}],
///  "opportunities": [...]}. Actions are returned sorted.
VideoAnnotations load_annotations(const std::filesystem::path& path);
VideoAnnotations annotations_from_json_text(const std::string& text);

std::string annotations_to_json_text(const VideoAnnotations& ann);
void save_annotations(const VideoAnnotations& ann, const std::filesystem::path& path);

}  // namespace ctxspot
