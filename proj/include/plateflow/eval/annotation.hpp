#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "plateflow/geometry.hpp"

namespace plateflow::eval {

struct PlateSpan {
  std::int64_t from = 0;
  std::int64_t to = 0;
  std::map<std::int64_t, BoundingBox> boxes;
  bool operator==(const PlateSpan&) const = default;
};

struct PlateAnnotation {
  int instance_id = 0;
  std::string text;
  std::vector<PlateSpan> spans;
  bool operator==(const PlateAnnotation&) const = default;
};

/// Ground truth for one stream: every plate instance, its text and per-frame boxes.
struct VideoAnnotation {
  std::string stream_id;
  std::vector<PlateAnnotation> plates;

  /// (instance_id, box) for every plate annotated on frame_index.
  std::vector<std::pair<int, BoundingBox>> boxes_at(std::int64_t frame_index) const;
  std::int64_t first_frame() const;
  std::int64_t last_frame() const;
  const PlateAnnotation* find(int instance_id) const;

  bool operator==(const VideoAnnotation&) const = default;
};

class AnnotationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate(const VideoAnnotation& ann);

nlohmann::json annotation_to_json(const VideoAnnotation& ann);
VideoAnnotation annotation_from_json(const nlohmann::json& doc);
VideoAnnotation load_annotation(const std::filesystem::path& path);
void save_annotation(const std::filesystem::path& path, const VideoAnnotation& ann);

}  // namespace plateflow::eval
