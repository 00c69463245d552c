#include "plateflow/eval/annotation.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

namespace plateflow::eval {

using nlohmann::json;

std::vector<std::pair<int, BoundingBox>> VideoAnnotation::boxes_at(std::int64_t frame_index) const {
  std::vector<std::pair<int, BoundingBox>> out;
  for (const auto& plate : plates) {
    for (const auto& span : plate.spans) {
      if (frame_index < span.from || frame_index > span.to) continue;
      if (auto it = span.boxes.find(frame_index); it != span.boxes.end()) out.emplace_back(plate.instance_id, it->second);
    }
  }
  return out;
}

std::int64_t VideoAnnotation::first_frame() const {
  std::int64_t first = std::numeric_limits<std::int64_t>::max();
  for (const auto& p : plates)
    for (const auto& s : p.spans) first = std::min(first, s.from);
  return plates.empty() ? 0 : first;
}

std::int64_t VideoAnnotation::last_frame() const {
  std::int64_t last = -1;
  for (const auto& p : plates)
    for (const auto& s : p.spans) last = std::max(last, s.to);
  return last;
}

const PlateAnnotation* VideoAnnotation::find(int instance_id) const {
  for (const auto& p : plates) {
    if (p.instance_id == instance_id) return &p;
  }
  return nullptr;
}

void validate(const VideoAnnotation& ann) {
  for (const auto& plate : ann.plates) {
    if (plate.text.empty()) throw AnnotationError("plate " + std::to_string(plate.instance_id) + " has empty text");
    auto spans = plate.spans;
    std::sort(spans.begin(), spans.end(), [](const auto& a, const auto& b) { return a.from < b.from; });
    for (std::size_t i = 0; i < spans.size(); ++i) {
      if (spans[i].to < spans[i].from) throw AnnotationError("span ends before it starts");
      if (i > 0 && spans[i].from <= spans[i - 1].to) throw AnnotationError("overlapping spans for one instance");
      for (const auto& [frame, box] : spans[i].boxes) {
        if (frame < spans[i].from || frame > spans[i].to) throw AnnotationError("box outside its span");
        if (!box.valid()) throw AnnotationError("degenerate annotation box");
      }
    }
  }
}

json annotation_to_json(const VideoAnnotation& ann) {
  json plates = json::array();
  for (const auto& plate : ann.plates) {
    json spans = json::array();
    for (const auto& span : plate.spans) {
      json boxes = json::object();
      for (const auto& [frame, b] : span.boxes) {
        boxes[std::to_string(frame)] = {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}};
      }
      spans.push_back({{"from", span.from}, {"to", span.to}, {"boxes", std::move(boxes)}});
    }
    plates.push_back({{"instance_id", plate.instance_id}, {"text", plate.text}, {"spans", std::move(spans)}});
  }
  return {{"v", 1}, {"stream_id", ann.stream_id}, {"plates", std::move(plates)}};
}

VideoAnnotation annotation_from_json(const json& doc) {
  try {
    if (doc.at("v").get<int>() != 1) throw AnnotationError("unsupported annotation version");
    VideoAnnotation ann;
    ann.stream_id = doc.at("stream_id").get<std::string>();
    for (const auto& p : doc.at("plates")) {
      PlateAnnotation plate;
      plate.instance_id = p.at("instance_id").get<int>();
      plate.text = p.at("text").get<std::string>();
      for (const auto& s : p.at("spans")) {
        PlateSpan span;
        span.from = s.at("from").get<std::int64_t>();
        span.to = s.at("to").get<std::int64_t>();
        for (const auto& [key, b] : s.at("boxes").items()) {
          span.boxes[std::stoll(key)] = {b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(),
                                         b.at("h").get<double>()};
        }
        plate.spans.push_back(std::move(span));
      }
      ann.plates.push_back(std::move(plate));
    }
    validate(ann);
    return ann;
  } catch (const json::exception& e) {
    throw AnnotationError(std::string("malformed annotation: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw AnnotationError("malformed annotation frame key");
  }
}

VideoAnnotation load_annotation(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw AnnotationError("cannot open " + path.string());
  try {
    return annotation_from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw AnnotationError(path.string() + ": " + e.what());
  }
}

void save_annotation(const std::filesystem::path& path, const VideoAnnotation& ann) {
  std::ofstream out(path);
  if (!out) throw AnnotationError("cannot write " + path.string());
  out << annotation_to_json(ann).dump() << '\n';
}

}  // namespace plateflow::eval
