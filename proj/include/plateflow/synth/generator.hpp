#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateflow/boost/patches.hpp"
#include "plateflow/eval/annotation.hpp"
#include "plateflow/geometry.hpp"
#include "plateflow/image.hpp"
#include "plateflow/ocr/manifest.hpp"

namespace plateflow::synth {

/// One vehicle pass: the plate moves linearly from start_box to end_box over
/// [enter_frame, exit_frame] (inclusive).
struct VehicleEvent {
  std::int64_t enter_frame = 0;
  std::int64_t exit_frame = 0;
  BoundingBox start_box;
  BoundingBox end_box;
  std::string plate_text;
};

struct SynthSpec {
  std::string stream_id = "stream-0";
  std::uint64_t seed = 1;
  int width = 480;
  int height = 480;
  double fps = 24;
  std::int64_t frames = 254;
  /// Per-pixel uniform noise amplitude (grey levels).
  double noise_level = 6;
  /// Low-contrast clutter rectangles painted into the static background.
  int clutter_rects = 14;
  std::vector<VehicleEvent> events;
};

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rejects unordered, overlapping, or out-of-frame events.
void validate(const SynthSpec& spec);

struct PlatePlacement {
  int instance_id = 0;
  BoundingBox box;
};

/// Plate visible on frame t, if any (single active plate at a time).
std::optional<PlatePlacement> plate_at(const SynthSpec& spec, std::int64_t t);

/// Deterministic function of (spec, t).
GrayFrame render_frame(const SynthSpec& spec, std::int64_t t);

eval::VideoAnnotation make_annotation(const SynthSpec& spec);
ocr::OcrManifest make_manifest(const SynthSpec& spec);

/// Rendered frames t = 0, step, 2*step, ... with their plate boxes, for patch sampling.
std::vector<boosting::AnnotatedFrame> annotated_frames(const SynthSpec& spec, int step = 1);

/// Writes <dir>/stream.json, <dir>/%06d.pgm and <dir>/annotations.json.
void write_stream(const SynthSpec& spec, const std::filesystem::path& dir);

struct RandomStreamOptions {
  int events = 3;
  std::int64_t min_gap = 30;
  std::int64_t max_gap = 48;
  std::int64_t min_visible = 36;
  std::int64_t max_visible = 64;
  double min_plate_h = 50;
  double max_plate_h = 90;
  std::int64_t lead_in = 12;
  std::int64_t tail = 12;
  int width = 480;
  int height = 480;
  double noise_level = 6;
};

/// Random but seeded stream: events separated by [min_gap, max_gap] empty frames.
SynthSpec random_stream_spec(const std::string& stream_id, std::uint64_t seed, const RandomStreamOptions& options = {});

/// A plausible plate string: district, the word Metro, a class letter and six digits.
std::string random_plate_text(std::uint64_t seed);

nlohmann::json spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const nlohmann::json& doc);

/// Corpus document: {"v":1,"streams":[spec...]} or
/// {"v":1,"random":{"seed":S,"streams":N, ...RandomStreamOptions fields}}.
std::vector<SynthSpec> corpus_from_json(const nlohmann::json& doc);

/// Writes every stream to <out>/<stream_id>/ plus a merged <out>/ocr_manifest.json.
void write_corpus(const std::vector<SynthSpec>& specs, const std::filesystem::path& out);

}  // namespace plateflow::synth
