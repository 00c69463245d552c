#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateflow/detect/detector.hpp"
#include "plateflow/eval/annotation.hpp"
#include "plateflow/haar/cascade.hpp"
#include "plateflow/haar/scan.hpp"
#include "plateflow/pipeline/frame_source.hpp"
#include "plateflow/pipeline/gate.hpp"
#include "plateflow/pipeline/selection.hpp"

namespace plateflow::pipeline {

struct WakeupConfig {
  haar::CascadeModel model;
  haar::ScanParams params;
};

struct PipelineConfig {
  int gap_frames = 24;
  int best_k = 3;
  /// Absent: wake-up disabled, every frame reaches the backbone.
  std::optional<WakeupConfig> wakeup;
  detect::DetectorConfig backbone;
  int enlarge_min_dim = 150;
  double fps_assumed = 24;
  std::size_t queue_bound = 8;
};

void validate(const PipelineConfig& config);

struct PlateInstance {
  int instance_id = 0;
  std::int64_t first_frame = 0;
  std::int64_t last_frame = 0;
  /// Best first; at most best_k entries.
  std::vector<Candidate> candidates;
};

struct StreamResult {
  std::string stream_id;
  std::vector<PlateInstance> instances;
  std::int64_t frames_processed = 0;
  std::int64_t frames_gated_out = 0;
  std::int64_t frames_to_backbone = 0;
  std::int64_t frames_with_detections = 0;
  /// Backbone failures skipped under FailurePolicy::Skip.
  std::int64_t frames_skipped = 0;
  double wall_time = 0;
  double fps_measured = 0;
  bool incomplete = false;
  std::string error;
};

struct Progress {
  std::int64_t frames_processed = 0;
  std::int64_t frames_total = 0;
  int instances = 0;
};

struct RunOptions {
  std::string stream_id = "stream";
  /// When set, crops and instances.json are written to <output_root>/<stream_id>/.
  std::optional<std::filesystem::path> output_root;
  std::function<void(const Progress&)> on_progress;
};

/// Runs gate -> backbone -> selection as three threads joined by bounded queues
/// (plus an ingest thread). Frame order is preserved end to end.
StreamResult process_stream(FrameSource& source, Gate& gate, detect::Detector& backbone,
                            const PipelineConfig& config, const RunOptions& options = {});

/// Builds the gate and backbone from config. The oracle backbone needs `annotation`.
StreamResult process_stream(FrameSource& source, const PipelineConfig& config,
                            const eval::VideoAnnotation* annotation, const RunOptions& options = {});

/// frames / seconds.
double fps_probe(std::int64_t frames_processed, double wall_time);

/// instances.json document: ids, frame ranges and candidates (no timing, so it
/// is identical across runs of a deterministic configuration).
nlohmann::json instances_to_json(const StreamResult& result);

/// Writes instance-<k>/cand-<r>.png and instances.json under stream_dir and
/// fills each candidate's crop_path.
void persist_result(StreamResult& result, const std::filesystem::path& stream_dir);

/// Reads instances.json back (crops are not loaded; crop_path is kept).
StreamResult load_instances(const std::filesystem::path& instances_json);
StreamResult instances_from_json(const nlohmann::json& doc);

/// Timing and counters, including wall time, for run.json.
nlohmann::json run_stats_to_json(const StreamResult& result);

/// instances.json plus wall time from run.json when present and, with crops, every candidate PNG.
StreamResult load_stream_output(const std::filesystem::path& stream_dir, bool with_crops = true);

}  // namespace plateflow::pipeline
