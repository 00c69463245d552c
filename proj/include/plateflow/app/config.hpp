#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "plateflow/detect/detector.hpp"
#include "plateflow/pipeline/pipeline.hpp"

namespace plateflow::app {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "oracle" or "subprocess:<shell command>".
detect::DetectorConfig parse_backbone(const std::string& spec);

/// Pipeline settings from JSON. Keys: gap, best_k, enlarge_min_dim, queue_bound, fps_assumed,
/// backbone, confidence_threshold, nms (bool or {score, iou}), oracle {miss_rate, jitter_px, seed,
/// confidence (number or {lo, hi})}, subprocess_timeout_ms, on_failure (skip|abort) and wakeup
/// (false, a cascade path, or {cascade, scale_factor, min_neighbors, min_size, step_stride, group_eps}).
/// Relative cascade paths resolve against base_dir.
pipeline::PipelineConfig pipeline_config_from_json(const nlohmann::json& doc,
                                                   const std::filesystem::path& base_dir = {});

}  // namespace plateflow::app
