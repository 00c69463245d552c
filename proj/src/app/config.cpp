#include "plateflow/app/config.hpp"

#include "plateflow/haar/model_io.hpp"

namespace plateflow::app {

using nlohmann::json;

detect::DetectorConfig parse_backbone(const std::string& spec) {
  detect::DetectorConfig out;
  if (spec == "oracle") return out;
  const std::string prefix = "subprocess:";
  if (spec.rfind(prefix, 0) == 0 && spec.size() > prefix.size()) {
    out.kind = detect::DetectorConfig::Kind::Subprocess;
    out.subprocess.command = spec.substr(prefix.size());
    return out;
  }
  throw ConfigError("backbone must be 'oracle' or 'subprocess:<cmd>', got '" + spec + "'");
}

namespace {

haar::ScanParams scan_params(const json& j) {
  haar::ScanParams p;
  p.scale_factor = j.value("scale_factor", p.scale_factor);
  p.min_neighbors = j.value("min_neighbors", p.min_neighbors);
  p.min_size = j.value("min_size", p.min_size);
  p.step_stride = j.value("step_stride", p.step_stride);
  p.group_eps = j.value("group_eps", p.group_eps);
  return p;
}

pipeline::WakeupConfig load_wakeup(const std::string& cascade, const json& scan,
                                   const std::filesystem::path& base_dir) {
  std::filesystem::path path(cascade);
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  return {haar::load_cascade(path), scan_params(scan)};
}

}  // namespace

pipeline::PipelineConfig pipeline_config_from_json(const json& doc, const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ConfigError("pipeline config must be a JSON object");
  pipeline::PipelineConfig c;
  try {
    c.gap_frames = doc.value("gap", c.gap_frames);
    c.best_k = doc.value("best_k", c.best_k);
    c.enlarge_min_dim = doc.value("enlarge_min_dim", c.enlarge_min_dim);
    c.queue_bound = doc.value("queue_bound", c.queue_bound);
    c.fps_assumed = doc.value("fps_assumed", c.fps_assumed);
    c.backbone = parse_backbone(doc.value("backbone", std::string("oracle")));
    c.backbone.confidence_threshold = doc.value("confidence_threshold", c.backbone.confidence_threshold);
    if (doc.contains("nms")) {
      const auto& n = doc.at("nms");
      if (n.is_boolean()) {
        if (n.get<bool>()) c.backbone.nms = detect::NmsParams{};
      } else {
        c.backbone.nms = detect::NmsParams{n.value("score", 0.1), n.value("iou", 0.4)};
      }
    }
    if (doc.contains("oracle")) {
      const auto& o = doc.at("oracle");
      auto& noise = c.backbone.oracle;
      noise.miss_rate = o.value("miss_rate", noise.miss_rate);
      noise.jitter_px = o.value("jitter_px", noise.jitter_px);
      noise.seed = o.value("seed", noise.seed);
      if (o.contains("confidence")) {
        const auto& law = o.at("confidence");
        if (law.is_number()) {
          noise.confidence.value = law.get<double>();
        } else {
          noise.confidence.kind = detect::ConfidenceLaw::Kind::Uniform;
          noise.confidence.lo = law.value("lo", noise.confidence.lo);
          noise.confidence.hi = law.value("hi", noise.confidence.hi);
        }
      }
    }
    if (doc.contains("subprocess_timeout_ms")) {
      const std::chrono::milliseconds t(doc.at("subprocess_timeout_ms").get<std::int64_t>());
      c.backbone.subprocess.handshake_timeout = t;
      c.backbone.subprocess.response_timeout = t;
    }
    const auto policy = doc.value("on_failure", std::string("skip"));
    if (policy == "abort") {
      c.backbone.on_failure = detect::FailurePolicy::Abort;
    } else if (policy != "skip") {
      throw ConfigError("on_failure must be skip or abort");
    }
    if (doc.contains("wakeup")) {
      const auto& w = doc.at("wakeup");
      if (w.is_string()) {
        c.wakeup = load_wakeup(w.get<std::string>(), json::object(), base_dir);
      } else if (w.is_object()) {
        c.wakeup = load_wakeup(w.at("cascade").get<std::string>(), w, base_dir);
      } else if (!w.is_null() && !(w.is_boolean() && !w.get<bool>())) {
        throw ConfigError("wakeup must be false, a cascade path or an object with a cascade path");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("pipeline config: ") + e.what());
  }
  try {
    pipeline::validate(c);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace plateflow::app
