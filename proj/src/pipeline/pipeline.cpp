#include "plateflow/pipeline/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "plateflow/image_io.hpp"
#include "plateflow/pipeline/bounded_queue.hpp"

namespace plateflow::pipeline {

using nlohmann::json;

void validate(const PipelineConfig& c) {
  if (c.gap_frames < 1) throw std::invalid_argument("gap_frames must be >= 1");
  if (c.best_k < 1) throw std::invalid_argument("best_k must be >= 1");
  if (c.enlarge_min_dim < 1) throw std::invalid_argument("enlarge_min_dim must be >= 1");
  if (!(c.fps_assumed > 0)) throw std::invalid_argument("fps_assumed must be positive");
  if (c.queue_bound < 1) throw std::invalid_argument("queue_bound must be >= 1");
  detect::validate(c.backbone);
  if (c.wakeup) {
    haar::validate(c.wakeup->model);
    haar::validate(c.wakeup->params);
  }
}

double fps_probe(std::int64_t frames_processed, double wall_time) {
  if (!(wall_time > 0)) throw std::invalid_argument("fps_probe: wall time must be positive");
  return static_cast<double>(frames_processed) / wall_time;
}

namespace {

struct Item {
  Frame frame;
  bool woke = false;
  bool skipped = false;
  std::shared_ptr<const Image> image;
  std::vector<detect::Detection> raw;
};

/// Highest confidence; equal confidences go to the upper, then leftmost box.
const detect::Detection* best_detection(const std::vector<detect::Detection>& dets) {
  const detect::Detection* best = nullptr;
  for (const auto& d : dets) {
    if (best == nullptr || d.confidence > best->confidence ||
        (d.confidence == best->confidence &&
         (d.box.y < best->box.y || (d.box.y == best->box.y && d.box.x < best->box.x)))) {
      best = &d;
    }
  }
  return best;
}

class FailureFlag {
 public:
  void raise(const std::string& what) {
    std::lock_guard lock(mu_);
    if (!raised_) error_ = what;
    raised_ = true;
    flag_ = true;
  }
  bool raised() const { return flag_; }
  std::string error() const {
    std::lock_guard lock(mu_);
    return error_;
  }

 private:
  mutable std::mutex mu_;
  std::atomic<bool> flag_{false};
  bool raised_ = false;
  std::string error_;
};

}  // namespace

StreamResult process_stream(FrameSource& source, Gate& gate, detect::Detector& backbone,
                            const PipelineConfig& config, const RunOptions& options) {
  validate(config);
  StreamResult result;
  result.stream_id = options.stream_id;
  const auto start = std::chrono::steady_clock::now();

  BoundedQueue<Item> ingested(config.queue_bound), gated(config.queue_bound), detected(config.queue_bound);
  FailureFlag failure;
  auto stop_all = [&](const std::string& what) {
    failure.raise(what);
    ingested.close();
    gated.close();
    detected.close();
  };

  std::thread ingest([&] {
    try {
      while (!failure.raised()) {
        auto frame = source.next();
        if (!frame) break;
        Item item;
        item.frame = std::move(*frame);
        if (!ingested.push(std::move(item))) break;
      }
    } catch (const std::exception& e) {
      stop_all(std::string("frame source: ") + e.what());
    }
    ingested.close();
  });

  std::thread gating([&] {
    try {
      while (auto item = ingested.pop()) {
        if (failure.raised()) break;
        item->woke = gate.wake(item->frame.gray);
        if (!gated.push(std::move(*item))) break;
      }
    } catch (const std::exception& e) {
      stop_all(std::string("wake-up gate: ") + e.what());
    }
    gated.close();
  });

  std::thread detecting([&] {
    try {
      while (auto item = gated.pop()) {
        if (failure.raised()) break;
        if (item->woke) {
          item->image = item->frame.color ? item->frame.color : std::make_shared<const Image>(to_image(item->frame.gray));
          try {
            item->raw = backbone.detect(*item->image, item->frame.gray.frame_index);
          } catch (const detect::DetectorFailure& e) {
            if (config.backbone.on_failure == detect::FailurePolicy::Abort) throw;
            item->skipped = true;
          }
        }
        if (!detected.push(std::move(*item))) break;
      }
    } catch (const std::exception& e) {
      stop_all(std::string("backbone: ") + e.what());
    }
    detected.close();
  });

  SegmentationState seg;
  try {
    while (auto item = detected.pop()) {
      if (failure.raised()) break;
      ++result.frames_processed;
      if (!item->woke) {
        ++result.frames_gated_out;
      } else {
        ++result.frames_to_backbone;
        if (item->skipped) {
          ++result.frames_skipped;
        } else {
          const auto dets = detect::postprocess(std::move(item->raw), config.backbone);
          if (const auto* best = best_detection(dets)) {
            ++result.frames_with_detections;
            const int id = assign_instance(seg, best->frame_index, config.gap_frames);
            if (result.instances.empty() || result.instances.back().instance_id != id) {
              result.instances.push_back({id, best->frame_index, best->frame_index, {}});
            }
            auto& inst = result.instances.back();
            inst.last_frame = best->frame_index;
            if (qualifies(inst.candidates, *best, config.best_k)) {
              Candidate cand{*best, crop_enlarge(*item->image, best->box, config.enlarge_min_dim), {}};
              update_best_k(inst.candidates, std::move(cand), config.best_k);
            }
          }
        }
      }
      if (options.on_progress) {
        options.on_progress({result.frames_processed, source.info().frames, static_cast<int>(result.instances.size())});
      }
    }
  } catch (const std::exception& e) {
    stop_all(std::string("selection: ") + e.what());
  }
  // Unblocks upstream stages if selection stopped early.
  if (failure.raised()) stop_all(failure.error());
  ingest.join();
  gating.join();
  detecting.join();

  result.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.fps_measured = result.wall_time > 0 ? fps_probe(result.frames_processed, result.wall_time) : 0.0;
  if (failure.raised()) {
    result.incomplete = true;
    result.error = failure.error();
  }
  if (options.output_root) persist_result(result, *options.output_root / result.stream_id);
  return result;
}

StreamResult process_stream(FrameSource& source, const PipelineConfig& config,
                            const eval::VideoAnnotation* annotation, const RunOptions& options) {
  validate(config);
  auto backbone = detect::make_detector(config.backbone, annotation);
  std::unique_ptr<Gate> gate;
  if (config.wakeup) {
    gate = std::make_unique<CascadeGate>(config.wakeup->model, config.wakeup->params);
  } else {
    gate = std::make_unique<DisabledGate>();
  }
  return process_stream(source, *gate, *backbone, config, options);
}

namespace {

json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }

}  // namespace

json instances_to_json(const StreamResult& r) {
  json instances = json::array();
  for (const auto& inst : r.instances) {
    json cands = json::array();
    for (std::size_t k = 0; k < inst.candidates.size(); ++k) {
      const auto& c = inst.candidates[k];
      cands.push_back({{"rank", k + 1},
                       {"frame_index", c.detection.frame_index},
                       {"confidence", c.detection.confidence},
                       {"box", box_json(c.detection.box)},
                       {"crop_path", c.crop_path}});
    }
    instances.push_back({{"id", inst.instance_id},
                         {"first_frame", inst.first_frame},
                         {"last_frame", inst.last_frame},
                         {"candidates", std::move(cands)}});
  }
  return {{"v", 1},
          {"stream_id", r.stream_id},
          {"incomplete", r.incomplete},
          {"counters",
           {{"frames_processed", r.frames_processed},
            {"frames_gated_out", r.frames_gated_out},
            {"frames_to_backbone", r.frames_to_backbone},
            {"frames_with_detections", r.frames_with_detections},
            {"frames_skipped", r.frames_skipped}}},
          {"instances", std::move(instances)}};
}

json run_stats_to_json(const StreamResult& r) {
  auto doc = instances_to_json(r)["counters"];
  doc["stream_id"] = r.stream_id;
  doc["wall_time"] = r.wall_time;
  doc["fps_measured"] = r.fps_measured;
  doc["incomplete"] = r.incomplete;
  doc["instances"] = r.instances.size();
  if (!r.error.empty()) doc["error"] = r.error;
  return doc;
}

void persist_result(StreamResult& result, const std::filesystem::path& stream_dir) {
  std::filesystem::create_directories(stream_dir);
  for (auto& inst : result.instances) {
    const auto inst_dir = "instance-" + std::to_string(inst.instance_id);
    std::filesystem::create_directories(stream_dir / inst_dir);
    for (std::size_t k = 0; k < inst.candidates.size(); ++k) {
      auto& c = inst.candidates[k];
      c.crop_path = inst_dir + "/cand-" + std::to_string(k + 1) + ".png";
      if (!c.crop.empty()) io::write_png(stream_dir / c.crop_path, c.crop);
    }
  }
  io::write_text(stream_dir / "instances.json", instances_to_json(result).dump(2) + "\n");
  io::write_text(stream_dir / "run.json", run_stats_to_json(result).dump(2) + "\n");
}

StreamResult instances_from_json(const json& doc) {
  try {
    if (doc.value("v", 0) != 1) throw SourceError("instances.json: unsupported version");
    StreamResult r;
    r.stream_id = doc.at("stream_id").get<std::string>();
    r.incomplete = doc.value("incomplete", false);
    const auto& c = doc.at("counters");
    r.frames_processed = c.at("frames_processed").get<std::int64_t>();
    r.frames_gated_out = c.at("frames_gated_out").get<std::int64_t>();
    r.frames_to_backbone = c.at("frames_to_backbone").get<std::int64_t>();
    r.frames_with_detections = c.at("frames_with_detections").get<std::int64_t>();
    r.frames_skipped = c.at("frames_skipped").get<std::int64_t>();
    for (const auto& i : doc.at("instances")) {
      PlateInstance inst{i.at("id").get<int>(), i.at("first_frame").get<std::int64_t>(),
                         i.at("last_frame").get<std::int64_t>(), {}};
      for (const auto& cj : i.at("candidates")) {
        const auto& b = cj.at("box");
        Candidate cand;
        cand.detection = {{b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(),
                           b.at("h").get<double>()},
                          cj.at("confidence").get<double>(),
                          cj.at("frame_index").get<std::int64_t>()};
        cand.crop_path = cj.at("crop_path").get<std::string>();
        inst.candidates.push_back(std::move(cand));
      }
      r.instances.push_back(std::move(inst));
    }
    return r;
  } catch (const json::exception& e) {
    throw SourceError(std::string("instances.json: ") + e.what());
  }
}

StreamResult load_instances(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw SourceError(path.string() + ": " + e.what());
  }
  return instances_from_json(doc);
}

StreamResult load_stream_output(const std::filesystem::path& stream_dir, bool with_crops) {
  auto result = load_instances(stream_dir / "instances.json");
  if (std::filesystem::exists(stream_dir / "run.json")) {
    try {
      const auto run = json::parse(io::read_text(stream_dir / "run.json"));
      result.wall_time = run.value("wall_time", 0.0);
      result.fps_measured = run.value("fps_measured", 0.0);
      result.error = run.value("error", std::string());
    } catch (const json::exception& e) {
      throw SourceError((stream_dir / "run.json").string() + ": " + e.what());
    }
  }
  if (with_crops) {
    for (auto& inst : result.instances)
      for (auto& c : inst.candidates)
        if (!c.crop_path.empty()) c.crop = io::read_png(stream_dir / c.crop_path);
  }
  return result;
}

}  // namespace plateflow::pipeline
