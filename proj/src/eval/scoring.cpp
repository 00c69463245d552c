#include "plateflow/eval/scoring.hpp"

#include <cstdio>
#include <sstream>

#include "plateflow/detect/box_ops.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/ocr/ocr.hpp"

namespace plateflow::eval {

std::optional<int> match_instance(const pipeline::StreamResult& result, const PlateAnnotation& plate) {
  std::optional<int> best;
  int best_hits = 0;
  for (const auto& inst : result.instances) {
    int hits = 0;
    for (const auto& c : inst.candidates) {
      for (const auto& span : plate.spans) {
        auto it = span.boxes.find(c.detection.frame_index);
        if (it != span.boxes.end() && detect::iou(c.detection.box, it->second) >= 0.5) ++hits;
      }
    }
    if (hits > best_hits || (hits > 0 && hits == best_hits && inst.instance_id < *best)) {
      best = inst.instance_id;
      best_hits = hits;
    }
  }
  return best;
}

RunScore score_run_detailed(const std::string& pipeline_name, const std::vector<StreamEvaluation>& streams) {
  RunScore out;
  out.metrics.pipeline_name = pipeline_name;
  double p = 0, r = 0, f = 0, frames = 0, wall = 0;
  for (const auto& s : streams) {
    if (s.result == nullptr) throw EvalError("stream evaluation without a result");
    if (s.annotation == nullptr) throw EvalError("no annotation for stream " + s.result->stream_id);
    frames += static_cast<double>(s.result->frames_processed);
    wall += s.result->wall_time;
    out.instances_found += static_cast<int>(s.result->instances.size());
    for (const auto& plate : s.annotation->plates) {
      PlateScore ps;
      ps.stream_id = s.annotation->stream_id;
      ps.annotated_id = plate.instance_id;
      ps.reference = ocr::normalize_bangla(plate.text);
      ps.instance_id = match_instance(*s.result, plate);
      ++out.plates_total;
      if (ps.instance_id) {
        ++out.plates_detected;
        auto it = s.ocr_text.find(*ps.instance_id);
        if (it != s.ocr_text.end()) ps.hypothesis = ocr::normalize_bangla(it->second);
        ps.prf = ocr_prf(ps.reference, ps.hypothesis);
        // An OCR failure scores zero rather than matching an empty reference.
        if (it == s.ocr_text.end()) ps.prf = {};
        p += ps.prf.precision;
        r += ps.prf.recall;
        f += ps.prf.f1;
      }
      out.plates.push_back(std::move(ps));
    }
  }
  if (out.plates_total == 0) throw EvalError("no annotated plates to score");
  if (out.plates_detected > 0) {
    out.metrics.precision = round1(100.0 * p / out.plates_detected);
    out.metrics.recall = round1(100.0 * r / out.plates_detected);
    out.metrics.f1 = round1(100.0 * f / out.plates_detected);
  }
  out.metrics.detection_rate = detection_rate(out.plates_detected, out.plates_total);
  out.metrics.fps = wall > 0 ? round1(frames / wall) : 0;
  return out;
}

RunMetrics score_run(const std::string& pipeline_name, const std::vector<StreamEvaluation>& streams) {
  return score_run_detailed(pipeline_name, streams).metrics;
}

ProvenanceFn pipeline_provenance(const std::string& stream_id) {
  return [stream_id](const pipeline::PlateInstance& inst) { return ocr::Provenance{stream_id, inst.instance_id}; };
}

ProvenanceFn annotated_provenance(const pipeline::StreamResult& result, const VideoAnnotation& annotation) {
  std::map<int, int> to_plate;
  for (const auto& plate : annotation.plates) {
    if (auto id = match_instance(result, plate)) to_plate.emplace(*id, plate.instance_id);
  }
  return [to_plate, stream_id = annotation.stream_id](const pipeline::PlateInstance& inst) {
    auto it = to_plate.find(inst.instance_id);
    return ocr::Provenance{stream_id, it == to_plate.end() ? inst.instance_id : it->second};
  };
}

OcrRun rank1_ocr(const pipeline::StreamResult& result, ocr::OcrService& service, int max_parallel,
                 const ProvenanceFn& provenance) {
  std::vector<ocr::OcrRequest> requests;
  std::vector<int> ids;
  for (const auto& inst : result.instances) {
    if (inst.candidates.empty()) continue;
    requests.push_back({&inst.candidates.front().crop, provenance(inst)});
    ids.push_back(inst.instance_id);
  }
  const auto outcomes = ocr::recognize_all(service, requests, max_parallel);
  OcrRun out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (outcomes[i].ok()) {
      out.text[ids[i]] = outcomes[i].result->text;
    } else {
      out.failures[ids[i]] = outcomes[i].error;
    }
  }
  return out;
}

std::vector<ScoredBox> candidate_detections(const pipeline::StreamResult& result) {
  std::vector<ScoredBox> out;
  for (const auto& inst : result.instances)
    for (const auto& c : inst.candidates)
      out.push_back({c.detection.frame_index, c.detection.box, c.detection.confidence});
  return out;
}

std::string ablation_report(const std::vector<RunMetrics>& runs) {
  if (runs.empty()) throw EvalError("ablation report needs at least one run");
  std::size_t name_w = 8;
  for (const auto& r : runs) name_w = std::max(name_w, r.pipeline_name.size());
  std::ostringstream out;
  auto row = [&](const std::string& name, const std::vector<std::string>& cells) {
    out << name << std::string(name_w - name.size(), ' ');
    for (const auto& c : cells) out << "  " << std::string(c.size() < 9 ? 9 - c.size() : 0, ' ') << c;
    out << '\n';
  };
  row("Pipeline", {"Precision", "Recall", "F1", "Det. rate", "FPS"});
  out << std::string(name_w + 5 * 11, '-') << '\n';
  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return std::string(buf);
  };
  for (const auto& r : runs) {
    row(r.pipeline_name, {fmt(r.precision), fmt(r.recall), fmt(r.f1), fmt(r.detection_rate), fmt(r.fps)});
  }
  return out.str();
}

nlohmann::json report_to_json(const std::vector<RunMetrics>& runs) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : runs) {
    rows.push_back({{"pipeline", r.pipeline_name},
                    {"precision", r.precision},
                    {"recall", r.recall},
                    {"f1", r.f1},
                    {"detection_rate", r.detection_rate},
                    {"fps", r.fps}});
  }
  return {{"v", 1}, {"runs", rows}};
}

std::vector<RunMetrics> report_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("v", 0) != 1) throw EvalError("unsupported report version");
    std::vector<RunMetrics> out;
    for (const auto& r : doc.at("runs")) {
      out.push_back({r.at("pipeline").get<std::string>(), r.at("precision").get<double>(), r.at("recall").get<double>(),
                     r.at("f1").get<double>(), r.at("detection_rate").get<double>(), r.at("fps").get<double>()});
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw EvalError(std::string("malformed report: ") + e.what());
  }
}

void write_report(const std::filesystem::path& dir, const std::vector<RunMetrics>& runs) {
  std::filesystem::create_directories(dir);
  io::write_text(dir / "report.txt", ablation_report(runs));
  io::write_text(dir / "report.json", report_to_json(runs).dump(2) + "\n");
}

}  // namespace plateflow::eval
