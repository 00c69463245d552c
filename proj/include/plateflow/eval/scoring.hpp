#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateflow/eval/annotation.hpp"
#include "plateflow/eval/metrics.hpp"
#include "plateflow/ocr/ocr.hpp"
#include "plateflow/pipeline/pipeline.hpp"

namespace plateflow::eval {

/// One row of the ablation table; percents carry one decimal.
struct RunMetrics {
  std::string pipeline_name;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  double detection_rate = 0;
  double fps = 0;
  bool operator==(const RunMetrics&) const = default;
};

struct StreamEvaluation {
  const pipeline::StreamResult* result = nullptr;
  const VideoAnnotation* annotation = nullptr;
  /// Rank-1 OCR text per pipeline instance id. A missing entry means OCR failed for that instance.
  std::map<int, std::string> ocr_text;
};

struct PlateScore {
  std::string stream_id;
  int annotated_id = 0;
  /// Pipeline instance matched to the plate; absent when undetected.
  std::optional<int> instance_id;
  std::string reference;
  std::string hypothesis;
  Prf prf;
};

struct RunScore {
  RunMetrics metrics;
  int plates_total = 0;
  int plates_detected = 0;
  int instances_found = 0;
  std::vector<PlateScore> plates;
};

/// Pipeline instance matched to an annotated plate: the one with the most candidates whose box
/// reaches IoU >= 0.5 against that plate on the candidate's frame; ties go to the lower id.
std::optional<int> match_instance(const pipeline::StreamResult& result, const PlateAnnotation& plate);

/// P/R/F1 macro-averaged over detected plates on normalized text; detection rate over all plates;
/// fps as total frames over total wall time.
RunScore score_run_detailed(const std::string& pipeline_name, const std::vector<StreamEvaluation>& streams);
RunMetrics score_run(const std::string& pipeline_name, const std::vector<StreamEvaluation>& streams);

using ProvenanceFn = std::function<ocr::Provenance(const pipeline::PlateInstance&)>;

/// (stream_id, pipeline instance id).
ProvenanceFn pipeline_provenance(const std::string& stream_id);
/// (stream_id, id of the annotated plate matched to the instance), falling back to the pipeline id.
/// Lets the mock OCR key its ground truth when pipeline and annotation numbering differ.
ProvenanceFn annotated_provenance(const pipeline::StreamResult& result, const VideoAnnotation& annotation);

struct OcrRun {
  std::map<int, std::string> text;
  /// Error message per instance whose OCR failed after retries.
  std::map<int, std::string> failures;
};

/// OCR of every instance's rank-1 crop, up to max_parallel at once.
OcrRun rank1_ocr(const pipeline::StreamResult& result, ocr::OcrService& service, int max_parallel,
                 const ProvenanceFn& provenance);

/// Candidate boxes of every instance as scored detections, for AP over pipeline output.
std::vector<ScoredBox> candidate_detections(const pipeline::StreamResult& result);

/// Fixed-width text table in the column order pipeline, precision, recall, F1, detection rate, FPS.
std::string ablation_report(const std::vector<RunMetrics>& runs);
nlohmann::json report_to_json(const std::vector<RunMetrics>& runs);
std::vector<RunMetrics> report_from_json(const nlohmann::json& doc);
/// Writes report.txt and report.json into dir.
void write_report(const std::filesystem::path& dir, const std::vector<RunMetrics>& runs);

}  // namespace plateflow::eval
