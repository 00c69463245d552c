#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateflow/eval/metrics.hpp"
#include "plateflow/eval/scoring.hpp"
#include "plateflow/ocr/ocr.hpp"

namespace plateflow::app {

struct OcrChoice {
  enum class Kind { Mock, Http };
  Kind kind = Kind::Mock;
  ocr::ErrorModel errors;
  std::string url;
};

/// "mock" or "http:<base url>".
OcrChoice parse_ocr_choice(const std::string& spec);

/// Builds the service; the mock needs the ground-truth manifest.
std::unique_ptr<ocr::OcrService> make_ocr(const OcrChoice& choice, const ocr::OcrManifest* manifest);

struct OutputEvaluation {
  eval::RunScore score;
  eval::ApSummary ap;
  /// OCR errors per (stream_id, instance_id).
  std::vector<std::string> ocr_failures;
};

/// Scores pipeline output against ground truth. `annotations` is one annotations.json (its
/// output is `out/<stream_id>` or `out` itself) or a corpus directory whose stream
/// subdirectories each hold annotations.json. The mock OCR reads ocr_manifest.json beside the
/// annotations unless `manifest` is given.
OutputEvaluation evaluate_outputs(const std::filesystem::path& out, const std::filesystem::path& annotations,
                                  const OcrChoice& ocr_choice, const std::string& pipeline_name,
                                  const std::optional<std::filesystem::path>& manifest = std::nullopt);

/// Runs every configured pipeline over a corpus and writes report.txt and report.json.
/// Config keys: out, corpus (generator corpus JSON) or corpus_dir, cascade (path) or train
/// (training spec), ocr ("mock", "http:<url>" or {"mock": {char_sub_rate, seed}}), and
/// pipelines: [{name, wakeup: bool, backbone_latency_ms, ...pipeline keys}]. backbone_latency_ms adds a
/// fixed per-frame backbone cost.
std::vector<eval::RunMetrics> run_ablation(const nlohmann::json& config, const std::filesystem::path& base_dir,
                                           std::ostream* log = nullptr,
                                           const std::optional<std::filesystem::path>& out_override = std::nullopt);

}  // namespace plateflow::app
