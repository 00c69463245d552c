#include "plateflow/app/ablation.hpp"

#include <algorithm>
#include <chrono>

#include "plateflow/app/config.hpp"
#include "plateflow/app/training.hpp"
#include "plateflow/haar/model_io.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/synth/generator.hpp"

namespace plateflow::app {

using nlohmann::json;
namespace fs = std::filesystem;

OcrChoice parse_ocr_choice(const std::string& spec) {
  OcrChoice c;
  if (spec == "mock") return c;
  if (spec.rfind("http:", 0) == 0 && spec.size() > 5) {
    c.kind = OcrChoice::Kind::Http;
    c.url = spec.substr(5);
    if (c.url.rfind("//", 0) == 0) c.url = "http:" + c.url;
    return c;
  }
  throw ConfigError("OCR must be 'mock' or 'http:<url>', got '" + spec + "'");
}

std::unique_ptr<ocr::OcrService> make_ocr(const OcrChoice& choice, const ocr::OcrManifest* manifest) {
  if (choice.kind == OcrChoice::Kind::Http) {
    ocr::OcrEndpoint ep;
    ep.base_url = choice.url;
    return std::make_unique<ocr::HttpOcrClient>(ep);
  }
  if (manifest == nullptr) throw ConfigError("mock OCR needs an ocr_manifest.json");
  return std::make_unique<ocr::MockOcr>(*manifest, choice.errors);
}

namespace {

struct StreamPaths {
  eval::VideoAnnotation annotation;
  fs::path output_dir;
};

fs::path output_for(const fs::path& out, const std::string& stream_id) {
  if (fs::exists(out / stream_id / "instances.json")) return out / stream_id;
  if (fs::exists(out / "instances.json")) return out;
  throw ConfigError("no pipeline output for stream " + stream_id + " under " + out.string());
}

}  // namespace

OutputEvaluation evaluate_outputs(const fs::path& out, const fs::path& annotations, const OcrChoice& ocr_choice,
                                  const std::string& pipeline_name, const std::optional<fs::path>& manifest_path) {
  std::vector<StreamPaths> streams;
  fs::path manifest_dir;
  if (fs::is_directory(annotations)) {
    std::vector<fs::path> dirs;
    for (const auto& e : fs::directory_iterator(annotations)) {
      if (fs::exists(e.path() / "annotations.json")) dirs.push_back(e.path());
    }
    std::sort(dirs.begin(), dirs.end());
    for (const auto& d : dirs) {
      auto ann = eval::load_annotation(d / "annotations.json");
      streams.push_back({ann, output_for(out, ann.stream_id)});
    }
    manifest_dir = annotations;
  } else {
    auto ann = eval::load_annotation(annotations);
    streams.push_back({ann, output_for(out, ann.stream_id)});
    manifest_dir = annotations.parent_path();
  }
  if (streams.empty()) throw ConfigError("no annotations under " + annotations.string());

  std::optional<ocr::OcrManifest> manifest;
  if (manifest_path) {
    manifest = ocr::load_manifest(*manifest_path);
  } else if (fs::exists(manifest_dir / "ocr_manifest.json")) {
    manifest = ocr::load_manifest(manifest_dir / "ocr_manifest.json");
  }
  auto service = make_ocr(ocr_choice, manifest ? &*manifest : nullptr);
  const int parallel = 4;

  std::vector<pipeline::StreamResult> results;
  for (const auto& s : streams) results.push_back(pipeline::load_stream_output(s.output_dir));
  OutputEvaluation out_eval;
  std::vector<eval::StreamEvaluation> evals;
  std::vector<eval::StreamDetections> dets;
  for (std::size_t i = 0; i < streams.size(); ++i) {
    const auto provenance = ocr_choice.kind == OcrChoice::Kind::Mock
                                ? eval::annotated_provenance(results[i], streams[i].annotation)
                                : eval::pipeline_provenance(results[i].stream_id);
    auto run = eval::rank1_ocr(results[i], *service, parallel, provenance);
    for (const auto& [id, err] : run.failures) {
      out_eval.ocr_failures.push_back(results[i].stream_id + "/" + std::to_string(id) + ": " + err);
    }
    evals.push_back({&results[i], &streams[i].annotation, std::move(run.text)});
    dets.push_back({&streams[i].annotation, eval::candidate_detections(results[i])});
  }
  out_eval.score = eval::score_run_detailed(pipeline_name, evals);
  out_eval.ap = eval::ap_summary(dets);
  return out_eval;
}

namespace {

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!out.empty() && out.back() != '-') {
      out.push_back('-');
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "run" : out;
}

OcrChoice ocr_from_config(const json& doc) {
  if (!doc.contains("ocr")) return {};
  const auto& o = doc.at("ocr");
  if (o.is_string()) return parse_ocr_choice(o.get<std::string>());
  OcrChoice c;
  if (o.contains("http")) {
    c.kind = OcrChoice::Kind::Http;
    c.url = o.at("http").get<std::string>();
  } else if (o.contains("mock")) {
    c.errors.char_sub_rate = o.at("mock").value("char_sub_rate", 0.0);
    c.errors.seed = o.at("mock").value("seed", std::uint64_t{1});
  }
  return c;
}

}  // namespace

std::vector<eval::RunMetrics> run_ablation(const json& config, const fs::path& base_dir, std::ostream* log,
                                           const std::optional<fs::path>& out_override) {
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_relative() ? base_dir / path : path;
  };
  try {
    const fs::path out = out_override ? *out_override : resolve(config.value("out", std::string("ablation")));
    fs::create_directories(out);

    fs::path corpus_dir;
    if (config.contains("corpus_dir")) {
      corpus_dir = resolve(config.at("corpus_dir").get<std::string>());
    } else if (config.contains("corpus")) {
      corpus_dir = out / "corpus";
      synth::write_corpus(synth::corpus_from_json(config.at("corpus")), corpus_dir);
      if (log) *log << "corpus written to " << corpus_dir.string() << "\n";
    } else {
      throw ConfigError("ablation config needs corpus or corpus_dir");
    }
    std::vector<fs::path> stream_dirs;
    for (const auto& e : fs::directory_iterator(corpus_dir)) {
      if (fs::exists(e.path() / "stream.json")) stream_dirs.push_back(e.path());
    }
    std::sort(stream_dirs.begin(), stream_dirs.end());
    if (stream_dirs.empty()) throw ConfigError("no streams under " + corpus_dir.string());

    std::optional<haar::CascadeModel> cascade;
    if (config.contains("cascade")) {
      cascade = haar::load_cascade(resolve(config.at("cascade").get<std::string>()));
    } else if (config.contains("train")) {
      const auto t0 = std::chrono::steady_clock::now();
      cascade = train_gate(synth_training_from_json(config.at("train"))).model;
      haar::save_cascade(out / "cascade.json", *cascade);
      if (log) {
        *log << "trained " << cascade->stages.size() << "-stage cascade in "
             << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
      }
    }

    const auto ocr_choice = ocr_from_config(config);
    std::optional<ocr::OcrManifest> manifest;
    if (fs::exists(corpus_dir / "ocr_manifest.json")) manifest = ocr::load_manifest(corpus_dir / "ocr_manifest.json");
    auto service = make_ocr(ocr_choice, manifest ? &*manifest : nullptr);

    if (!config.contains("pipelines") || config.at("pipelines").empty()) {
      throw ConfigError("ablation config needs at least one pipeline");
    }
    std::vector<eval::RunMetrics> rows;
    for (const auto& p : config.at("pipelines")) {
      const auto name = p.at("name").get<std::string>();
      auto pj = p;
      const bool wake = pj.value("wakeup", false);
      const auto backbone_latency = std::chrono::microseconds(
          static_cast<std::int64_t>(pj.value("backbone_latency_ms", 0.0) * 1000));
      for (const char* key : {"name", "wakeup", "backbone_latency_ms"}) pj.erase(key);
      auto pc = pipeline_config_from_json(pj, base_dir);
      if (wake) {
        if (!cascade) throw ConfigError("pipeline " + name + " needs a cascade (cascade or train)");
        pc.wakeup = pipeline::WakeupConfig{*cascade, haar::ScanParams{}};
      }
      std::vector<pipeline::StreamResult> results;
      std::vector<eval::VideoAnnotation> anns;
      for (const auto& dir : stream_dirs) {
        anns.push_back(eval::load_annotation(dir / "annotations.json"));
        pipeline::DirectoryFrameSource source(dir);
        auto backbone = detect::make_detector(pc.backbone, &anns.back());
        if (backbone_latency.count() > 0) {
          backbone = std::make_unique<detect::SimulatedDetector>(std::move(backbone), backbone_latency);
        }
        std::unique_ptr<pipeline::Gate> gate;
        if (pc.wakeup) {
          gate = std::make_unique<pipeline::CascadeGate>(pc.wakeup->model, pc.wakeup->params);
        } else {
          gate = std::make_unique<pipeline::DisabledGate>();
        }
        pipeline::RunOptions opts;
        opts.stream_id = anns.back().stream_id;
        opts.output_root = out / slug(name);
        results.push_back(pipeline::process_stream(source, *gate, *backbone, pc, opts));
      }
      std::vector<eval::StreamEvaluation> evals;
      for (std::size_t i = 0; i < results.size(); ++i) {
        const auto prov = ocr_choice.kind == OcrChoice::Kind::Mock ? eval::annotated_provenance(results[i], anns[i])
                                                                   : eval::pipeline_provenance(results[i].stream_id);
        evals.push_back({&results[i], &anns[i], eval::rank1_ocr(results[i], *service, 4, prov).text});
      }
      rows.push_back(eval::score_run(name, evals));
      if (log) *log << "ran " << name << " over " << results.size() << " streams\n";
    }
    eval::write_report(out, rows);
    return rows;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("ablation config: ") + e.what());
  }
}

}  // namespace plateflow::app
