#include <CLI11.hpp>

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iostream>

#include "plateflow/app/ablation.hpp"
#include "plateflow/app/config.hpp"
#include "plateflow/app/jobs.hpp"
#include "plateflow/app/server.hpp"
#include "plateflow/app/training.hpp"
#include "plateflow/haar/model_io.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/synth/generator.hpp"

using namespace plateflow;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json read_json(const fs::path& path) { return json::parse(io::read_text(path)); }

int cmd_synth(const fs::path& spec_path, const fs::path& out) {
  const auto doc = read_json(spec_path);
  if (doc.contains("events")) {
    const auto spec = synth::spec_from_json(doc);
    synth::write_stream(spec, out);
    std::cout << "wrote stream " << spec.stream_id << " (" << spec.frames << " frames, " << spec.events.size()
              << " vehicles) to " << out.string() << "\n";
  } else {
    const auto specs = synth::corpus_from_json(doc);
    synth::write_corpus(specs, out);
    std::cout << "wrote " << specs.size() << " streams to " << out.string() << "\n";
  }
  return 0;
}

int cmd_train(const std::string& pos, const std::string& neg, const std::string& synth_spec, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  auto report = [](int stage, const boosting::StageReport& r) {
    std::printf("stage %2d: %2d stumps  tpr %.4f  fpr %.4f  negatives %zu -> %zu\n", stage + 1, r.stumps, r.tpr,
                r.fpr, r.negatives_in, r.negatives_out);
    std::fflush(stdout);
  };
  boosting::CascadeTrainingResult result;
  if (!synth_spec.empty()) {
    const auto spec = synth_spec == "default" ? app::SynthTrainingSpec{}
                                                : app::synth_training_from_json(read_json(synth_spec));
    result = app::train_gate(spec, report);
  } else {
    if (pos.empty() || neg.empty()) throw CLI::ValidationError("train-cascade", "give <pos> <neg> or --synth");
    boosting::TrainingSet set{app::load_patch_dir(pos), app::load_patch_dir(neg)};
    boosting::CascadeTrainingOptions o;
    o.on_stage = report;
    result = boosting::train_cascade(set, boosting::StageTargets{}, o);
  }
  if (result.permissive_warning) std::cerr << "warning: no negatives, emitted a permissive stage\n";
  haar::save_cascade(out, result.model);
  std::printf("%zu stages, training tpr %.4f fpr %.6f, %.1f s -> %s\n", result.model.stages.size(),
              result.training_tpr, result.training_fpr,
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), out.string().c_str());
  return 0;
}

struct RunArgs {
  fs::path stream;
  std::string cascade;
  std::string backbone = "oracle";
  bool no_wakeup = false;
  int gap = 24;
  int best_k = 3;
  std::string annotations;
  std::string config;
  fs::path out;
};

int cmd_run(const RunArgs& a) {
  json doc = a.config.empty() ? json::object() : read_json(a.config);
  doc["gap"] = a.gap;
  doc["best_k"] = a.best_k;
  doc["backbone"] = a.backbone;
  if (a.no_wakeup) {
    doc["wakeup"] = false;
  } else if (!a.cascade.empty()) {
    doc["wakeup"] = fs::absolute(a.cascade).string();
  } else if (!doc.contains("wakeup")) {
    throw CLI::ValidationError("run", "give --cascade <file> or --no-wakeup");
  }
  const auto config = app::pipeline_config_from_json(doc, a.config.empty() ? fs::path() : fs::path(a.config).parent_path());
  std::optional<eval::VideoAnnotation> ann;
  const fs::path ann_path = a.annotations.empty() ? a.stream / "annotations.json" : fs::path(a.annotations);
  if (fs::exists(ann_path)) ann = eval::load_annotation(ann_path);
  pipeline::DirectoryFrameSource source(a.stream);
  pipeline::RunOptions opts;
  opts.stream_id = ann ? ann->stream_id : fs::absolute(a.stream).filename().string();
  opts.output_root = a.out;
  const auto r = pipeline::process_stream(source, config, ann ? &*ann : nullptr, opts);
  std::printf("%s: %lld frames, %zu instances, %lld gated out, %lld to backbone, %.1f FPS\n", r.stream_id.c_str(),
              static_cast<long long>(r.frames_processed), r.instances.size(),
              static_cast<long long>(r.frames_gated_out), static_cast<long long>(r.frames_to_backbone),
              r.fps_measured);
  std::printf("output in %s\n", (a.out / r.stream_id).string().c_str());
  if (r.incomplete) {
    std::cerr << "incomplete: " << r.error << "\n";
    return 2;
  }
  return 0;
}

void print_ap(const eval::ApSummary& ap) {
  auto opt = [](const std::optional<double>& v) { return v ? std::to_string(*v).substr(0, 5) : std::string("-"); };
  std::printf("AP %.3f  AP50 %.3f  AP75 %.3f  APs %s  APm %s  APl %s\n", ap.ap, ap.ap50, ap.ap75,
              opt(ap.ap_small).c_str(), opt(ap.ap_medium).c_str(), opt(ap.ap_large).c_str());
}

int cmd_eval(const fs::path& out, const fs::path& annotations, const std::string& ocr_spec,
             const std::string& manifest, const std::string& name) {
  const auto choice = app::parse_ocr_choice(ocr_spec);
  const auto result = app::evaluate_outputs(out, annotations, choice, name,
                                            manifest.empty() ? std::nullopt : std::optional<fs::path>(manifest));
  std::cout << eval::ablation_report({result.score.metrics});
  std::printf("plates %d, detected %d, instances %d\n", result.score.plates_total, result.score.plates_detected,
              result.score.instances_found);
  print_ap(result.ap);
  for (const auto& f : result.ocr_failures) std::cerr << "ocr failed: " << f << "\n";
  eval::write_report(out, {result.score.metrics});
  return 0;
}

int cmd_ablate(const fs::path& config, const std::string& out) {
  const auto rows = app::run_ablation(read_json(config), fs::absolute(config).parent_path(), &std::cerr,
                                      out.empty() ? std::nullopt : std::optional<fs::path>(out));
  std::cout << eval::ablation_report(rows);
  return 0;
}

std::function<void()> g_stop;

void on_signal(int) {
  if (g_stop) g_stop();
}

int cmd_serve(int port, const std::string& data, const std::string& ocr_url, int workers, const std::string& host) {
  auto options = app::service_options_from_env(data, ocr_url);
  options.workers = workers;
  app::JobService service(std::move(options));
  app::ApiServer server(service, port, host);
  std::cout << "serving " << server.base_url() << " with data in " << service.options().data_dir.string()
            << (service.options().ocr ? "" : " (no OCR service)") << std::endl;
  g_stop = [&server] { server.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.wait();
  return 0;
}

int cmd_mock_ocr(int port, const fs::path& manifest, double rate, std::uint64_t seed, const std::string& host) {
  ocr::MockOcrServer server(ocr::load_manifest(manifest), {rate, seed}, port, host);
  std::cout << "mock OCR on " << server.base_url() << std::endl;
  g_stop = [&server] { server.stop(); };
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  server.wait();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"plateflow: two-stage license plate pipeline, evaluation and review service"};
  cli.require_subcommand(1);

  fs::path synth_spec, synth_out;
  auto* synth_cmd = cli.add_subcommand("synth", "Generate a synthetic stream or corpus");
  synth_cmd->add_option("spec", synth_spec, "Stream spec or corpus JSON")->required()->check(CLI::ExistingFile);
  synth_cmd->add_option("out", synth_out, "Output directory")->required();

  std::string pos, neg, train_synth;
  fs::path train_out = "cascade.json";
  auto* train_cmd = cli.add_subcommand("train-cascade", "Train the wake-up cascade");
  train_cmd->add_option("pos", pos, "Directory of positive patches");
  train_cmd->add_option("neg", neg, "Directory of negative patches");
  train_cmd->add_option("--synth", train_synth, "Training spec JSON, or 'default'");
  train_cmd->add_option("-o,--output", train_out, "Cascade file");

  RunArgs run;
  auto* run_cmd = cli.add_subcommand("run", "Run the pipeline over one stream");
  run_cmd->add_option("stream", run.stream, "Stream directory")->required()->check(CLI::ExistingDirectory);
  run_cmd->add_option("--cascade", run.cascade, "Wake-up cascade file");
  run_cmd->add_option("--backbone", run.backbone, "oracle or subprocess:<cmd>");
  run_cmd->add_flag("--no-wakeup", run.no_wakeup, "Send every frame to the backbone");
  run_cmd->add_option("--gap", run.gap, "Frames without a detection that start a new instance");
  run_cmd->add_option("--best-k", run.best_k, "Candidates kept per instance");
  run_cmd->add_option("--annotations", run.annotations, "Ground truth for the oracle backbone");
  run_cmd->add_option("--config", run.config, "Pipeline config JSON (flags override it)");
  run_cmd->add_option("-o,--output", run.out, "Output root")->required();

  fs::path eval_out, eval_ann;
  std::string eval_ocr = "mock", eval_manifest, eval_name = "pipeline";
  auto* eval_cmd = cli.add_subcommand("eval", "Score pipeline output against annotations");
  eval_cmd->add_option("out", eval_out, "Output of plateflow run")->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("annotations", eval_ann, "annotations.json or corpus directory")->required()->check(CLI::ExistingPath);
  eval_cmd->add_option("--ocr", eval_ocr, "mock or http:<url>");
  eval_cmd->add_option("--manifest", eval_manifest, "ocr_manifest.json for the mock");
  eval_cmd->add_option("--name", eval_name, "Pipeline name in the report");

  fs::path ablate_config;
  std::string ablate_out;
  auto* ablate_cmd = cli.add_subcommand("ablate", "Run pipeline variants and emit the comparison table");
  ablate_cmd->add_option("config", ablate_config, "Ablation config JSON")->required()->check(CLI::ExistingFile);
  ablate_cmd->add_option("-o,--output", ablate_out, "Output directory (overrides the config)");

  int serve_port = 8080, serve_workers = 1;
  std::string serve_data, serve_ocr, serve_host = "127.0.0.1";
  auto* serve_cmd = cli.add_subcommand("serve", "Run the HTTP job service");
  serve_cmd->add_option("--port", serve_port, "Listen port");
  serve_cmd->add_option("--data", serve_data, "Data directory (default $PLATEFLOW_DATA_DIR)");
  serve_cmd->add_option("--ocr-url", serve_ocr, "OCR service URL (default $PLATEFLOW_OCR_URL)");
  serve_cmd->add_option("--workers", serve_workers, "Job workers")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--host", serve_host, "Listen address");

  int mock_port = 8090;
  fs::path mock_manifest;
  double mock_rate = 0;
  std::uint64_t mock_seed = 1;
  std::string mock_host = "127.0.0.1";
  auto* mock_cmd = cli.add_subcommand("mock-ocr", "Serve the OCR wire contract from a ground-truth manifest");
  mock_cmd->add_option("--manifest", mock_manifest, "ocr_manifest.json")->required()->check(CLI::ExistingFile);
  mock_cmd->add_option("--port", mock_port, "Listen port (0 picks one)");
  mock_cmd->add_option("--char-sub-rate", mock_rate, "Per-character substitution probability")->check(CLI::Range(0.0, 1.0));
  mock_cmd->add_option("--seed", mock_seed, "Error model seed");
  mock_cmd->add_option("--host", mock_host, "Listen address");

  CLI11_PARSE(cli, argc, argv);
  try {
    if (*synth_cmd) return cmd_synth(synth_spec, synth_out);
    if (*train_cmd) return cmd_train(pos, neg, train_synth, train_out);
    if (*run_cmd) return cmd_run(run);
    if (*eval_cmd) return cmd_eval(eval_out, eval_ann, eval_ocr, eval_manifest, eval_name);
    if (*ablate_cmd) return cmd_ablate(ablate_config, ablate_out);
    if (*serve_cmd) return cmd_serve(serve_port, serve_data, serve_ocr, serve_workers, serve_host);
    if (*mock_cmd) return cmd_mock_ocr(mock_port, mock_manifest, mock_rate, mock_seed, mock_host);
  } catch (const CLI::Error& e) {
    return cli.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
