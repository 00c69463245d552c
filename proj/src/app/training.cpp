#include "plateflow/app/training.hpp"

#include <algorithm>

#include "plateflow/app/config.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/synth/generator.hpp"

namespace plateflow::app {

SynthTrainingSpec synth_training_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw ConfigError("training spec must be a JSON object");
  SynthTrainingSpec s;
  try {
    s.streams = doc.value("streams", s.streams);
    s.seed = doc.value("seed", s.seed);
    s.frame_step = doc.value("frame_step", s.frame_step);
    s.positives = doc.value("positives", s.positives);
    s.negatives = doc.value("negatives", s.negatives);
    s.sampling.seed = doc.value("patch_seed", s.sampling.seed);
    s.sampling.near_plate_fraction = doc.value("near_plate_fraction", s.sampling.near_plate_fraction);
    s.targets.min_stage_tpr = doc.value("min_stage_tpr", s.targets.min_stage_tpr);
    s.targets.max_stage_fpr = doc.value("max_stage_fpr", s.targets.max_stage_fpr);
    s.targets.max_stumps_per_stage = doc.value("max_stumps_per_stage", s.targets.max_stumps_per_stage);
    s.targets.max_stages = doc.value("max_stages", s.targets.max_stages);
    s.max_stage_negatives = doc.value("max_stage_negatives", s.max_stage_negatives);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training spec: ") + e.what());
  }
  if (s.streams < 1 || s.frame_step < 1 || s.positives < 1) throw ConfigError("training spec out of range");
  return s;
}

boosting::TrainingSet synth_training_set(const SynthTrainingSpec& spec) {
  std::vector<boosting::AnnotatedFrame> frames;
  for (int i = 0; i < spec.streams; ++i) {
    auto more = synth::annotated_frames(
        synth::random_stream_spec("train-" + std::to_string(i), spec.seed + static_cast<std::uint64_t>(i)),
        spec.frame_step);
    std::move(more.begin(), more.end(), std::back_inserter(frames));
  }
  return boosting::sample_patches(frames, spec.positives, spec.negatives, spec.sampling);
}

boosting::CascadeTrainingResult train_gate(const SynthTrainingSpec& spec,
                                           std::function<void(int, const boosting::StageReport&)> on_stage) {
  boosting::CascadeTrainingOptions o;
  o.base_w = spec.sampling.base_w;
  o.base_h = spec.sampling.base_h;
  o.max_stage_negatives = spec.max_stage_negatives;
  o.on_stage = std::move(on_stage);
  return boosting::train_cascade(synth_training_set(spec), spec.targets, o);
}

std::vector<GrayFrame> load_patch_dir(const std::filesystem::path& dir, int base_w, int base_h) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError(dir.string() + " is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    const auto ext = e.path().extension();
    if (ext == ".pgm" || ext == ".png") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<GrayFrame> out;
  for (const auto& f : files) {
    GrayFrame g = f.extension() == ".pgm" ? io::read_pgm(f) : to_gray(io::read_png(f));
    if (g.width != base_w || g.height != base_h) {
      g = boosting::resample_area(g, {0, 0, double(g.width), double(g.height)}, base_w, base_h);
    }
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace plateflow::app
