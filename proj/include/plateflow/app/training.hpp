#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>

#include <json.hpp>

#include "plateflow/boost/patches.hpp"
#include "plateflow/boost/trainer.hpp"

namespace plateflow::app {

/// Gate training from generated streams.
struct SynthTrainingSpec {
  int streams = 6;
  std::uint64_t seed = 500;
  int frame_step = 5;
  std::size_t positives = 500;
  std::size_t negatives = 40000;
  boosting::PatchSampling sampling{.seed = 3};
  boosting::StageTargets targets{.max_stages = 20};
  std::size_t max_stage_negatives = 4000;
};

/// Keys: streams, seed, frame_step, positives, negatives, patch_seed, min_stage_tpr, max_stage_fpr,
/// max_stumps_per_stage, max_stages, max_stage_negatives, near_plate_fraction.
SynthTrainingSpec synth_training_from_json(const nlohmann::json& doc);

/// Training patches from streams random_stream_spec("train-<i>", seed + i).
boosting::TrainingSet synth_training_set(const SynthTrainingSpec& spec);

boosting::CascadeTrainingResult train_gate(const SynthTrainingSpec& spec,
                                           std::function<void(int, const boosting::StageReport&)> on_stage = {});

/// Every .pgm/.png file in the directory, converted to gray and area-resampled to base_w x base_h.
std::vector<GrayFrame> load_patch_dir(const std::filesystem::path& dir, int base_w = 24, int base_h = 12);

}  // namespace plateflow::app
