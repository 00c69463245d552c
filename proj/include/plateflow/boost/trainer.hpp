#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "plateflow/haar/cascade.hpp"
#include "plateflow/image.hpp"

namespace plateflow::boosting {

/// Base-window-sized patches.
struct TrainingSet {
  std::vector<GrayFrame> positives;
  std::vector<GrayFrame> negatives;
};

struct StageTargets {
  double min_stage_tpr = 0.995;
  double max_stage_fpr = 0.5;
  int max_stumps_per_stage = 50;
  int max_stages = 10;
};

void validate(const StageTargets& targets);

/// All five haar kinds over the base window: positions and sizes on a `stride`
/// grid, sizes at least `min_size` and divisible by the kind's cell count.
std::vector<haar::HaarFeature> generate_feature_pool(int base_w, int base_h, int stride = 2, int min_size = 4);

/// Feature responses for every (feature, sample) pair with a per-feature
/// ascending sample order. Rows are features.
class FeatureMatrix {
 public:
  FeatureMatrix(const std::vector<haar::HaarFeature>& features, int base_w, int base_h,
                const std::vector<const GrayFrame*>& samples);

  std::size_t feature_count() const { return feature_count_; }
  std::size_t sample_count() const { return sample_count_; }
  std::span<const float> row(std::size_t feature) const {
    return {values_.data() + feature * sample_count_, sample_count_};
  }
  std::span<const std::uint32_t> order(std::size_t feature) const {
    return {order_.data() + feature * sample_count_, sample_count_};
  }
  float value(std::size_t feature, std::size_t sample) const { return values_[feature * sample_count_ + sample]; }

 private:
  std::size_t feature_count_ = 0;
  std::size_t sample_count_ = 0;
  std::vector<float> values_;
  std::vector<std::uint32_t> order_;
};

struct StageResult {
  haar::Stage stage;
  double tpr = 0;
  double fpr = 0;
  /// Sample weights after the last boosting round, in input order.
  std::vector<double> weights;
  /// Weighted error of each chosen stump measured under the weights produced by
  /// its own reweighting step (0.5 whenever the stump's error was non-zero).
  std::vector<double> reweighted_errors;
  /// Raw weighted error of each chosen stump.
  std::vector<double> stump_errors;
};

/// alpha-weighted stump vote for one sample.
double stage_score(const haar::Stage& stage, const FeatureMatrix& matrix, std::size_t sample);

/// Threshold accepting at least ceil(min_tpr * n) of the given positive scores:
/// the largest value that still reaches that fraction.
double threshold_for_tpr(std::vector<double> positive_scores, double min_tpr);

/// One discrete-AdaBoost stage over the samples listed in `active` (indices into
/// `matrix`), with labels given per matrix sample.
StageResult train_stage(const FeatureMatrix& matrix, std::span<const int> labels,
                        std::span<const std::uint32_t> active, const StageTargets& targets,
                        const std::optional<std::vector<double>>& carry_weights = std::nullopt);

/// Convenience overload that builds the feature matrix from a training set.
StageResult train_stage(const TrainingSet& train, const std::vector<haar::HaarFeature>& features,
                        const StageTargets& targets,
                        const std::optional<std::vector<double>>& carry_weights = std::nullopt, int base_w = 24,
                        int base_h = 12);

struct StageReport {
  double tpr = 0;
  double fpr = 0;
  int stumps = 0;
  std::size_t negatives_in = 0;
  std::size_t negatives_out = 0;
};

struct CascadeTrainingResult {
  haar::CascadeModel model;
  std::vector<StageReport> stages;
  /// Set when no negatives were available and a single permissive stage was emitted.
  bool permissive_warning = false;
  double training_fpr = 0;
  double training_tpr = 0;
};

struct CascadeTrainingOptions {
  int base_w = 24;
  int base_h = 12;
  int feature_stride = 2;
  int feature_min_size = 4;
  /// Caps the negatives each stage trains on (the first survivors of the pool);
  /// 0 trains on the whole pool. Rejection filtering always covers the whole pool.
  std::size_t max_stage_negatives = 0;
  /// Reports per-stage progress.
  std::function<void(int stage, const StageReport&)> on_stage;
};

/// Trains stages sequentially; negatives rejected by the cascade so far are
/// dropped from the pool after every stage. Stops at max_stages, an empty pool,
/// or cumulative training fpr <= max_stage_fpr ^ max_stages.
CascadeTrainingResult train_cascade(const TrainingSet& train, const StageTargets& targets,
                                    const CascadeTrainingOptions& options = {});

}  // namespace plateflow::boosting
