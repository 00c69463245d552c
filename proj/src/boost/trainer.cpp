#include "plateflow/boost/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "plateflow/boost/stump.hpp"
#include "plateflow/haar/integral_image.hpp"

namespace plateflow::boosting {

using haar::HaarFeature;
using haar::HaarKind;

void validate(const StageTargets& t) {
  if (!(t.min_stage_tpr > 0 && t.min_stage_tpr <= 1)) throw std::invalid_argument("min_stage_tpr must be in (0, 1]");
  if (!(t.max_stage_fpr > 0 && t.max_stage_fpr < 1)) throw std::invalid_argument("max_stage_fpr must be in (0, 1)");
  if (t.max_stumps_per_stage < 1) throw std::invalid_argument("max_stumps_per_stage must be >= 1");
  if (t.max_stages < 1) throw std::invalid_argument("max_stages must be >= 1");
}

std::vector<HaarFeature> generate_feature_pool(int base_w, int base_h, int stride, int min_size) {
  if (stride < 1) throw std::invalid_argument("feature stride must be >= 1");
  std::vector<HaarFeature> pool;
  for (auto kind : {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical, HaarKind::ThreeRectHorizontal,
                    HaarKind::ThreeRectVertical, HaarKind::FourRectChecker}) {
    const auto [nx, ny] = haar::divisions(kind);
    const int step_w = std::lcm(nx, stride);
    const int step_h = std::lcm(ny, stride);
    const int first_w = std::max(step_w, (std::max(min_size, 2) + step_w - 1) / step_w * step_w);
    const int first_h = std::max(step_h, (std::max(min_size, 2) + step_h - 1) / step_h * step_h);
    for (int w = first_w; w <= base_w; w += step_w) {
      for (int h = first_h; h <= base_h; h += step_h) {
        for (int y = 0; y + h <= base_h; y += stride) {
          for (int x = 0; x + w <= base_w; x += stride) pool.push_back({kind, x, y, w, h});
        }
      }
    }
  }
  return pool;
}

FeatureMatrix::FeatureMatrix(const std::vector<HaarFeature>& features, int base_w, int base_h,
                             const std::vector<const GrayFrame*>& samples)
    : feature_count_(features.size()), sample_count_(samples.size()) {
  values_.resize(feature_count_ * sample_count_);
  order_.resize(feature_count_ * sample_count_);
  haar::CascadeModel holder;
  holder.base_w = base_w;
  holder.base_h = base_h;
  holder.features = features;
  holder.stages.push_back({});
  const haar::ScaledCascade compiled(holder, 1.0);
  for (std::size_t s = 0; s < sample_count_; ++s) {
    const GrayFrame& patch = *samples[s];
    if (patch.width != base_w || patch.height != base_h) {
      throw std::invalid_argument("training patch does not match the base window size");
    }
    const haar::SummedAreaTable sat(patch);
    for (std::size_t f = 0; f < feature_count_; ++f) {
      values_[f * sample_count_ + s] = static_cast<float>(compiled.feature_value(sat, static_cast<int>(f), 0, 0));
    }
  }
  for (std::size_t f = 0; f < feature_count_; ++f) {
    auto* ord = order_.data() + f * sample_count_;
    const float* vals = values_.data() + f * sample_count_;
    std::iota(ord, ord + sample_count_, 0u);
    std::stable_sort(ord, ord + sample_count_, [vals](std::uint32_t a, std::uint32_t b) { return vals[a] < vals[b]; });
  }
}

double stage_score(const haar::Stage& stage, const FeatureMatrix& matrix, std::size_t sample) {
  double score = 0;
  for (const auto& s : stage.stumps) {
    score += s.alpha * s.predict(matrix.value(static_cast<std::size_t>(s.feature_id), sample));
  }
  return score;
}

double threshold_for_tpr(std::vector<double> positive_scores, double min_tpr) {
  if (positive_scores.empty()) return -std::numeric_limits<double>::infinity();
  std::sort(positive_scores.begin(), positive_scores.end(), std::greater<>());
  const auto n = positive_scores.size();
  auto need = static_cast<std::size_t>(std::ceil(min_tpr * static_cast<double>(n) - 1e-9));
  need = std::clamp<std::size_t>(need, 1, n);
  return positive_scores[need - 1];
}

StageResult train_stage(const FeatureMatrix& matrix, std::span<const int> labels,
                        std::span<const std::uint32_t> active, const StageTargets& targets,
                        const std::optional<std::vector<double>>& carry_weights) {
  validate(targets);
  if (matrix.feature_count() == 0) throw std::invalid_argument("train_stage: empty feature list");
  if (labels.size() != matrix.sample_count()) throw std::invalid_argument("train_stage: label count mismatch");
  const std::size_t n = matrix.sample_count();

  std::vector<char> is_active(n, 0);
  std::size_t n_pos = 0, n_neg = 0;
  for (auto i : active) {
    is_active[i] = 1;
    (labels[i] > 0 ? n_pos : n_neg)++;
  }
  if (n_pos == 0 || n_neg == 0) throw std::invalid_argument("train_stage: need positives and negatives");

  // Weights live in matrix-sample space; inactive samples keep weight 0.
  std::vector<double> weights(n, 0.0);
  if (carry_weights) {
    if (carry_weights->size() != active.size()) throw std::invalid_argument("train_stage: carry weight size mismatch");
    double total = 0;
    for (std::size_t k = 0; k < active.size(); ++k) total += (*carry_weights)[k];
    if (!(total > 0)) throw std::invalid_argument("train_stage: carry weights must be positive");
    for (std::size_t k = 0; k < active.size(); ++k) weights[active[k]] = (*carry_weights)[k] / total;
  } else {
    for (auto i : active) weights[i] = labels[i] > 0 ? 0.5 / n_pos : 0.5 / n_neg;
  }

  // Per-feature sorted order restricted to the active samples.
  const std::size_t m = active.size();
  std::vector<std::uint32_t> sub_order(matrix.feature_count() * m);
  for (std::size_t f = 0; f < matrix.feature_count(); ++f) {
    std::size_t k = 0;
    for (auto i : matrix.order(f)) {
      if (is_active[i]) sub_order[f * m + k++] = i;
    }
  }

  StageResult result;
  std::vector<double> score(n, 0.0);
  std::vector<int> prediction(n, 0);
  for (int round = 0; round < targets.max_stumps_per_stage; ++round) {
    StumpCandidate best{0, 1, 2.0};
    std::size_t best_feature = 0;
    for (std::size_t f = 0; f < matrix.feature_count(); ++f) {
      const auto cand = search_sorted<float>(matrix.row(f), std::span(sub_order.data() + f * m, m), labels, weights);
      if (cand.error < best.error) {
        best = cand;
        best_feature = f;
      }
    }
    if (best.error >= 0.5) break;

    const double alpha = alpha_for_error(best.error);
    const haar::Stump stump{static_cast<int>(best_feature), best.threshold, best.polarity, alpha};
    double total = 0;
    for (auto i : active) {
      prediction[i] = stump.predict(matrix.value(best_feature, i));
      weights[i] *= std::exp(-alpha * labels[i] * prediction[i]);
      total += weights[i];
      score[i] += alpha * prediction[i];
    }
    double reweighted = 0;
    for (auto i : active) {
      weights[i] /= total;
      if (prediction[i] != labels[i]) reweighted += weights[i];
    }
    result.stage.stumps.push_back(stump);
    result.stump_errors.push_back(best.error);
    result.reweighted_errors.push_back(reweighted);

    std::vector<double> pos_scores;
    pos_scores.reserve(n_pos);
    for (auto i : active) {
      if (labels[i] > 0) pos_scores.push_back(score[i]);
    }
    result.stage.stage_threshold = threshold_for_tpr(std::move(pos_scores), targets.min_stage_tpr);
    std::size_t false_pos = 0;
    for (auto i : active) {
      if (labels[i] < 0 && score[i] >= result.stage.stage_threshold) ++false_pos;
    }
    if (static_cast<double>(false_pos) / n_neg <= targets.max_stage_fpr) break;
  }

  if (result.stage.stumps.empty()) result.stage.stage_threshold = threshold_for_tpr({0.0}, 1.0);
  std::size_t tp = 0, fp = 0;
  for (auto i : active) {
    const bool pass = score[i] >= result.stage.stage_threshold;
    if (pass) (labels[i] > 0 ? tp : fp)++;
  }
  result.tpr = static_cast<double>(tp) / n_pos;
  result.fpr = static_cast<double>(fp) / n_neg;
  result.weights.reserve(m);
  for (auto i : active) result.weights.push_back(weights[i]);
  return result;
}

StageResult train_stage(const TrainingSet& train, const std::vector<HaarFeature>& features,
                        const StageTargets& targets, const std::optional<std::vector<double>>& carry_weights,
                        int base_w, int base_h) {
  if (train.positives.empty() || train.negatives.empty()) {
    throw std::invalid_argument("train_stage: training set needs positives and negatives");
  }
  std::vector<const GrayFrame*> samples;
  std::vector<int> labels;
  for (const auto& p : train.positives) {
    samples.push_back(&p);
    labels.push_back(1);
  }
  for (const auto& p : train.negatives) {
    samples.push_back(&p);
    labels.push_back(-1);
  }
  const FeatureMatrix matrix(features, base_w, base_h, samples);
  std::vector<std::uint32_t> active(samples.size());
  std::iota(active.begin(), active.end(), 0u);
  return train_stage(matrix, labels, active, targets, carry_weights);
}

CascadeTrainingResult train_cascade(const TrainingSet& train, const StageTargets& targets,
                                    const CascadeTrainingOptions& options) {
  validate(targets);
  if (train.positives.empty()) throw std::invalid_argument("train_cascade: no positive patches");
  CascadeTrainingResult result;
  result.model.base_w = options.base_w;
  result.model.base_h = options.base_h;

  if (train.negatives.empty()) {
    result.model.stages.push_back({{}, -std::numeric_limits<double>::infinity()});
    result.permissive_warning = true;
    result.training_tpr = 1.0;
    return result;
  }

  result.model.features =
      generate_feature_pool(options.base_w, options.base_h, options.feature_stride, options.feature_min_size);
  const std::size_t n_pos = train.positives.size();
  const std::size_t n_neg_total = train.negatives.size();
  std::vector<haar::SummedAreaTable> pos_sat;
  pos_sat.reserve(n_pos);
  for (const auto& p : train.positives) pos_sat.emplace_back(p);

  // Pool indices into train.negatives, kept in input order.
  std::vector<std::uint32_t> pool(n_neg_total);
  std::iota(pool.begin(), pool.end(), 0u);
  std::vector<char> positive_alive(n_pos, 1);
  const double fpr_goal = std::pow(targets.max_stage_fpr, targets.max_stages);

  for (int s = 0; s < targets.max_stages && !pool.empty(); ++s) {
    std::size_t n_train_neg = pool.size();
    if (options.max_stage_negatives > 0) n_train_neg = std::min(n_train_neg, options.max_stage_negatives);
    std::vector<const GrayFrame*> samples;
    std::vector<int> labels;
    samples.reserve(n_pos + n_train_neg);
    for (const auto& p : train.positives) {
      samples.push_back(&p);
      labels.push_back(1);
    }
    for (std::size_t k = 0; k < n_train_neg; ++k) {
      samples.push_back(&train.negatives[pool[k]]);
      labels.push_back(-1);
    }
    std::vector<std::uint32_t> active(samples.size());
    std::iota(active.begin(), active.end(), 0u);
    auto stage = [&] {
      const FeatureMatrix matrix(result.model.features, options.base_w, options.base_h, samples);
      return train_stage(matrix, labels, active, targets);
    }();
    result.model.stages.push_back(std::move(stage.stage));

    const haar::ScaledCascade compiled(result.model, 1.0);
    const auto idx = result.model.stages.size() - 1;
    const double thr = result.model.stages.back().stage_threshold;
    std::vector<std::uint32_t> survivors;
    for (auto i : pool) {
      const haar::SummedAreaTable sat(train.negatives[i]);
      if (compiled.stage_score(sat, idx, 0, 0) >= thr) survivors.push_back(i);
    }
    for (std::size_t i = 0; i < n_pos; ++i) {
      if (positive_alive[i] && compiled.stage_score(pos_sat[i], idx, 0, 0) < thr) positive_alive[i] = 0;
    }
    const StageReport report{stage.tpr, stage.fpr, static_cast<int>(result.model.stages.back().stumps.size()),
                             pool.size(), survivors.size()};
    result.stages.push_back(report);
    if (options.on_stage) options.on_stage(s, report);

    const bool progressed = survivors.size() < pool.size();
    pool = std::move(survivors);
    if (!progressed) break;
    if (static_cast<double>(pool.size()) / n_neg_total <= fpr_goal) break;
  }
  result.training_fpr = static_cast<double>(pool.size()) / n_neg_total;
  result.training_tpr =
      static_cast<double>(std::count(positive_alive.begin(), positive_alive.end(), 1)) / static_cast<double>(n_pos);
  return result;
}

}  // namespace plateflow::boosting
