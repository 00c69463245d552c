#include "plateflow/boost/stump.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace plateflow::boosting {

template <typename Value>
StumpCandidate search_sorted(std::span<const Value> values, std::span<const std::uint32_t> order,
                             std::span<const int> labels, std::span<const double> weights) {
  const double inf = std::numeric_limits<double>::infinity();
  double pos_total = 0, neg_total = 0;
  for (std::uint32_t i : order) (labels[i] > 0 ? pos_total : neg_total) += weights[i];

  // Threshold at -inf: everything is "above".
  StumpCandidate best{-inf, 1, neg_total};
  if (pos_total < best.error) best = {-inf, -1, pos_total};

  double pos_below = 0, neg_below = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const std::uint32_t i = order[k];
    (labels[i] > 0 ? pos_below : neg_below) += weights[i];
    const bool last = k + 1 == order.size();
    const double v = static_cast<double>(values[i]);
    const double next = last ? inf : static_cast<double>(values[order[k + 1]]);
    if (!last && next == v) continue;
    const double threshold = last ? inf : 0.5 * (v + next);
    // polarity +1: positive iff value >= threshold
    const double err_pos = pos_below + (neg_total - neg_below);
    const double err_neg = neg_below + (pos_total - pos_below);
    if (err_pos < best.error) best = {threshold, 1, err_pos};
    if (err_neg < best.error) best = {threshold, -1, err_neg};
  }
  return best;
}

template StumpCandidate search_sorted<double>(std::span<const double>, std::span<const std::uint32_t>,
                                              std::span<const int>, std::span<const double>);
template StumpCandidate search_sorted<float>(std::span<const float>, std::span<const std::uint32_t>,
                                             std::span<const int>, std::span<const double>);

StumpCandidate train_stump(std::span<const double> values, std::span<const int> labels,
                           std::span<const double> weights) {
  if (values.size() != labels.size() || values.size() != weights.size()) {
    throw std::invalid_argument("train_stump: input lengths differ");
  }
  if (values.size() < 2) throw std::invalid_argument("train_stump: need at least two samples");
  for (int l : labels) {
    if (l != 1 && l != -1) throw std::invalid_argument("train_stump: labels must be +1 or -1");
  }
  for (double w : weights) {
    if (!(w > 0)) throw std::invalid_argument("train_stump: weights must be positive");
  }
  std::vector<std::uint32_t> order(values.size());
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) { return values[a] < values[b]; });
  return search_sorted<double>(values, order, labels, weights);
}

double alpha_for_error(double error) {
  const double e = std::clamp(error, kErrorFloor, 1.0 - kErrorFloor);
  return 0.5 * std::log((1.0 - e) / e);
}

}  // namespace plateflow::boosting
