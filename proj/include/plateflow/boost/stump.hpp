#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace plateflow::boosting {

/// Best single-threshold split found by exhaustive search.
struct StumpCandidate {
  double threshold = 0;
  int polarity = 1;
  double error = 0;
};

/// Exhaustive weighted stump search. Thresholds are midpoints between adjacent
/// distinct sorted values, or +/-infinity at the extremes. Ties resolve to the
/// lowest threshold, then polarity +1. labels are +1 / -1.
StumpCandidate train_stump(std::span<const double> values, std::span<const int> labels,
                           std::span<const double> weights);

/// Same search over samples visited in ascending value order (`order` indexes
/// into values/labels/weights). Used by the trainer with presorted features.
template <typename Value>
StumpCandidate search_sorted(std::span<const Value> values, std::span<const std::uint32_t> order,
                             std::span<const int> labels, std::span<const double> weights);

/// Discrete AdaBoost vote weight, with error clamped at 1e-10.
double alpha_for_error(double error);

inline constexpr double kErrorFloor = 1e-10;

}  // namespace plateflow::boosting
