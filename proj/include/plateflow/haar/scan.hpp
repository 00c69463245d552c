#pragma once

#include <vector>

#include "plateflow/geometry.hpp"
#include "plateflow/haar/cascade.hpp"
#include "plateflow/image.hpp"

namespace plateflow::haar {

/// Sliding-window parameters. Defaults follow the deployed wake-up configuration
/// (scale step 1.1, 10 neighbours, 45 px minimum detection size).
struct ScanParams {
  double scale_factor = 1.1;
  int min_neighbors = 10;
  int min_size = 45;
  int step_stride = 2;
  double group_eps = 0.2;
};

void validate(const ScanParams& params);

/// Every accepted window before grouping, in scan order (scale, then row, then column).
std::vector<BoundingBox> detect_windows(const SummedAreaTable& sat, const CascadeModel& model,
                                        const ScanParams& params);

/// Multi-scale scan followed by rectangle grouping. Frames smaller than
/// min_size in either dimension yield an empty result.
std::vector<BoundingBox> scan(const GrayFrame& frame, const CascadeModel& model, const ScanParams& params);

/// Partitions rects into classes under the transitive closure of "every side
/// within eps x mean extent"; classes with at least min_neighbors members emit
/// their mean rectangle. Output follows the first appearance of each class.
std::vector<BoundingBox> group_rectangles(const std::vector<BoundingBox>& rects, int min_neighbors, double eps);

bool similar_rects(const BoundingBox& a, const BoundingBox& b, double eps);

}  // namespace plateflow::haar
