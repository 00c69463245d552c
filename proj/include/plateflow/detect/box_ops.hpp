#pragma once

#include <cstdint>
#include <vector>

#include "plateflow/geometry.hpp"

namespace plateflow::detect {

/// Scored plate hypothesis in frame coordinates.
struct Detection {
  BoundingBox box;
  double confidence = 0;
  std::int64_t frame_index = 0;
  bool operator==(const Detection&) const = default;
};

/// Intersection over union; 0 for disjoint or empty boxes.
double iou(const BoundingBox& a, const BoundingBox& b);

/// Greedy non-maximum suppression. Detections below score_thr are dropped; a kept
/// detection suppresses every remaining one with iou > iou_thr. Equal confidences
/// are ordered by y, then x. Output is sorted by confidence descending.
std::vector<Detection> nms(std::vector<Detection> dets, double score_thr, double iou_thr);

}  // namespace plateflow::detect
