#include "plateflow/detect/box_ops.hpp"

#include <algorithm>

namespace plateflow::detect {

double iou(const BoundingBox& a, const BoundingBox& b) {
  const double ix = std::min(a.right(), b.right()) - std::max(a.x, b.x);
  const double iy = std::min(a.bottom(), b.bottom()) - std::max(a.y, b.y);
  if (ix <= 0 || iy <= 0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.area() + b.area() - inter;
  return uni > 0 ? std::clamp(inter / uni, 0.0, 1.0) : 0.0;
}

std::vector<Detection> nms(std::vector<Detection> dets, double score_thr, double iou_thr) {
  std::erase_if(dets, [score_thr](const Detection& d) { return d.confidence < score_thr; });
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.box.y != b.box.y) return a.box.y < b.box.y;
    return a.box.x < b.box.x;
  });
  std::vector<Detection> kept;
  std::vector<char> suppressed(dets.size(), 0);
  for (std::size_t i = 0; i < dets.size(); ++i) {
    if (suppressed[i]) continue;
    kept.push_back(dets[i]);
    for (std::size_t j = i + 1; j < dets.size(); ++j) {
      if (!suppressed[j] && iou(dets[i].box, dets[j].box) > iou_thr) suppressed[j] = 1;
    }
  }
  return kept;
}

}  // namespace plateflow::detect
