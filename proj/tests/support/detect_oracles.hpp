#pragma once

#include <random>
#include <vector>

#include "plateflow/detect/box_ops.hpp"

namespace oracle {

inline double brute_iou(const plateflow::BoundingBox& a, const plateflow::BoundingBox& b) {
  // Pixel-free closed form on the overlap interval of each axis.
  const double l = a.x > b.x ? a.x : b.x;
  const double r = a.right() < b.right() ? a.right() : b.right();
  const double t = a.y > b.y ? a.y : b.y;
  const double btm = a.bottom() < b.bottom() ? a.bottom() : b.bottom();
  if (r <= l || btm <= t) return 0;
  const double inter = (r - l) * (btm - t);
  return inter / (a.w * a.h + b.w * b.h - inter);
}

/// Repeated arg-max selection over the survivors; quadratic and obviously greedy.
inline std::vector<plateflow::detect::Detection> brute_nms(const std::vector<plateflow::detect::Detection>& in,
                                                           double score_thr, double iou_thr) {
  std::vector<plateflow::detect::Detection> live;
  for (const auto& d : in)
    if (!(d.confidence < score_thr)) live.push_back(d);
  std::vector<plateflow::detect::Detection> out;
  while (!live.empty()) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < live.size(); ++i) {
      const auto& a = live[i];
      const auto& b = live[best];
      const bool better = a.confidence > b.confidence ||
                          (a.confidence == b.confidence && (a.box.y < b.box.y || (a.box.y == b.box.y && a.box.x < b.box.x)));
      if (better) best = i;
    }
    const auto keep = live[best];
    out.push_back(keep);
    std::vector<plateflow::detect::Detection> rest;
    for (std::size_t i = 0; i < live.size(); ++i) {
      if (i != best && !(brute_iou(keep.box, live[i].box) > iou_thr)) rest.push_back(live[i]);
    }
    live = std::move(rest);
  }
  return out;
}

/// Clustered random boxes so suppression actually triggers.
inline std::vector<plateflow::detect::Detection> random_detections(std::mt19937& rng, int max_n) {
  std::uniform_int_distribution<int> count(0, max_n);
  std::uniform_real_distribution<double> center(40, 120), size(10, 60), jitter(-8, 8);
  std::uniform_int_distribution<int> conf_step(0, 20);
  const int n = count(rng);
  const double cx = center(rng), cy = center(rng);
  std::vector<plateflow::detect::Detection> dets;
  for (int i = 0; i < n; ++i) {
    const double w = size(rng), h = size(rng);
    // Coarse confidences produce ties; some land below 0.1.
    dets.push_back({{cx + jitter(rng) * (i % 3), cy + jitter(rng) * (i % 3), w, h}, conf_step(rng) / 20.0, 0});
  }
  return dets;
}

}  // namespace oracle
