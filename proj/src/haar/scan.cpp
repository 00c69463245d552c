#include "plateflow/haar/scan.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace plateflow::haar {

void validate(const ScanParams& params) {
  if (!(params.scale_factor > 1.0)) throw std::invalid_argument("scale_factor must be > 1");
  if (params.min_neighbors < 0) throw std::invalid_argument("min_neighbors must be >= 0");
  if (params.step_stride < 1) throw std::invalid_argument("step_stride must be >= 1");
  if (params.group_eps < 0) throw std::invalid_argument("group eps must be >= 0");
}

std::vector<BoundingBox> detect_windows(const SummedAreaTable& sat, const CascadeModel& model,
                                        const ScanParams& params) {
  validate(params);
  std::vector<BoundingBox> accepted;
  const int fw = sat.width();
  const int fh = sat.height();
  for (double scale = 1.0;; scale *= params.scale_factor) {
    const int win_w = static_cast<int>(std::lround(model.base_w * scale));
    const int win_h = static_cast<int>(std::lround(model.base_h * scale));
    if (win_w > fw || win_h > fh) break;
    if (win_w < params.min_size || win_h < params.min_size) continue;
    const ScaledCascade cascade(model, scale);
    for (int y = 0; y + win_h <= fh; y += params.step_stride) {
      for (int x = 0; x + win_w <= fw; x += params.step_stride) {
        if (cascade.evaluate(sat, x, y).accepted) {
          accepted.push_back({static_cast<double>(x), static_cast<double>(y), static_cast<double>(win_w),
                              static_cast<double>(win_h)});
        }
      }
    }
  }
  return accepted;
}

std::vector<BoundingBox> scan(const GrayFrame& frame, const CascadeModel& model, const ScanParams& params) {
  if (frame.width < params.min_size || frame.height < params.min_size) return {};
  const SummedAreaTable sat(frame);
  return group_rectangles(detect_windows(sat, model, params), params.min_neighbors, params.group_eps);
}

bool similar_rects(const BoundingBox& a, const BoundingBox& b, double eps) {
  const double dx = eps * (a.w + b.w) * 0.5;
  const double dy = eps * (a.h + b.h) * 0.5;
  return std::abs(a.x - b.x) <= dx && std::abs(a.right() - b.right()) <= dx && std::abs(a.y - b.y) <= dy &&
         std::abs(a.bottom() - b.bottom()) <= dy;
}

std::vector<BoundingBox> group_rectangles(const std::vector<BoundingBox>& rects, int min_neighbors, double eps) {
  if (eps < 0) throw std::invalid_argument("group_rectangles: eps must be >= 0");
  const std::size_t n = rects.size();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t i) {
    while (parent[i] != i) {
      parent[i] = parent[parent[i]];
      i = parent[i];
    }
    return i;
  };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (!similar_rects(rects[i], rects[j], eps)) continue;
      const std::size_t ri = find(i), rj = find(j);
      // Smaller root index wins so class order tracks first appearance.
      if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
    }
  }

  struct Accum {
    double x = 0, y = 0, w = 0, h = 0;
    int count = 0;
  };
  std::vector<Accum> classes(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& a = classes[find(i)];
    a.x += rects[i].x;
    a.y += rects[i].y;
    a.w += rects[i].w;
    a.h += rects[i].h;
    ++a.count;
  }
  std::vector<BoundingBox> out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& a = classes[i];
    if (a.count == 0 || a.count < min_neighbors) continue;
    out.push_back({a.x / a.count, a.y / a.count, a.w / a.count, a.h / a.count});
  }
  return out;
}

}  // namespace plateflow::haar
