#include "plateflow/boost/patches.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "plateflow/detect/box_ops.hpp"
#include "plateflow/haar/integral_image.hpp"

namespace plateflow::boosting {

GrayFrame resample_area(const GrayFrame& src, const BoundingBox& box, int out_w, int out_h) {
  const haar::SummedAreaTable sat(src);
  GrayFrame out(out_w, out_h);
  const double sx = box.w / out_w;
  const double sy = box.h / out_h;
  auto edge = [](double v, int limit) { return std::clamp(static_cast<int>(std::lround(v)), 0, limit); };
  for (int j = 0; j < out_h; ++j) {
    int y0 = edge(box.y + j * sy, src.height - 1);
    int y1 = std::max(y0 + 1, edge(box.y + (j + 1) * sy, src.height));
    for (int i = 0; i < out_w; ++i) {
      int x0 = edge(box.x + i * sx, src.width - 1);
      int x1 = std::max(x0 + 1, edge(box.x + (i + 1) * sx, src.width));
      const auto area = static_cast<std::int64_t>(x1 - x0) * (y1 - y0);
      const auto sum = sat.rect_sum_unchecked(x0, y0, x1 - x0, y1 - y0);
      out.at(i, j) = static_cast<std::uint8_t>((sum + area / 2) / area);
    }
  }
  return out;
}

TrainingSet sample_patches(const std::vector<AnnotatedFrame>& frames, std::size_t positives, std::size_t negatives,
                           const PatchSampling& options) {
  std::vector<std::pair<std::size_t, std::size_t>> plates;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    for (std::size_t p = 0; p < frames[f].plates.size(); ++p) plates.emplace_back(f, p);
  }
  if (positives > 0 && plates.empty()) throw std::invalid_argument("sample_patches: no annotated plates");
  if (negatives > 0 && frames.empty()) throw std::invalid_argument("sample_patches: no frames");

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> jitter(-options.positive_jitter, options.positive_jitter);
  TrainingSet set;
  set.positives.reserve(positives);
  for (std::size_t k = 0; k < positives; ++k) {
    // Every plate once when there is room, otherwise an even spread over all of them.
    std::size_t pick;
    if (positives <= plates.size()) {
      pick = k * plates.size() / positives;
    } else {
      pick = k < plates.size() ? k : rng() % plates.size();
    }
    const auto [f, p] = plates[pick];
    const auto& frame = frames[f].frame;
    const auto& gt = frames[f].plates[p];
    const double scale = 1.0 + jitter(rng);
    BoundingBox box{0, 0, gt.w * scale, gt.h * scale};
    box.x = gt.x + gt.w * 0.5 - box.w * 0.5 + jitter(rng) * gt.w;
    box.y = gt.y + gt.h * 0.5 - box.h * 0.5 + jitter(rng) * gt.h;
    set.positives.push_back(resample_area(frame, box.clamped(frame.width, frame.height), options.base_w,
                                          options.base_h));
  }

  const double aspect = static_cast<double>(options.base_w) / options.base_h;
  set.negatives.reserve(negatives);
  std::size_t attempts = 0;
  while (set.negatives.size() < negatives) {
    if (++attempts > negatives * 1000 + 1000) throw std::runtime_error("sample_patches: cannot place negatives");
    const bool near = !plates.empty() && std::uniform_real_distribution<double>(0, 1)(rng) < options.near_plate_fraction;
    const auto& af = near ? frames[plates[rng() % plates.size()].first] : frames[rng() % frames.size()];
    const auto& frame = af.frame;
    const double max_h = std::min<double>(frame.height, frame.width / aspect);
    const double min_h = std::min<double>(options.negative_min_height, max_h);
    BoundingBox box;
    if (near) {
      // Windows around a plate: vehicle body, bumper and partial plate views.
      const auto& gt = af.plates[rng() % af.plates.size()];
      const double h = std::clamp(gt.h * std::exp(std::uniform_real_distribution<double>(std::log(0.5), std::log(3.0))(rng)),
                                  min_h, max_h);
      const double w = h * aspect;
      const double cx = gt.x + gt.w * 0.5 + std::uniform_real_distribution<double>(-1.5, 1.5)(rng) * w;
      const double cy = gt.y + gt.h * 0.5 + std::uniform_real_distribution<double>(-1.5, 1.5)(rng) * h;
      box = {std::clamp(cx - w * 0.5, 0.0, frame.width - w), std::clamp(cy - h * 0.5, 0.0, frame.height - h), w, h};
    } else {
      // Log-uniform size so small windows (the bulk of a scan) dominate.
      const double h = std::exp(std::uniform_real_distribution<double>(std::log(min_h), std::log(max_h))(rng));
      const double w = h * aspect;
      box = {std::uniform_real_distribution<double>(0, frame.width - w)(rng),
             std::uniform_real_distribution<double>(0, frame.height - h)(rng), w, h};
    }
    const bool clear = std::all_of(af.plates.begin(), af.plates.end(), [&](const BoundingBox& gt) {
      return detect::iou(box, gt) < options.negative_max_iou;
    });
    if (!clear) continue;
    set.negatives.push_back(resample_area(frame, box, options.base_w, options.base_h));
  }
  return set;
}

}  // namespace plateflow::boosting
