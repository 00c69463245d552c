#include "plateflow/haar/integral_image.hpp"

#include <string>

namespace plateflow::haar {

SummedAreaTable::SummedAreaTable(const GrayFrame& frame)
    : width_(frame.width),
      height_(frame.height),
      table_(static_cast<std::size_t>(frame.width + 1) * (frame.height + 1), 0) {
  if (!frame.valid()) throw std::invalid_argument("integral_image: invalid frame");
  const int s = stride();
  for (int y = 0; y < height_; ++y) {
    std::int64_t row_sum = 0;
    const std::int64_t* above = &table_[static_cast<std::size_t>(y) * s];
    std::int64_t* current = &table_[static_cast<std::size_t>(y + 1) * s];
    for (int x = 0; x < width_; ++x) {
      row_sum += frame.at(x, y);
      current[x + 1] = above[x + 1] + row_sum;
    }
  }
}

std::int64_t SummedAreaTable::rect_sum(const IntRect& r) const {
  if (r.x < 0 || r.y < 0 || r.w < 0 || r.h < 0 || r.x + r.w > width_ || r.y + r.h > height_) {
    throw BoundsError("rect (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," + std::to_string(r.w) + "," +
                      std::to_string(r.h) + ") outside " + std::to_string(width_) + "x" + std::to_string(height_));
  }
  return rect_sum_unchecked(r.x, r.y, r.w, r.h);
}

SummedAreaTable integral_image(const GrayFrame& frame) { return SummedAreaTable(frame); }

std::int64_t rect_sum(const SummedAreaTable& sat, const IntRect& rect) { return sat.rect_sum(rect); }

}  // namespace plateflow::haar
