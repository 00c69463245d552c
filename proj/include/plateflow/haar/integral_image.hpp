#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "plateflow/geometry.hpp"
#include "plateflow/image.hpp"

namespace plateflow::haar {

class BoundsError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// (width+1) x (height+1) prefix-sum grid; entry (x, y) is the sum of all pixels
/// with coordinates strictly less than (x, y). Immutable once built.
class SummedAreaTable {
 public:
  SummedAreaTable() = default;
  explicit SummedAreaTable(const GrayFrame& frame);

  int width() const { return width_; }
  int height() const { return height_; }
  int stride() const { return width_ + 1; }

  std::int64_t at(int x, int y) const { return table_[static_cast<std::size_t>(y) * stride() + x]; }
  const std::int64_t* data() const { return table_.data(); }

  /// Bounds-checked rectangle sum via four lookups.
  std::int64_t rect_sum(const IntRect& r) const;

  std::int64_t rect_sum_unchecked(int x, int y, int w, int h) const {
    const std::int64_t* row0 = table_.data() + static_cast<std::size_t>(y) * stride();
    const std::int64_t* row1 = row0 + static_cast<std::size_t>(h) * stride();
    return row1[x + w] - row1[x] - row0[x + w] + row0[x];
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> table_;
};

SummedAreaTable integral_image(const GrayFrame& frame);

std::int64_t rect_sum(const SummedAreaTable& sat, const IntRect& rect);

}  // namespace plateflow::haar
