#pragma once

#include <algorithm>

namespace plateflow {

/// Axis-aligned box in frame pixel coordinates; (x, y) is the top-left corner.
struct BoundingBox {
  double x = 0;
  double y = 0;
  double w = 0;
  double h = 0;

  double right() const { return x + w; }
  double bottom() const { return y + h; }
  double area() const { return w * h; }
  bool valid() const { return w > 0 && h > 0; }

  BoundingBox clamped(double frame_w, double frame_h) const {
    const double x0 = std::clamp(x, 0.0, frame_w);
    const double y0 = std::clamp(y, 0.0, frame_h);
    const double x1 = std::clamp(right(), 0.0, frame_w);
    const double y1 = std::clamp(bottom(), 0.0, frame_h);
    return {x0, y0, x1 - x0, y1 - y0};
  }

  bool operator==(const BoundingBox&) const = default;
};

/// Integer rectangle, used for summed-area queries.
struct IntRect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const IntRect&) const = default;
};

}  // namespace plateflow
