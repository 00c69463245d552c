#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "plateflow/image.hpp"

namespace plateflow::detect {

struct BlobParams {
  int width = 320;
  int height = 320;
  double scale = 0.00392;
  /// Subtracted per channel after the optional swap, in output channel order.
  std::array<double, 3> mean{0, 0, 0};
  bool swap_rb = true;
};

/// Planar channel-major tensor (channels x height x width).
struct Blob {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  float at(int c, int y, int x) const {
    return data[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
};

/// Bilinear resize to the blob size, optional R/B swap, then (v - mean) * scale.
Blob preprocess_blob(const Image& frame, const BlobParams& params);

}  // namespace plateflow::detect
