#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace plateflow {

/// 8-bit luminance raster, row-major. frame_index is the ordinal within its stream.
struct GrayFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
  std::int64_t frame_index = 0;

  GrayFrame() = default;
  GrayFrame(int w, int h, std::uint8_t fill = 0, std::int64_t index = 0);

  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }

  bool valid() const;
};

/// Interleaved 8-bit raster with 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0);

  bool empty() const { return width <= 0 || height <= 0; }
  std::uint8_t at(int x, int y, int c = 0) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t& at(int x, int y, int c = 0) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Image to_image(const GrayFrame& frame);

/// Luma conversion (BT.601 integer weights) for 3-channel input; copy for 1-channel.
GrayFrame to_gray(const Image& image, std::int64_t frame_index = 0);

/// Bilinear resize with pixel-center alignment. Output values are rounded to nearest.
Image resize_bilinear(const Image& src, int out_w, int out_h);

/// Bilinear sample of channel c at continuous coordinates (pixel centers at integer + 0.5).
double sample_bilinear(const Image& src, double x, double y, int c);

Image crop(const Image& src, int x, int y, int w, int h);

}  // namespace plateflow
