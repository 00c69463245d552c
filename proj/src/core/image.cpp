#include "plateflow/image.hpp"

#include <algorithm>
#include <cmath>

namespace plateflow {

GrayFrame::GrayFrame(int w, int h, std::uint8_t fill, std::int64_t index)
    : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), frame_index(index) {
  if (w < 1 || h < 1) throw ImageError("GrayFrame dimensions must be positive");
}

bool GrayFrame::valid() const {
  return width >= 1 && height >= 1 &&
         data.size() == static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
}

Image::Image(int w, int h, int c, std::uint8_t fill)
    : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {
  if (w < 0 || h < 0) throw ImageError("negative image dimensions");
  if (c != 1 && c != 3) throw ImageError("images must have 1 or 3 channels");
}

Image to_image(const GrayFrame& frame) {
  Image out;
  out.width = frame.width;
  out.height = frame.height;
  out.channels = 1;
  out.pixels = frame.data;
  return out;
}

GrayFrame to_gray(const Image& image, std::int64_t frame_index) {
  if (image.empty()) throw ImageError("cannot convert an empty image");
  GrayFrame out(image.width, image.height, 0, frame_index);
  if (image.channels == 1) {
    out.data = image.pixels;
    return out;
  }
  const std::size_t n = static_cast<std::size_t>(image.width) * image.height;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned r = image.pixels[i * 3];
    const unsigned g = image.pixels[i * 3 + 1];
    const unsigned b = image.pixels[i * 3 + 2];
    out.data[i] = static_cast<std::uint8_t>((77 * r + 150 * g + 29 * b + 128) >> 8);
  }
  return out;
}

double sample_bilinear(const Image& src, double x, double y, int c) {
  const double fx = std::clamp(x - 0.5, 0.0, static_cast<double>(src.width - 1));
  const double fy = std::clamp(y - 0.5, 0.0, static_cast<double>(src.height - 1));
  const int x0 = static_cast<int>(fx);
  const int y0 = static_cast<int>(fy);
  const int x1 = std::min(x0 + 1, src.width - 1);
  const int y1 = std::min(y0 + 1, src.height - 1);
  const double ax = fx - x0;
  const double ay = fy - y0;
  const double top = src.at(x0, y0, c) * (1.0 - ax) + src.at(x1, y0, c) * ax;
  const double bottom = src.at(x0, y1, c) * (1.0 - ax) + src.at(x1, y1, c) * ax;
  return top * (1.0 - ay) + bottom * ay;
}

Image resize_bilinear(const Image& src, int out_w, int out_h) {
  if (src.empty()) throw ImageError("cannot resize an empty image");
  if (out_w < 1 || out_h < 1) throw ImageError("resize target must be positive");
  if (out_w == src.width && out_h == src.height) return src;
  Image out(out_w, out_h, src.channels);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    for (int x = 0; x < out_w; ++x) {
      for (int c = 0; c < src.channels; ++c) {
        const double v = sample_bilinear(src, (x + 0.5) * sx, (y + 0.5) * sy, c);
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

Image crop(const Image& src, int x, int y, int w, int h) {
  if (w <= 0 || h <= 0 || x < 0 || y < 0 || x + w > src.width || y + h > src.height) {
    throw ImageError("crop rectangle outside image");
  }
  Image out(w, h, src.channels);
  const std::size_t row = static_cast<std::size_t>(w) * src.channels;
  for (int r = 0; r < h; ++r) {
    const auto* from = &src.pixels[(static_cast<std::size_t>(y + r) * src.width + x) * src.channels];
    std::copy(from, from + row, &out.pixels[static_cast<std::size_t>(r) * row]);
  }
  return out;
}

}  // namespace plateflow
