#include "plateflow/detect/blob.hpp"

namespace plateflow::detect {

Blob preprocess_blob(const Image& frame, const BlobParams& p) {
  if (frame.empty()) throw ImageError("preprocess_blob: empty frame");
  if (p.width < 1 || p.height < 1) throw ImageError("preprocess_blob: blob size must be positive");
  const Image resized = resize_bilinear(frame, p.width, p.height);
  Blob blob;
  blob.channels = resized.channels;
  blob.height = p.height;
  blob.width = p.width;
  blob.data.resize(static_cast<std::size_t>(blob.channels) * p.height * p.width);
  const std::size_t plane = static_cast<std::size_t>(p.height) * p.width;
  for (int c = 0; c < blob.channels; ++c) {
    const int src_c = (p.swap_rb && blob.channels == 3) ? 2 - c : c;
    float* out = blob.data.data() + c * plane;
    for (int y = 0; y < p.height; ++y) {
      for (int x = 0; x < p.width; ++x) {
        const double v = resized.at(x, y, src_c);
        out[static_cast<std::size_t>(y) * p.width + x] = static_cast<float>((v - p.mean[c]) * p.scale);
      }
    }
  }
  return blob;
}

}  // namespace plateflow::detect
