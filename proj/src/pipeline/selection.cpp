#include "plateflow/pipeline/selection.hpp"

#include <algorithm>
#include <cmath>

namespace plateflow::pipeline {

int assign_instance(SegmentationState& state, std::int64_t det_frame, int gap_frames) {
  if (gap_frames < 1) throw std::invalid_argument("gap_frames must be >= 1");
  if (state.last_detection_frame && det_frame < *state.last_detection_frame) {
    throw OrderingError("detection frame " + std::to_string(det_frame) + " precedes frame " +
                        std::to_string(*state.last_detection_frame));
  }
  if (!state.last_detection_frame || det_frame - *state.last_detection_frame >= gap_frames) {
    state.current_id = state.next_id++;
  }
  state.last_detection_frame = det_frame;
  return state.current_id;
}

bool ranks_before(const detect::Detection& a, const detect::Detection& b) {
  if (a.confidence != b.confidence) return a.confidence > b.confidence;
  return a.frame_index < b.frame_index;
}

bool qualifies(const std::vector<Candidate>& buffer, const detect::Detection& det, int k) {
  if (k < 1) return false;
  if (buffer.size() < static_cast<std::size_t>(k)) return true;
  return ranks_before(det, buffer.back().detection);
}

bool update_best_k(std::vector<Candidate>& buffer, Candidate cand, int k) {
  if (!qualifies(buffer, cand.detection, k)) return false;
  const auto pos = std::upper_bound(buffer.begin(), buffer.end(), cand.detection,
                                    [](const detect::Detection& d, const Candidate& c) {
                                      return ranks_before(d, c.detection);
                                    });
  buffer.insert(pos, std::move(cand));
  if (buffer.size() > static_cast<std::size_t>(k)) buffer.pop_back();
  return true;
}

Image crop_enlarge(const Image& frame, const BoundingBox& box, int min_dim) {
  if (frame.empty()) throw ImageError("crop_enlarge: empty frame");
  const auto c = box.clamped(frame.width, frame.height);
  const int x0 = static_cast<int>(std::lround(c.x));
  const int y0 = static_cast<int>(std::lround(c.y));
  const int x1 = static_cast<int>(std::lround(c.right()));
  const int y1 = static_cast<int>(std::lround(c.bottom()));
  if (x1 <= x0 || y1 <= y0) throw ImageError("crop_enlarge: box has no area inside the frame");
  Image out = crop(frame, x0, y0, x1 - x0, y1 - y0);
  const int short_side = std::min(out.width, out.height);
  if (short_side >= min_dim) return out;
  const double scale = static_cast<double>(min_dim) / short_side;
  const int w = std::max(1, static_cast<int>(std::lround(out.width * scale)));
  const int h = std::max(1, static_cast<int>(std::lround(out.height * scale)));
  return resize_bilinear(out, w, h);
}

}  // namespace plateflow::pipeline
