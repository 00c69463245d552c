#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateflow/detect/box_ops.hpp"
#include "plateflow/image.hpp"

namespace plateflow::pipeline {

class OrderingError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Temporal instance segmentation over detection frames.
struct SegmentationState {
  std::optional<std::int64_t> last_detection_frame;
  int current_id = 0;
  int next_id = 1;
};

/// A detection at least gap_frames after the previous one (or the first one)
/// opens a new instance; otherwise it extends the current instance.
int assign_instance(SegmentationState& state, std::int64_t det_frame, int gap_frames);

struct Candidate {
  detect::Detection detection;
  Image crop;
  /// Relative to the stream output directory once persisted.
  std::string crop_path;
};

/// Total order used by the best-K buffer: higher confidence first, then earlier frame.
bool ranks_before(const detect::Detection& a, const detect::Detection& b);

/// True when `det` would enter a buffer of capacity k holding `buffer`.
bool qualifies(const std::vector<Candidate>& buffer, const detect::Detection& det, int k);

/// Inserts keeping the k best under ranks_before; evicts the lowest. Returns
/// whether the candidate was retained.
bool update_best_k(std::vector<Candidate>& buffer, Candidate cand, int k);

/// Crop of the box clamped to the frame, upscaled bilinearly so the short side
/// is at least min_dim. Edges are rounded to the nearest pixel.
Image crop_enlarge(const Image& frame, const BoundingBox& box, int min_dim);

}  // namespace plateflow::pipeline
