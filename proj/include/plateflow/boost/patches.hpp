#pragma once

#include <cstdint>
#include <vector>

#include "plateflow/boost/trainer.hpp"
#include "plateflow/geometry.hpp"
#include "plateflow/image.hpp"

namespace plateflow::boosting {

struct AnnotatedFrame {
  GrayFrame frame;
  std::vector<BoundingBox> plates;
};

/// Box-filter resample of `box` to out_w x out_h. Each output pixel is the mean of
/// the source pixels its footprint covers, matching what area-normalised haar
/// features see when the window is scaled instead of the image.
GrayFrame resample_area(const GrayFrame& src, const BoundingBox& box, int out_w, int out_h);

struct PatchSampling {
  int base_w = 24;
  int base_h = 12;
  std::uint64_t seed = 1;
  /// Relative jitter of positive boxes (position and size), uniform in +/- this fraction.
  double positive_jitter = 0.05;
  /// Negatives: random base-aspect boxes with IoU below this against every plate.
  double negative_max_iou = 0.1;
  int negative_min_height = 45;
  /// Share of negatives drawn from the neighbourhood of a plate rather than uniformly.
  double near_plate_fraction = 0.5;
};

/// Positives are ground-truth plate boxes (jittered) resampled to the base
/// window; negatives are random windows that avoid every plate.
TrainingSet sample_patches(const std::vector<AnnotatedFrame>& frames, std::size_t positives, std::size_t negatives,
                           const PatchSampling& options);

}  // namespace plateflow::boosting
