#pragma once

#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateflow/eval/annotation.hpp"
#include "plateflow/geometry.hpp"

namespace plateflow::eval {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EditCounts {
  int distance = 0;
  int substitutions = 0;
  int insertions = 0;
  int deletions = 0;
  int matches = 0;
  bool operator==(const EditCounts&) const = default;
};

/// Unit-cost edit distance; among minimum-cost alignments the one with the most matches.
EditCounts levenshtein(std::u32string_view ref, std::u32string_view hyp);
/// UTF-8 convenience: compares codepoints.
EditCounts levenshtein(const std::string& ref, const std::string& hyp);

struct Prf {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

/// Fractions in [0, 1] over codepoints. Both empty scores (1, 1, 1); exactly one empty scores zero.
Prf ocr_prf(const std::string& ref, const std::string& hyp);

double round1(double value);

/// Percent to one decimal.
double detection_rate(int detected, int total);

struct ScoredBox {
  std::int64_t frame_index = 0;
  BoundingBox box;
  double score = 0;
};

struct StreamDetections {
  const VideoAnnotation* annotation = nullptr;
  std::vector<ScoredBox> detections;
};

/// Ground-truth box area bounds [min_area, max_area) for the small/medium/large split.
struct AreaRange {
  double min_area = 0;
  double max_area = 1e300;
};

inline constexpr AreaRange kAllAreas{};
inline constexpr AreaRange kSmall{0, 32.0 * 32.0};
inline constexpr AreaRange kMedium{32.0 * 32.0, 96.0 * 96.0};
inline constexpr AreaRange kLarge{96.0 * 96.0, 1e300};

/// All-points interpolated AP. Detections are matched greedily by descending score to the
/// highest-IoU unmatched ground truth of the same frame. With an area range, ground truths
/// outside it and detections matched to them are ignored, as are unmatched detections outside it.
double average_precision(std::span<const StreamDetections> streams, double iou_thr, AreaRange range = kAllAreas);
double average_precision(const std::vector<ScoredBox>& dets, const VideoAnnotation& gts, double iou_thr);

struct ApSummary {
  double ap = 0;    // mean over IoU 0.50:0.05:0.95
  double ap50 = 0;
  double ap75 = 0;
  std::optional<double> ap_small, ap_medium, ap_large;  // absent when the range has no ground truth
};

ApSummary ap_summary(std::span<const StreamDetections> streams);

}  // namespace plateflow::eval
