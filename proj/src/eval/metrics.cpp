#include "plateflow/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>

#include "plateflow/detect/box_ops.hpp"
#include "plateflow/encoding.hpp"

namespace plateflow::eval {

EditCounts levenshtein(std::u32string_view ref, std::u32string_view hyp) {
  // Each cell holds (cost, matches) of the best alignment of the prefixes.
  struct Cell {
    int cost, matches;
  };
  auto better = [](Cell a, Cell b) { return a.cost < b.cost || (a.cost == b.cost && a.matches > b.matches); };
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<Cell> prev(m + 1), cur(m + 1);
  for (std::size_t j = 0; j <= m; ++j) prev[j] = {static_cast<int>(j), 0};
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = {static_cast<int>(i), 0};
    for (std::size_t j = 1; j <= m; ++j) {
      const bool same = ref[i - 1] == hyp[j - 1];
      Cell best{prev[j - 1].cost + (same ? 0 : 1), prev[j - 1].matches + (same ? 1 : 0)};
      const Cell del{prev[j].cost + 1, prev[j].matches};
      const Cell ins{cur[j - 1].cost + 1, cur[j - 1].matches};
      if (better(del, best)) best = del;
      if (better(ins, best)) best = ins;
      cur[j] = best;
    }
    std::swap(prev, cur);
  }
  // distance = S+I+D, |ref| = M+S+D, |hyp| = M+S+I fix S, I and D once distance and M are known.
  EditCounts out;
  out.distance = prev[m].cost;
  out.matches = prev[m].matches;
  out.substitutions = static_cast<int>(n + m) - 2 * out.matches - out.distance;
  out.deletions = static_cast<int>(n) - out.matches - out.substitutions;
  out.insertions = static_cast<int>(m) - out.matches - out.substitutions;
  return out;
}

EditCounts levenshtein(const std::string& ref, const std::string& hyp) {
  return levenshtein(utf8_decode(ref), utf8_decode(hyp));
}

Prf ocr_prf(const std::string& ref, const std::string& hyp) {
  const auto r = utf8_decode(ref), h = utf8_decode(hyp);
  if (r.empty() && h.empty()) return {1, 1, 1};
  if (r.empty() || h.empty()) return {0, 0, 0};
  const auto c = levenshtein(r, h);
  Prf out;
  out.precision = static_cast<double>(c.matches) / static_cast<double>(h.size());
  out.recall = static_cast<double>(c.matches) / static_cast<double>(r.size());
  const double sum = out.precision + out.recall;
  out.f1 = sum > 0 ? 2 * out.precision * out.recall / sum : 0;
  return out;
}

double round1(double value) { return std::round(value * 10.0) / 10.0; }

double detection_rate(int detected, int total) {
  if (total < 1) throw EvalError("detection rate needs at least one annotated instance");
  if (detected < 0 || detected > total) throw EvalError("detected count out of range");
  return round1(100.0 * detected / total);
}

double average_precision(std::span<const StreamDetections> streams, double iou_thr, AreaRange range) {
  if (!(iou_thr > 0 && iou_thr < 1)) throw EvalError("IoU threshold must be in (0, 1)");
  auto in_range = [&](const BoundingBox& b) { return b.area() >= range.min_area && b.area() < range.max_area; };

  struct Gt {
    BoundingBox box;
    bool counted;
    bool matched = false;
  };
  // Ground truth per (stream, frame).
  std::vector<std::map<std::int64_t, std::vector<Gt>>> gts(streams.size());
  std::size_t positives = 0;
  struct Ranked {
    std::size_t stream, order;
    const ScoredBox* det;
  };
  std::vector<Ranked> ranked;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    if (streams[s].annotation == nullptr) throw EvalError("detections without an annotation");
    for (const auto& plate : streams[s].annotation->plates) {
      for (const auto& span : plate.spans) {
        for (const auto& [frame, box] : span.boxes) {
          const bool counted = in_range(box);
          gts[s][frame].push_back({box, counted});
          positives += counted;
        }
      }
    }
    for (const auto& d : streams[s].detections) ranked.push_back({s, ranked.size(), &d});
  }
  if (positives == 0) throw EvalError("average precision needs at least one ground truth");
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const Ranked& a, const Ranked& b) { return a.det->score > b.det->score; });

  std::vector<double> precision, recall;
  std::size_t tp = 0, fp = 0;
  for (const auto& r : ranked) {
    Gt* best = nullptr;
    double best_iou = iou_thr;
    auto it = gts[r.stream].find(r.det->frame_index);
    if (it != gts[r.stream].end()) {
      for (auto& g : it->second) {
        if (g.matched) continue;
        const double v = detect::iou(r.det->box, g.box);
        if (v >= best_iou && (best == nullptr || v > best_iou)) {
          best = &g;
          best_iou = v;
        }
      }
    }
    if (best != nullptr) {
      best->matched = true;
      if (!best->counted) continue;
      ++tp;
    } else {
      if (!in_range(r.det->box)) continue;
      ++fp;
    }
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }
  // Precision envelope, then the area under the step curve at every recall change.
  for (std::size_t i = precision.size(); i-- > 1;) precision[i - 1] = std::max(precision[i - 1], precision[i]);
  double ap = 0, last_recall = 0;
  for (std::size_t i = 0; i < precision.size(); ++i) {
    ap += (recall[i] - last_recall) * precision[i];
    last_recall = recall[i];
  }
  return ap;
}

double average_precision(const std::vector<ScoredBox>& dets, const VideoAnnotation& gts, double iou_thr) {
  const StreamDetections one{&gts, dets};
  return average_precision(std::span(&one, 1), iou_thr);
}

ApSummary ap_summary(std::span<const StreamDetections> streams) {
  ApSummary out;
  double sum = 0;
  for (int k = 0; k < 10; ++k) {
    const double v = average_precision(streams, 0.5 + 0.05 * k);
    sum += v;
    if (k == 0) out.ap50 = v;
    if (k == 5) out.ap75 = v;
  }
  out.ap = sum / 10;
  auto ranged = [&](AreaRange range) -> std::optional<double> {
    double total = 0;
    for (int k = 0; k < 10; ++k) {
      try {
        total += average_precision(streams, 0.5 + 0.05 * k, range);
      } catch (const EvalError&) {
        return std::nullopt;
      }
    }
    return total / 10;
  };
  out.ap_small = ranged(kSmall);
  out.ap_medium = ranged(kMedium);
  out.ap_large = ranged(kLarge);
  return out;
}

}  // namespace plateflow::eval
