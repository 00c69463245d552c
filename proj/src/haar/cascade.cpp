#include "plateflow/haar/cascade.hpp"

#include <cmath>

namespace plateflow::haar {

namespace {

struct Region {
  int x0, y0, x1, y1;  // half-open, window-relative, already scaled
  bool white;
};

// Splits the scaled feature rect into its white/black cells. Cell boundaries are
// rounded independently so neighbouring cells tile without gaps or overlap.
int scaled_regions(const HaarFeature& f, double scale, std::array<Region, 4>& out) {
  const auto [nx, ny] = divisions(f.kind);
  std::array<int, 4> xs{};
  std::array<int, 4> ys{};
  for (int i = 0; i <= nx; ++i) {
    xs[i] = static_cast<int>(std::lround((f.x + static_cast<double>(f.w) * i / nx) * scale));
  }
  for (int j = 0; j <= ny; ++j) {
    ys[j] = static_cast<int>(std::lround((f.y + static_cast<double>(f.h) * j / ny) * scale));
  }
  int count = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (xs[i + 1] <= xs[i] || ys[j + 1] <= ys[j]) {
        throw DegenerateFeatureError("feature collapses to zero area at scale " + std::to_string(scale));
      }
      bool white = true;
      switch (f.kind) {
        case HaarKind::TwoRectHorizontal:
        case HaarKind::TwoRectVertical:
          white = (i + j) == 0;
          break;
        case HaarKind::ThreeRectHorizontal:
          white = i != 1;
          break;
        case HaarKind::ThreeRectVertical:
          white = j != 1;
          break;
        case HaarKind::FourRectChecker:
          white = (i + j) % 2 == 0;
          break;
      }
      out[count++] = Region{xs[i], ys[j], xs[i + 1], ys[j + 1], white};
    }
  }
  return count;
}

}  // namespace

std::string_view to_string(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoRectHorizontal:
      return "two-rect-horizontal";
    case HaarKind::TwoRectVertical:
      return "two-rect-vertical";
    case HaarKind::ThreeRectHorizontal:
      return "three-rect-horizontal";
    case HaarKind::ThreeRectVertical:
      return "three-rect-vertical";
    case HaarKind::FourRectChecker:
      return "four-rect-checker";
  }
  return "unknown";
}

HaarKind haar_kind_from_string(std::string_view name) {
  for (auto k : {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical, HaarKind::ThreeRectHorizontal,
                 HaarKind::ThreeRectVertical, HaarKind::FourRectChecker}) {
    if (to_string(k) == name) return k;
  }
  throw ModelError("unknown haar feature kind '" + std::string(name) + "'");
}

std::array<int, 2> divisions(HaarKind kind) {
  switch (kind) {
    case HaarKind::TwoRectHorizontal:
      return {2, 1};
    case HaarKind::TwoRectVertical:
      return {1, 2};
    case HaarKind::ThreeRectHorizontal:
      return {3, 1};
    case HaarKind::ThreeRectVertical:
      return {1, 3};
    case HaarKind::FourRectChecker:
      return {2, 2};
  }
  return {1, 1};
}

bool feature_fits(const HaarFeature& f, int base_w, int base_h) {
  const auto [nx, ny] = divisions(f.kind);
  return f.x >= 0 && f.y >= 0 && f.w >= 2 && f.h >= 2 && f.w % nx == 0 && f.h % ny == 0 && f.x + f.w <= base_w &&
         f.y + f.h <= base_h;
}

void validate(const CascadeModel& model) {
  if (model.base_w < 2 || model.base_h < 2) throw ModelError("base window too small");
  if (model.stages.empty()) throw ModelError("cascade needs at least one stage");
  for (std::size_t i = 0; i < model.features.size(); ++i) {
    if (!feature_fits(model.features[i], model.base_w, model.base_h)) {
      throw ModelError("feature " + std::to_string(i) + " does not fit the base window");
    }
  }
  for (std::size_t s = 0; s < model.stages.size(); ++s) {
    for (const auto& stump : model.stages[s].stumps) {
      if (stump.feature_id < 0 || static_cast<std::size_t>(stump.feature_id) >= model.features.size()) {
        throw ModelError("stage " + std::to_string(s) + " references feature " + std::to_string(stump.feature_id) +
                         " out of range");
      }
      if (stump.polarity != 1 && stump.polarity != -1) throw ModelError("stump polarity must be +1 or -1");
    }
  }
}

double eval_feature(const SummedAreaTable& sat, const HaarFeature& f, int wx, int wy, double scale) {
  std::array<Region, 4> regions{};
  const int count = scaled_regions(f, scale, regions);
  std::int64_t white_sum = 0, black_sum = 0, white_area = 0, black_area = 0;
  for (int r = 0; r < count; ++r) {
    const auto& g = regions[r];
    const IntRect rect{wx + g.x0, wy + g.y0, g.x1 - g.x0, g.y1 - g.y0};
    const std::int64_t sum = sat.rect_sum(rect);
    const std::int64_t area = static_cast<std::int64_t>(rect.w) * rect.h;
    if (g.white) {
      white_sum += sum;
      white_area += area;
    } else {
      black_sum += sum;
      black_area += area;
    }
  }
  return 0.5 * (static_cast<double>(white_sum) / white_area - static_cast<double>(black_sum) / black_area);
}

CascadeVerdict eval_cascade(const SummedAreaTable& sat, const CascadeModel& model, int wx, int wy, double scale) {
  return ScaledCascade(model, scale).evaluate(sat, wx, wy);
}

ScaledCascade::ScaledCascade(const CascadeModel& model, double scale)
    : model_(&model),
      window_w_(static_cast<int>(std::lround(model.base_w * scale))),
      window_h_(static_cast<int>(std::lround(model.base_h * scale))) {
  features_.reserve(model.features.size());
  for (const auto& f : model.features) {
    std::array<Region, 4> regions{};
    const int count = scaled_regions(f, scale, regions);
    std::int64_t white_area = 0, black_area = 0;
    for (int r = 0; r < count; ++r) {
      const std::int64_t area = static_cast<std::int64_t>(regions[r].x1 - regions[r].x0) * (regions[r].y1 - regions[r].y0);
      (regions[r].white ? white_area : black_area) += area;
    }
    ScaledFeature sf;
    sf.count = count;
    sf.white_area = static_cast<double>(white_area);
    sf.black_area = static_cast<double>(black_area);
    for (int r = 0; r < count; ++r) {
      const auto& g = regions[r];
      sf.terms[r] = Term{g.x0, g.y0, g.x1 - g.x0, g.y1 - g.y0, g.white};
    }
    features_.push_back(sf);
  }
}

double ScaledCascade::feature_value(const SummedAreaTable& sat, int feature_id, int wx, int wy) const {
  const auto& sf = features_[static_cast<std::size_t>(feature_id)];
  std::int64_t white = 0, black = 0;
  for (int r = 0; r < sf.count; ++r) {
    const auto& t = sf.terms[r];
    (t.white ? white : black) += sat.rect_sum_unchecked(wx + t.dx, wy + t.dy, t.w, t.h);
  }
  return 0.5 * (static_cast<double>(white) / sf.white_area - static_cast<double>(black) / sf.black_area);
}

double ScaledCascade::stage_score(const SummedAreaTable& sat, std::size_t stage, int wx, int wy) const {
  double score = 0;
  for (const auto& stump : model_->stages[stage].stumps) {
    score += stump.alpha * stump.predict(feature_value(sat, stump.feature_id, wx, wy));
  }
  return score;
}

CascadeVerdict ScaledCascade::evaluate(const SummedAreaTable& sat, int wx, int wy) const {
  const auto& stages = model_->stages;
  for (std::size_t s = 0; s < stages.size(); ++s) {
    if (!(stage_score(sat, s, wx, wy) >= stages[s].stage_threshold)) {
      return {false, static_cast<int>(s)};
    }
  }
  return {true, static_cast<int>(stages.size())};
}

}  // namespace plateflow::haar
