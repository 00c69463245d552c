#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "plateflow/haar/integral_image.hpp"

namespace plateflow::haar {

enum class HaarKind {
  TwoRectHorizontal,    // white left | black right
  TwoRectVertical,      // white top / black bottom
  ThreeRectHorizontal,  // white | black | white
  ThreeRectVertical,
  FourRectChecker,      // white on the main diagonal
};

std::string_view to_string(HaarKind kind);
HaarKind haar_kind_from_string(std::string_view name);

/// Number of equal divisions along (x, y) for a kind.
std::array<int, 2> divisions(HaarKind kind);

/// Anchor rect is relative to the base window.
struct HaarFeature {
  HaarKind kind = HaarKind::TwoRectHorizontal;
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  bool operator==(const HaarFeature&) const = default;
};

struct Stump {
  int feature_id = 0;
  double threshold = 0;
  int polarity = 1;  // +1: positive when value >= threshold; -1: positive when value < threshold
  double alpha = 0;

  int predict(double value) const {
    const bool positive = polarity > 0 ? value >= threshold : value < threshold;
    return positive ? 1 : -1;
  }
  bool operator==(const Stump&) const = default;
};

struct Stage {
  std::vector<Stump> stumps;
  double stage_threshold = 0;
  bool operator==(const Stage&) const = default;
};

struct CascadeModel {
  int base_w = 24;
  int base_h = 12;
  std::vector<HaarFeature> features;
  std::vector<Stage> stages;
  bool operator==(const CascadeModel&) const = default;
};

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DegenerateFeatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws ModelError when a model violates its invariants.
void validate(const CascadeModel& model);
bool feature_fits(const HaarFeature& f, int base_w, int base_h);

/// Haar response of feature f for the window at origin (wx, wy) scaled by `scale`.
/// The value is half the difference of the mean white and mean black intensities,
/// which for equal-area splits is (white sum - black sum) / feature area.
double eval_feature(const SummedAreaTable& sat, const HaarFeature& f, int wx, int wy, double scale);

struct CascadeVerdict {
  bool accepted = false;
  int stages_passed = 0;
  bool operator==(const CascadeVerdict&) const = default;
};

/// Stage-by-stage evaluation that stops at the first failing stage.
CascadeVerdict eval_cascade(const SummedAreaTable& sat, const CascadeModel& model, int wx, int wy, double scale);

/// Feature rectangles pre-resolved for one scale: each feature is a short list of
/// window-relative cells. Produces bit-identical values to eval_feature.
class ScaledCascade {
 public:
  ScaledCascade(const CascadeModel& model, double scale);

  int window_w() const { return window_w_; }
  int window_h() const { return window_h_; }

  double feature_value(const SummedAreaTable& sat, int feature_id, int wx, int wy) const;
  double stage_score(const SummedAreaTable& sat, std::size_t stage, int wx, int wy) const;
  CascadeVerdict evaluate(const SummedAreaTable& sat, int wx, int wy) const;

 private:
  struct Term {
    int dx, dy, w, h;
    bool white;
  };
  struct ScaledFeature {
    std::array<Term, 4> terms;
    int count = 0;
    double white_area = 1;
    double black_area = 1;
  };

  const CascadeModel* model_;
  int window_w_ = 0;
  int window_h_ = 0;
  std::vector<ScaledFeature> features_;
};

}  // namespace plateflow::haar
