#pragma once

// Independent reference implementations used only by tests.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "plateflow/geometry.hpp"
#include "plateflow/haar/cascade.hpp"
#include "plateflow/image.hpp"

namespace oracle {

inline std::int64_t naive_sum(const plateflow::GrayFrame& f, int x, int y, int w, int h) {
  std::int64_t s = 0;
  for (int j = y; j < y + h; ++j)
    for (int i = x; i < x + w; ++i) s += f.at(i, j);
  return s;
}

inline plateflow::GrayFrame random_frame(std::mt19937& rng, int w, int h) {
  plateflow::GrayFrame f(w, h);
  std::uniform_int_distribution<int> px(0, 255);
  for (auto& p : f.data) p = static_cast<std::uint8_t>(px(rng));
  return f;
}

/// Pixel-loop haar response: mean(white) - mean(black), halved.
inline double naive_feature(const plateflow::GrayFrame& frame, const plateflow::haar::HaarFeature& f, int wx, int wy,
                            double scale) {
  using plateflow::haar::HaarKind;
  const auto [nx, ny] = plateflow::haar::divisions(f.kind);
  std::vector<int> xs, ys;
  for (int i = 0; i <= nx; ++i) xs.push_back(static_cast<int>(std::lround((f.x + double(f.w) * i / nx) * scale)));
  for (int j = 0; j <= ny; ++j) ys.push_back(static_cast<int>(std::lround((f.y + double(f.h) * j / ny) * scale)));
  double ws = 0, bs = 0, wa = 0, ba = 0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      bool white = true;
      if (f.kind == HaarKind::TwoRectHorizontal || f.kind == HaarKind::TwoRectVertical) white = i + j == 0;
      if (f.kind == HaarKind::ThreeRectHorizontal) white = i != 1;
      if (f.kind == HaarKind::ThreeRectVertical) white = j != 1;
      if (f.kind == HaarKind::FourRectChecker) white = (i + j) % 2 == 0;
      for (int y = ys[j]; y < ys[j + 1]; ++y) {
        for (int x = xs[i]; x < xs[i + 1]; ++x) {
          (white ? ws : bs) += frame.at(wx + x, wy + y);
          (white ? wa : ba) += 1;
        }
      }
    }
  }
  return 0.5 * (ws / wa - bs / ba);
}

/// Evaluates every stage unconditionally, then derives the verdict.
inline plateflow::haar::CascadeVerdict monolithic_cascade(const plateflow::GrayFrame& frame,
                                                          const plateflow::haar::CascadeModel& model, int wx, int wy,
                                                          double scale) {
  std::vector<bool> pass;
  for (const auto& stage : model.stages) {
    double score = 0;
    for (const auto& s : stage.stumps) {
      const double v = naive_feature(frame, model.features[s.feature_id], wx, wy, scale);
      const bool positive = s.polarity > 0 ? v >= s.threshold : v < s.threshold;
      score += s.alpha * (positive ? 1 : -1);
    }
    pass.push_back(score >= stage.stage_threshold);
  }
  int first_fail = static_cast<int>(pass.size());
  for (std::size_t i = 0; i < pass.size(); ++i) {
    if (!pass[i]) {
      first_fail = static_cast<int>(i);
      break;
    }
  }
  return {first_fail == static_cast<int>(pass.size()), first_fail};
}

inline plateflow::haar::HaarFeature random_feature(std::mt19937& rng, int base_w, int base_h) {
  using plateflow::haar::HaarKind;
  const HaarKind kinds[] = {HaarKind::TwoRectHorizontal, HaarKind::TwoRectVertical, HaarKind::ThreeRectHorizontal,
                            HaarKind::ThreeRectVertical, HaarKind::FourRectChecker};
  while (true) {
    plateflow::haar::HaarFeature f;
    f.kind = kinds[rng() % 5];
    const auto [nx, ny] = plateflow::haar::divisions(f.kind);
    f.w = nx * (1 + static_cast<int>(rng() % (base_w / nx)));
    f.h = ny * (1 + static_cast<int>(rng() % (base_h / ny)));
    if (f.w < 2 || f.h < 2 || f.w > base_w || f.h > base_h) continue;
    f.x = static_cast<int>(rng() % (base_w - f.w + 1));
    f.y = static_cast<int>(rng() % (base_h - f.h + 1));
    return f;
  }
}

/// Random 3-stage model whose stage thresholds sit inside the achievable score range,
/// so both accepts and rejects occur.
inline plateflow::haar::CascadeModel random_model(std::mt19937& rng, int stages = 3) {
  plateflow::haar::CascadeModel m;
  m.base_w = 24;
  m.base_h = 12;
  for (int i = 0; i < 20; ++i) m.features.push_back(random_feature(rng, m.base_w, m.base_h));
  std::uniform_real_distribution<double> thr(-40.0, 40.0), alpha(0.1, 2.0), u(0.0, 1.0);
  for (int s = 0; s < stages; ++s) {
    plateflow::haar::Stage st;
    double total = 0;
    const int n = 1 + static_cast<int>(rng() % 4);
    for (int k = 0; k < n; ++k) {
      plateflow::haar::Stump stump{static_cast<int>(rng() % m.features.size()), thr(rng), rng() % 2 ? 1 : -1,
                                   alpha(rng)};
      total += stump.alpha;
      st.stumps.push_back(stump);
    }
    st.stage_threshold = (u(rng) * 1.2 - 0.6) * total;
    m.stages.push_back(st);
  }
  return m;
}

/// Transitive closure by repeated relaxation over the full similarity matrix.
inline std::vector<int> closure_labels(const std::vector<plateflow::BoundingBox>& rects, double eps) {
  const std::size_t n = rects.size();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  auto sim = [&](const plateflow::BoundingBox& a, const plateflow::BoundingBox& b) {
    const double dx = eps * (a.w + b.w) / 2, dy = eps * (a.h + b.h) / 2;
    return std::abs(a.x - b.x) <= dx && std::abs((a.x + a.w) - (b.x + b.w)) <= dx && std::abs(a.y - b.y) <= dy &&
           std::abs((a.y + a.h) - (b.y + b.h)) <= dy;
  };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) reach[i][j] = i == j || sim(rects[i], rects[j]);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      if (reach[i][k])
        for (std::size_t j = 0; j < n; ++j)
          if (reach[k][j]) reach[i][j] = true;
  std::vector<int> label(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      if (reach[i][j]) {
        label[i] = static_cast<int>(j);
        break;
      }
    }
  }
  return label;
}

}  // namespace oracle
