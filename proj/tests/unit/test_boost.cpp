#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "plateflow/boost/patches.hpp"
#include "plateflow/boost/stump.hpp"
#include "plateflow/boost/trainer.hpp"
#include "plateflow/detect/box_ops.hpp"
#include "plateflow/haar/model_io.hpp"
#include "plateflow/haar/scan.hpp"
#include "plateflow/synth/generator.hpp"

using namespace plateflow;
using namespace plateflow::boosting;

namespace {

std::vector<double> uniform(std::size_t n) { return std::vector<double>(n, 1.0 / static_cast<double>(n)); }

// Patches whose left half is bright are positives; uniform patches are negatives.
TrainingSet separable_set(std::uint32_t seed, std::size_t n_pos, std::size_t n_neg) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> noise(-10, 10);
  TrainingSet set;
  for (std::size_t k = 0; k < n_pos; ++k) {
    GrayFrame p(24, 12);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 24; ++x) p.at(x, y) = static_cast<std::uint8_t>((x < 12 ? 200 : 50) + noise(rng));
    set.positives.push_back(p);
  }
  for (std::size_t k = 0; k < n_neg; ++k) {
    GrayFrame p(24, 12);
    const int base = std::uniform_int_distribution<int>(40, 210)(rng);
    for (auto& v : p.data) v = static_cast<std::uint8_t>(base + noise(rng));
    set.negatives.push_back(p);
  }
  return set;
}

TrainingSet noisy_set(std::uint32_t seed, std::size_t n_pos, std::size_t n_neg) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pix(0, 255);
  TrainingSet set;
  auto patch = [&](int bias) {
    GrayFrame p(24, 12);
    for (int y = 0; y < 12; ++y)
      for (int x = 0; x < 24; ++x) p.at(x, y) = static_cast<std::uint8_t>(std::clamp(pix(rng) + (x < 12 ? bias : 0), 0, 255));
    return p;
  };
  for (std::size_t k = 0; k < n_pos; ++k) set.positives.push_back(patch(40));
  for (std::size_t k = 0; k < n_neg; ++k) set.negatives.push_back(patch(0));
  return set;
}

bool model_accepts(const haar::CascadeModel& model, const GrayFrame& patch) {
  const haar::SummedAreaTable sat(patch);
  return haar::eval_cascade(sat, model, 0, 0, 1.0).accepted;
}

}  // namespace

TEST_SUITE("stump") {
  TEST_CASE("separable values split at the midpoint") {
    const std::vector<double> v{1, 2, 3, 4};
    const std::vector<int> l{-1, -1, 1, 1};
    const auto s = train_stump(v, l, uniform(4));
    CHECK(s.threshold == doctest::Approx(2.5));
    CHECK(s.polarity == 1);
    CHECK(s.error == 0.0);
  }

  TEST_CASE("alternating labels cannot beat a quarter") {
    const std::vector<double> v{1, 2, 3, 4};
    const std::vector<int> l{1, -1, 1, -1};
    const auto s = train_stump(v, l, uniform(4));
    CHECK(s.error == doctest::Approx(0.25));
  }

  TEST_CASE("all-positive labels accept everything") {
    const std::vector<double> v{3, 1, 2, 5};
    const std::vector<int> l{1, 1, 1, 1};
    const auto s = train_stump(v, l, uniform(4));
    CHECK(s.error == 0.0);
    const haar::Stump stump{0, s.threshold, s.polarity, 1.0};
    for (double x : v) CHECK(stump.predict(x) == 1);
  }

  TEST_CASE("matches exhaustive threshold search") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t n = 2 + rng() % 12;
      std::vector<double> v(n), w(n);
      std::vector<int> l(n);
      double total = 0;
      for (std::size_t i = 0; i < n; ++i) {
        v[i] = static_cast<double>(rng() % 6);
        l[i] = rng() % 2 ? 1 : -1;
        w[i] = 0.1 + (rng() % 100) / 100.0;
        total += w[i];
      }
      for (auto& x : w) x /= total;
      std::vector<double> cands{-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
      for (double a : v)
        for (double b : v)
          if (a < b) cands.push_back((a + b) / 2);
      double best = 2;
      for (double t : cands) {
        for (int pol : {1, -1}) {
          double err = 0;
          const haar::Stump s{0, t, pol, 1};
          for (std::size_t i = 0; i < n; ++i)
            if (s.predict(v[i]) != l[i]) err += w[i];
          best = std::min(best, err);
        }
      }
      const auto got = train_stump(v, l, w);
      CHECK(got.error == doctest::Approx(best).epsilon(1e-12));
      CHECK(got.error <= 0.5 + 1e-12);
    }
  }

  TEST_CASE("input validation") {
    const std::vector<double> v{1};
    const std::vector<int> l{1};
    CHECK_THROWS(train_stump(v, l, uniform(1)));
    const std::vector<double> v2{1, 2};
    const std::vector<int> l2{1, 0};
    CHECK_THROWS(train_stump(v2, l2, uniform(2)));
    const std::vector<double> bad_w{0.5, -0.5};
    CHECK_THROWS(train_stump(v2, std::vector<int>{1, -1}, bad_w));
  }

  TEST_CASE("alpha") {
    CHECK(alpha_for_error(0.25) == doctest::Approx(0.5 * std::log(3.0)).epsilon(1e-12));
    CHECK(alpha_for_error(0.25) == doctest::Approx(0.5493).epsilon(1e-4));
    CHECK(alpha_for_error(0.0) == doctest::Approx(0.5 * std::log((1 - kErrorFloor) / kErrorFloor)));
    CHECK(std::isfinite(alpha_for_error(0.0)));
  }
}

TEST_SUITE("trainer") {
  TEST_CASE("feature pool fits the base window") {
    const auto pool = generate_feature_pool(24, 12);
    CHECK(pool.size() > 1000);
    for (const auto& f : pool) {
      CHECK(haar::feature_fits(f, 24, 12));
      const auto [nx, ny] = haar::divisions(f.kind);
      CHECK(f.w % nx == 0);
      CHECK(f.h % ny == 0);
      CHECK(f.x % 2 == 0);
      CHECK(f.y % 2 == 0);
      CHECK(f.w >= 4);
      CHECK(f.h >= 4);
    }
  }

  TEST_CASE("threshold for tpr") {
    CHECK(threshold_for_tpr({3, 1, 2, 4}, 1.0) == 1);
    CHECK(threshold_for_tpr({3, 1, 2, 4}, 0.75) == 2);
    CHECK(threshold_for_tpr({3, 1, 2, 4}, 0.5) == 3);
    CHECK(threshold_for_tpr({3, 1, 2, 4}, 0.51) == 2);
  }

  TEST_CASE("separable set gives a one-stump stage") {
    const auto set = separable_set(1, 40, 60);
    const auto r = train_stage(set, generate_feature_pool(24, 12), StageTargets{});
    CHECK(r.stage.stumps.size() == 1);
    CHECK(r.tpr == 1.0);
    CHECK(r.fpr == 0.0);
  }

  TEST_CASE("min tpr 1 puts the threshold at the lowest positive score") {
    const auto set = noisy_set(2, 60, 60);
    StageTargets t;
    t.min_stage_tpr = 1.0;
    t.max_stumps_per_stage = 8;
    t.max_stage_fpr = 0.01;
    const auto features = generate_feature_pool(24, 12);
    const auto r = train_stage(set, features, t);
    std::vector<const GrayFrame*> samples;
    for (const auto& p : set.positives) samples.push_back(&p);
    const FeatureMatrix m(features, 24, 12, samples);
    double lowest = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < samples.size(); ++i) lowest = std::min(lowest, stage_score(r.stage, m, i));
    CHECK(r.stage.stage_threshold == lowest);
    CHECK(r.tpr == 1.0);
  }

  TEST_CASE("reweighted error of each chosen stump is one half") {
    const auto set = noisy_set(3, 80, 80);
    StageTargets t;
    t.max_stumps_per_stage = 12;
    t.max_stage_fpr = 0.001;
    const auto r = train_stage(set, generate_feature_pool(24, 12), t);
    REQUIRE(r.reweighted_errors.size() >= 2);
    for (std::size_t k = 0; k < r.reweighted_errors.size(); ++k) {
      if (r.stump_errors[k] > 0) CHECK(std::abs(r.reweighted_errors[k] - 0.5) <= 1e-9);
    }
    double total = 0;
    for (double w : r.weights) total += w;
    CHECK(total == doctest::Approx(1.0));
  }

  TEST_CASE("stage tpr meets its target") {
    const auto set = noisy_set(4, 100, 100);
    StageTargets t;
    t.max_stumps_per_stage = 6;
    const auto r = train_stage(set, generate_feature_pool(24, 12), t);
    CHECK(r.tpr >= t.min_stage_tpr);
  }

  TEST_CASE("carry weights must match the sample count") {
    const auto set = separable_set(5, 4, 4);
    CHECK_THROWS(train_stage(set, generate_feature_pool(24, 12), StageTargets{}, std::vector<double>(3, 1.0)));
    CHECK_NOTHROW(train_stage(set, generate_feature_pool(24, 12), StageTargets{}, std::vector<double>(8, 1.0)));
  }

  TEST_CASE("cumulative fpr is non-increasing and three stages stay near 1/8") {
    const auto train = noisy_set(6, 150, 600);
    const auto held = noisy_set(7, 1, 2000);
    StageTargets t;
    t.max_stages = 3;
    t.max_stumps_per_stage = 30;
    std::vector<StageReport> reports;
    CascadeTrainingOptions o;
    o.on_stage = [&](int, const StageReport& r) { reports.push_back(r); };
    const auto result = train_cascade(train, t, o);
    REQUIRE(reports.size() == result.stages.size());
    for (std::size_t k = 1; k < reports.size(); ++k) CHECK(reports[k].negatives_out <= reports[k - 1].negatives_out);
    for (const auto& r : reports) CHECK(r.fpr <= t.max_stage_fpr);
    std::size_t fp = 0;
    for (const auto& p : held.negatives) fp += model_accepts(result.model, p);
    const double fpr = static_cast<double>(fp) / held.negatives.size();
    if (result.model.stages.size() == 3) CHECK(fpr <= 0.125 + 0.05);
    CHECK(result.training_fpr <= std::pow(0.5, static_cast<double>(result.model.stages.size())) + 1e-12);
  }

  TEST_CASE("empty negative pool yields a permissive stage") {
    auto set = separable_set(8, 5, 0);
    const auto result = train_cascade(set, StageTargets{});
    CHECK(result.permissive_warning);
    REQUIRE(result.model.stages.size() == 1);
    CHECK(result.model.stages[0].stumps.empty());
    CHECK(model_accepts(result.model, set.positives[0]));
    CHECK(model_accepts(result.model, GrayFrame(24, 12, 0)));
  }

  TEST_CASE("pool emptied by stage one stops training") {
    const auto result = train_cascade(separable_set(9, 30, 50), StageTargets{});
    CHECK_FALSE(result.permissive_warning);
    CHECK(result.model.stages.size() == 1);
    CHECK(result.training_fpr == 0.0);
    CHECK(result.training_tpr == 1.0);
  }

  TEST_CASE("training is deterministic") {
    const auto set = noisy_set(10, 60, 200);
    StageTargets t;
    t.max_stages = 2;
    t.max_stumps_per_stage = 5;
    const auto a = train_cascade(set, t);
    const auto b = train_cascade(set, t);
    CHECK(a.model == b.model);
    CHECK(haar::cascade_to_json(a.model).dump() == haar::cascade_to_json(b.model).dump());
  }

  TEST_CASE("per-stage negative cap still filters the whole pool") {
    const auto set = noisy_set(11, 60, 400);
    StageTargets t;
    t.max_stages = 3;
    t.max_stumps_per_stage = 10;
    CascadeTrainingOptions o;
    o.max_stage_negatives = 100;
    const auto result = train_cascade(set, t, o);
    std::size_t survivors = 0;
    for (const auto& p : set.negatives) survivors += model_accepts(result.model, p);
    CHECK(static_cast<double>(survivors) / set.negatives.size() == doctest::Approx(result.training_fpr));
    CHECK(result.stages[0].negatives_in == 400);
  }

  TEST_CASE("rejects bad targets") {
    StageTargets t;
    t.max_stage_fpr = 1.0;
    CHECK_THROWS(validate(t));
    t = {};
    t.min_stage_tpr = 0;
    CHECK_THROWS(validate(t));
    CHECK_THROWS(train_cascade(TrainingSet{}, StageTargets{}));
  }
}

TEST_SUITE("patches") {
  TEST_CASE("area resample averages blocks") {
    GrayFrame src(4, 2);
    const std::uint8_t values[] = {0, 10, 20, 30, 40, 50, 60, 70};
    std::copy(std::begin(values), std::end(values), src.data.begin());
    const auto out = resample_area(src, {0, 0, 4, 2}, 2, 1);
    CHECK(out.at(0, 0) == 25);
    CHECK(out.at(1, 0) == 45);
    const auto same = resample_area(src, {0, 0, 4, 2}, 4, 2);
    CHECK(same.data == src.data);
  }

  TEST_CASE("negatives avoid plates and patches have the base size") {
    const auto spec = synth::random_stream_spec("s", 21);
    const auto frames = synth::annotated_frames(spec, 6);
    PatchSampling ps;
    const auto set = sample_patches(frames, 40, 200, ps);
    CHECK(set.positives.size() == 40);
    CHECK(set.negatives.size() == 200);
    for (const auto& p : set.positives) CHECK((p.width == 24 && p.height == 12));
    for (const auto& p : set.negatives) CHECK((p.width == 24 && p.height == 12));
    const auto again = sample_patches(frames, 40, 200, ps);
    CHECK(again.negatives[17].data == set.negatives[17].data);
  }
}

TEST_CASE("cascade trained on the generator finds a generated plate") {
  std::vector<AnnotatedFrame> frames;
  for (int s = 0; s < 6; ++s) {
    auto more = synth::annotated_frames(synth::random_stream_spec("train", 500 + s), 5);
    std::move(more.begin(), more.end(), std::back_inserter(frames));
  }
  PatchSampling ps;
  ps.seed = 3;
  const auto train = sample_patches(frames, 500, 40000, ps);
  StageTargets t;
  t.max_stages = 20;
  CascadeTrainingOptions o;
  o.max_stage_negatives = 4000;
  const auto cascade = train_cascade(train, t, o);

  synth::SynthSpec spec;
  spec.seed = 77;
  spec.frames = 1;
  spec.events.push_back({0, 0, {190, 215, 100, 50}, {190, 215, 100, 50}, synth::random_plate_text(5)});
  const auto frame = synth::render_frame(spec, 0);
  const auto boxes = haar::scan(frame, cascade.model, haar::ScanParams{});
  int hits = 0;
  for (const auto& b : boxes) {
    hits += detect::iou({double(b.x), double(b.y), double(b.w), double(b.h)}, spec.events[0].start_box) >= 0.5;
  }
  CHECK(hits == 1);

  synth::SynthSpec empty = spec;
  empty.events.clear();
  CHECK(haar::scan(synth::render_frame(empty, 0), cascade.model, haar::ScanParams{}).empty());
  CHECK(haar::scan(GrayFrame(480, 480, 128), cascade.model, haar::ScanParams{}).empty());
}
