#include <doctest.h>

#include <filesystem>

#include "plateflow/encoding.hpp"
#include "plateflow/image_io.hpp"
#include "plateflow/synth/generator.hpp"

using namespace plateflow;
using namespace plateflow::synth;

namespace {

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("plateflow_synth_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

SynthSpec two_events() {
  SynthSpec spec;
  spec.stream_id = "two";
  spec.seed = 9;
  spec.frames = 120;
  spec.events.push_back({5, 30, {20, 40, 120, 60}, {60, 60, 130, 65}, "ঢাকা মেট্রো-গ ১২-৩৪৫৬"});
  spec.events.push_back({61, 90, {200, 300, 100, 50}, {180, 320, 110, 55}, "খুলনা মেট্রো-ক ৯৮-৭৬৫৪"});
  return spec;
}

}  // namespace

TEST_CASE("two events separated by a 30-frame gap give two instances") {
  const auto spec = two_events();
  const auto ann = make_annotation(spec);
  REQUIRE(ann.plates.size() == 2);
  CHECK(ann.plates[0].instance_id == 1);
  CHECK(ann.plates[1].instance_id == 2);
  CHECK(ann.first_frame() == 5);
  CHECK(ann.last_frame() == 90);
  CHECK(ann.boxes_at(31).empty());
  CHECK(ann.boxes_at(61).size() == 1);
  CHECK(ann.plates[0].text == spec.events[0].plate_text);
}

TEST_CASE("annotation boxes match the rendered rectangle") {
  SynthSpec spec;
  spec.seed = 4;
  spec.frames = 1;
  spec.noise_level = 0;
  spec.events.push_back({0, 0, {220, 230, 40, 20}, {220, 230, 40, 20}, "ঢাকা মেট্রো-ঘ ১১-২২৩৩"});
  const auto frame = render_frame(spec, 0);
  const auto ann = make_annotation(spec);
  const auto box = ann.plates[0].spans[0].boxes.at(0);
  CHECK(box == BoundingBox{220, 230, 40, 20});
  // Border pixels trace the box exactly; the pixel just inside the border is the plate face.
  for (int x = 220; x < 260; ++x) {
    CHECK(frame.at(x, 230) == 25);
    CHECK(frame.at(x, 249) == 25);
  }
  for (int y = 230; y < 250; ++y) {
    CHECK(frame.at(220, y) == 25);
    CHECK(frame.at(259, y) == 25);
  }
  CHECK(frame.at(222, 232) == 232);
  CHECK(frame.at(219, 240) != 25);
  CHECK(frame.at(260, 240) != 25);
}

TEST_CASE("boxes follow the trajectory and stay in frame") {
  const auto spec = two_events();
  CHECK(plate_at(spec, 5)->box == spec.events[0].start_box);
  CHECK(plate_at(spec, 30)->box == spec.events[0].end_box);
  CHECK_FALSE(plate_at(spec, 4).has_value());
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = random_stream_spec("r", seed);
    for (const auto& p : make_annotation(r).plates) {
      for (const auto& [t, b] : p.spans[0].boxes) {
        CHECK(b.x >= 0);
        CHECK(b.y >= 0);
        CHECK(b.right() <= r.width);
        CHECK(b.bottom() <= r.height);
        CHECK(b.h >= 50);
      }
    }
  }
}

TEST_CASE("rendering is deterministic and seed dependent") {
  const auto spec = two_events();
  CHECK(render_frame(spec, 10).data == render_frame(spec, 10).data);
  auto other = spec;
  other.seed = 10;
  CHECK(render_frame(spec, 10).data != render_frame(other, 10).data);
  CHECK(render_frame(spec, 10).frame_index == 10);
}

TEST_CASE("write_stream is byte identical across runs") {
  auto spec = two_events();
  spec.frames = 40;
  spec.events.resize(1);
  const auto a = scratch("a"), b = scratch("b");
  write_stream(spec, a);
  write_stream(spec, b);
  for (const auto& entry : std::filesystem::directory_iterator(a)) {
    const auto name = entry.path().filename();
    CHECK(io::read_file(entry.path()) == io::read_file(b / name));
  }
  CHECK(std::filesystem::exists(a / "000039.pgm"));
  CHECK_FALSE(std::filesystem::exists(a / "000040.pgm"));
  const auto stream = nlohmann::json::parse(io::read_text(a / "stream.json"));
  CHECK(stream.at("frames") == 40);
  CHECK(stream.at("width") == 480);
  CHECK(stream.at("fps") == 24.0);
  CHECK(eval::load_annotation(a / "annotations.json") == make_annotation(spec));
  CHECK(*ocr::load_manifest(a / "ocr_manifest.json").lookup("two", 1) == spec.events[0].plate_text);
  CHECK(io::read_pgm(a / "000012.pgm").data == render_frame(spec, 12).data);
  std::filesystem::remove_all(a);
  std::filesystem::remove_all(b);
}

TEST_CASE("invalid specs are rejected") {
  auto spec = two_events();
  spec.events[1].enter_frame = 30;
  CHECK_THROWS_AS(validate(spec), SpecError);
  spec = two_events();
  std::swap(spec.events[0], spec.events[1]);
  CHECK_THROWS_AS(validate(spec), SpecError);
  spec = two_events();
  spec.events[0].end_box.x = 470;
  CHECK_THROWS_AS(validate(spec), SpecError);
  spec = two_events();
  spec.events[1].exit_frame = 500;
  CHECK_THROWS_AS(validate(spec), SpecError);
  spec = two_events();
  spec.events[0].plate_text.clear();
  CHECK_THROWS_AS(validate(spec), SpecError);
}

TEST_CASE("random streams respect gap and count options") {
  RandomStreamOptions o;
  o.events = 5;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto spec = random_stream_spec("g", seed, o);
    REQUIRE(spec.events.size() == 5);
    for (std::size_t i = 1; i < spec.events.size(); ++i) {
      const auto gap = spec.events[i].enter_frame - spec.events[i - 1].exit_frame - 1;
      CHECK(gap >= o.min_gap);
      CHECK(gap <= o.max_gap);
    }
    CHECK(spec.frames == spec.events.back().exit_frame + 1 + o.tail);
  }
}

TEST_CASE("plate text is Bangla") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto text = random_plate_text(seed);
    const auto cps = utf8_decode(text);
    CHECK(cps.size() >= 12);
    int bengali = 0;
    for (char32_t c : cps) bengali += c >= 0x0980 && c <= 0x09FF;
    CHECK(bengali >= 10);
  }
  CHECK(random_plate_text(3) == random_plate_text(3));
}

TEST_CASE("spec and corpus json") {
  const auto spec = two_events();
  const auto back = spec_from_json(spec_to_json(spec));
  CHECK(spec_to_json(back) == spec_to_json(spec));

  const auto explicit_corpus = corpus_from_json({{"v", 1}, {"streams", {spec_to_json(spec)}}});
  REQUIRE(explicit_corpus.size() == 1);
  CHECK(explicit_corpus[0].events.size() == 2);

  const auto random_corpus =
      corpus_from_json(nlohmann::json::parse(R"({"v":1,"random":{"seed":5,"streams":3,"events_per_stream":2}})"));
  REQUIRE(random_corpus.size() == 3);
  CHECK(random_corpus[0].stream_id == "stream-000");
  CHECK(random_corpus[2].events.size() == 2);
  CHECK(spec_to_json(random_corpus[1]) ==
        spec_to_json(corpus_from_json(nlohmann::json::parse(R"({"random":{"seed":5,"streams":3,"events_per_stream":2}})"))[1]));

  CHECK_THROWS_AS(spec_from_json(nlohmann::json::parse(R"({"events":[{"enter_frame":1}]})")), SpecError);
}

TEST_CASE("write_corpus merges manifests") {
  auto a = two_events();
  a.frames = 100;
  a.events.resize(1);
  auto b = a;
  b.stream_id = "other";
  const auto dir = scratch("corpus");
  write_corpus({a, b}, dir);
  const auto m = ocr::load_manifest(dir / "ocr_manifest.json");
  CHECK(m.streams.size() == 2);
  CHECK(std::filesystem::exists(dir / "other" / "annotations.json"));
  std::filesystem::remove_all(dir);
}

TEST_CASE("annotated frames carry the plate boxes") {
  const auto spec = two_events();
  const auto frames = annotated_frames(spec, 10);
  CHECK(frames.size() == 12);
  CHECK(frames[0].plates.empty());
  REQUIRE(frames[1].plates.size() == 1);
  CHECK(frames[1].plates[0] == plate_at(spec, 10)->box);
  CHECK_THROWS(annotated_frames(spec, 0));
}
