#include "plateflow/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "plateflow/encoding.hpp"
#include "plateflow/image_io.hpp"

namespace plateflow::synth {

using nlohmann::json;

namespace {

std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

std::uint64_t hash(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0, std::uint64_t d = 0) {
  return mix(mix(mix(mix(a) ^ b) ^ c) ^ d);
}

/// Uniform in [0, 1).
double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

/// Small portable generator so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next() { return mix(state_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(next()); }
  std::int64_t range(std::int64_t lo, std::int64_t hi) {  // inclusive
    return lo + static_cast<std::int64_t>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }

 private:
  std::uint64_t state_;
};

struct IntBox {
  int x, y, w, h;
};

IntBox round_box(const BoundingBox& b, int fw, int fh) {
  IntBox r{static_cast<int>(std::lround(b.x)), static_cast<int>(std::lround(b.y)),
           std::max(1, static_cast<int>(std::lround(b.w))), std::max(1, static_cast<int>(std::lround(b.h)))};
  r.w = std::min(r.w, fw);
  r.h = std::min(r.h, fh);
  r.x = std::clamp(r.x, 0, fw - r.w);
  r.y = std::clamp(r.y, 0, fh - r.h);
  return r;
}

BoundingBox lerp(const BoundingBox& a, const BoundingBox& b, double u) {
  return {a.x + (b.x - a.x) * u, a.y + (b.y - a.y) * u, a.w + (b.w - a.w) * u, a.h + (b.h - a.h) * u};
}

void fill_rect(std::vector<double>& img, int fw, int fh, int x0, int y0, int x1, int y1, double value, bool add) {
  x0 = std::clamp(x0, 0, fw);
  x1 = std::clamp(x1, 0, fw);
  y0 = std::clamp(y0, 0, fh);
  y1 = std::clamp(y1, 0, fh);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      auto& p = img[static_cast<std::size_t>(y) * fw + x];
      p = add ? p + value : value;
    }
  }
}

std::vector<double> background(const SynthSpec& spec) {
  const int fw = spec.width, fh = spec.height;
  constexpr int kCell = 60;
  const int gx = fw / kCell + 2, gy = fh / kCell + 2;
  std::vector<double> grid(static_cast<std::size_t>(gx) * gy);
  for (int j = 0; j < gy; ++j)
    for (int i = 0; i < gx; ++i) grid[j * gx + i] = 70 + 80 * unit(hash(spec.seed, 1, i, j));
  auto smooth = [](double t) { return t * t * (3 - 2 * t); };
  std::vector<double> img(static_cast<std::size_t>(fw) * fh);
  for (int y = 0; y < fh; ++y) {
    const int cy = y / kCell;
    const double v = smooth(static_cast<double>(y % kCell) / kCell);
    for (int x = 0; x < fw; ++x) {
      const int cx = x / kCell;
      const double u = smooth(static_cast<double>(x % kCell) / kCell);
      const double top = grid[cy * gx + cx] * (1 - u) + grid[cy * gx + cx + 1] * u;
      const double bottom = grid[(cy + 1) * gx + cx] * (1 - u) + grid[(cy + 1) * gx + cx + 1] * u;
      img[static_cast<std::size_t>(y) * fw + x] = top * (1 - v) + bottom * v;
    }
  }
  Rng rng(hash(spec.seed, 2));
  for (int k = 0; k < spec.clutter_rects; ++k) {
    const int w = static_cast<int>(rng.range(16, 160));
    const int h = static_cast<int>(rng.range(8, 120));
    const int x = static_cast<int>(rng.range(-w / 2, fw - w / 2));
    const int y = static_cast<int>(rng.range(-h / 2, fh - h / 2));
    const double delta = rng.uniform(10, 30) * (rng.next() % 2 ? 1 : -1);
    fill_rect(img, fw, fh, x, y, x + w, y + h, delta, true);
  }
  return img;
}

/// 3x5 glyph bitmap for a codepoint; never blank.
std::uint16_t glyph_bits(char32_t cp) {
  auto bits = static_cast<std::uint16_t>(hash(0x91A7E, cp) & 0x7FFF);
  if (__builtin_popcount(bits) < 5) bits |= 0x5A5A & 0x7FFF;
  return bits;
}

void draw_glyph_row(std::vector<double>& img, int fw, const std::u32string& glyphs, int x0, int y0, int w, int h) {
  if (glyphs.empty() || w <= 0 || h <= 0) return;
  const double cell = static_cast<double>(w) / glyphs.size();
  for (std::size_t g = 0; g < glyphs.size(); ++g) {
    const auto bits = glyph_bits(glyphs[g]);
    const double gx = x0 + g * cell + cell * 0.15;
    const double gw = cell * 0.7;
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 3; ++c) {
        if (!((bits >> (r * 3 + c)) & 1)) continue;
        const int px0 = static_cast<int>(std::lround(gx + gw * c / 3));
        const int px1 = static_cast<int>(std::lround(gx + gw * (c + 1) / 3));
        const int py0 = static_cast<int>(std::lround(y0 + static_cast<double>(h) * r / 5));
        const int py1 = static_cast<int>(std::lround(y0 + static_cast<double>(h) * (r + 1) / 5));
        for (int y = py0; y < py1; ++y)
          for (int x = px0; x < px1; ++x) img[static_cast<std::size_t>(y) * fw + x] = 28;
      }
    }
  }
}

void draw_plate(std::vector<double>& img, int fw, const IntBox& b, const std::string& text) {
  const int border = std::max(2, static_cast<int>(std::lround(b.h / 14.0)));
  for (int y = b.y; y < b.y + b.h; ++y) {
    for (int x = b.x; x < b.x + b.w; ++x) {
      const bool edge = x < b.x + border || x >= b.x + b.w - border || y < b.y + border || y >= b.y + b.h - border;
      img[static_cast<std::size_t>(y) * fw + x] = edge ? 25 : 232;
    }
  }
  std::u32string cps;
  try {
    cps = utf8_decode(text);
  } catch (const EncodingError&) {
    cps = U"?";
  }
  // Two lines like a BRTA plate: split at the last space.
  std::u32string top, bottom;
  const auto split = cps.find_last_of(U' ');
  if (split == std::u32string::npos) {
    top = cps.substr(0, cps.size() / 2);
    bottom = cps.substr(cps.size() / 2);
  } else {
    top = cps.substr(0, split);
    bottom = cps.substr(split + 1);
  }
  std::erase_if(top, [](char32_t c) { return c == U' '; });
  const int inner_x = b.x + 2 * border;
  const int inner_w = b.w - 4 * border;
  const int inner_y = b.y + 2 * border;
  const int inner_h = b.h - 4 * border;
  if (inner_w < 4 || inner_h < 4) return;
  const int top_h = inner_h * 2 / 5;
  const int gap = std::max(1, inner_h / 10);
  draw_glyph_row(img, fw, top, inner_x + inner_w / 8, inner_y, inner_w * 3 / 4, top_h);
  draw_glyph_row(img, fw, bottom, inner_x, inner_y + top_h + gap, inner_w, inner_h - top_h - gap);
}

void draw_vehicle(std::vector<double>& img, int fw, int fh, const IntBox& plate, std::uint64_t tone_seed) {
  const double tone = 40 + 150 * unit(tone_seed);
  const int bw = static_cast<int>(plate.w * 3.2);
  const int top = plate.y - static_cast<int>(plate.h * 2.4);
  const int bottom = plate.y + static_cast<int>(plate.h * 1.6);
  const int left = plate.x + plate.w / 2 - bw / 2;
  fill_rect(img, fw, fh, left, top, left + bw, bottom, tone, false);
  // A darker bumper strip around the plate.
  fill_rect(img, fw, fh, left, plate.y - plate.h / 3, left + bw, plate.y + plate.h + plate.h / 3, tone * 0.6, false);
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.width < 1 || spec.height < 1) throw SpecError("frame size must be positive");
  if (spec.frames < 1) throw SpecError("stream needs at least one frame");
  if (!(spec.fps > 0)) throw SpecError("fps must be positive");
  for (std::size_t i = 0; i < spec.events.size(); ++i) {
    const auto& e = spec.events[i];
    if (e.exit_frame < e.enter_frame) throw SpecError("event exits before it enters");
    if (e.enter_frame < 0 || e.exit_frame >= spec.frames) throw SpecError("event outside the stream");
    if (e.plate_text.empty()) throw SpecError("event needs plate text");
    for (const auto* b : {&e.start_box, &e.end_box}) {
      if (!b->valid() || b->x < 0 || b->y < 0 || b->right() > spec.width || b->bottom() > spec.height) {
        throw SpecError("plate box outside the frame");
      }
    }
    if (i > 0) {
      const auto& prev = spec.events[i - 1];
      if (e.enter_frame < prev.enter_frame) throw SpecError("events must be time-ordered");
      if (e.enter_frame <= prev.exit_frame) {
        throw SpecError("overlapping vehicle events are unsupported (one active plate at a time)");
      }
    }
  }
}

std::optional<PlatePlacement> plate_at(const SynthSpec& spec, std::int64_t t) {
  for (std::size_t i = 0; i < spec.events.size(); ++i) {
    const auto& e = spec.events[i];
    if (t < e.enter_frame || t > e.exit_frame) continue;
    const double u = e.exit_frame == e.enter_frame
                         ? 0.0
                         : static_cast<double>(t - e.enter_frame) / static_cast<double>(e.exit_frame - e.enter_frame);
    const auto r = round_box(lerp(e.start_box, e.end_box, u), spec.width, spec.height);
    return PlatePlacement{static_cast<int>(i) + 1, {double(r.x), double(r.y), double(r.w), double(r.h)}};
  }
  return std::nullopt;
}

GrayFrame render_frame(const SynthSpec& spec, std::int64_t t) {
  auto img = background(spec);
  if (const auto placement = plate_at(spec, t)) {
    const auto& b = placement->box;
    const IntBox box{static_cast<int>(b.x), static_cast<int>(b.y), static_cast<int>(b.w), static_cast<int>(b.h)};
    draw_vehicle(img, spec.width, spec.height, box, hash(spec.seed, 3, placement->instance_id));
    draw_plate(img, spec.width, box, spec.events[placement->instance_id - 1].plate_text);
  }
  GrayFrame frame(spec.width, spec.height, 0, t);
  const auto amp = static_cast<std::int64_t>(std::lround(spec.noise_level));
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = img[i];
    if (amp > 0) v += static_cast<double>(static_cast<std::int64_t>(hash(spec.seed, 4, t, i) % (2 * amp + 1)) - amp);
    frame.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return frame;
}

eval::VideoAnnotation make_annotation(const SynthSpec& spec) {
  eval::VideoAnnotation ann;
  ann.stream_id = spec.stream_id;
  for (std::size_t i = 0; i < spec.events.size(); ++i) {
    const auto& e = spec.events[i];
    eval::PlateAnnotation plate;
    plate.instance_id = static_cast<int>(i) + 1;
    plate.text = e.plate_text;
    eval::PlateSpan span{e.enter_frame, e.exit_frame, {}};
    for (auto t = e.enter_frame; t <= e.exit_frame; ++t) span.boxes[t] = plate_at(spec, t)->box;
    plate.spans.push_back(std::move(span));
    ann.plates.push_back(std::move(plate));
  }
  return ann;
}

ocr::OcrManifest make_manifest(const SynthSpec& spec) {
  ocr::OcrManifest m;
  auto& entry = m.streams[spec.stream_id];
  for (std::size_t i = 0; i < spec.events.size(); ++i) entry[static_cast<int>(i) + 1] = spec.events[i].plate_text;
  return m;
}

std::vector<boosting::AnnotatedFrame> annotated_frames(const SynthSpec& spec, int step) {
  if (step < 1) throw SpecError("frame step must be >= 1");
  std::vector<boosting::AnnotatedFrame> out;
  for (std::int64_t t = 0; t < spec.frames; t += step) {
    boosting::AnnotatedFrame af{render_frame(spec, t), {}};
    if (const auto p = plate_at(spec, t)) af.plates.push_back(p->box);
    out.push_back(std::move(af));
  }
  return out;
}

void write_stream(const SynthSpec& spec, const std::filesystem::path& dir) {
  validate(spec);
  std::filesystem::create_directories(dir);
  for (std::int64_t t = 0; t < spec.frames; ++t) {
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.pgm", static_cast<long long>(t));
    io::write_pgm(dir / name, render_frame(spec, t));
  }
  const json stream = {{"v", 1}, {"fps", spec.fps}, {"frames", spec.frames}, {"width", spec.width}, {"height", spec.height}};
  io::write_text(dir / "stream.json", stream.dump() + "\n");
  eval::save_annotation(dir / "annotations.json", make_annotation(spec));
  ocr::save_manifest(dir / "ocr_manifest.json", make_manifest(spec));
}

std::string random_plate_text(std::uint64_t seed) {
  static const char* kDistricts[] = {"ঢাকা", "চট্টগ্রাম", "খুলনা", "সিলেট", "রাজশাহী", "বরিশাল", "রংপুর", "ময়মনসিংহ"};
  static const char* kLetters[] = {"ক", "খ", "গ", "ঘ", "চ", "ছ", "জ", "ঝ", "ত", "থ", "ঢ", "ড", "ট", "ঠ", "ন", "প", "ভ", "ম", "দ", "ল", "স", "হ"};
  static const char* kDigits[] = {"০", "১", "২", "৩", "৪", "৫", "৬", "৭", "৮", "৯"};
  Rng rng(hash(seed, 0x17A7E));
  std::string out = kDistricts[rng.next() % std::size(kDistricts)];
  out += " মেট্রো-";
  out += kLetters[rng.next() % std::size(kLetters)];
  out += " ";
  for (int i = 0; i < 6; ++i) {
    if (i == 2) out += "-";
    out += kDigits[rng.next() % 10];
  }
  return out;
}

SynthSpec random_stream_spec(const std::string& stream_id, std::uint64_t seed, const RandomStreamOptions& o) {
  SynthSpec spec;
  spec.stream_id = stream_id;
  spec.seed = seed;
  spec.width = o.width;
  spec.height = o.height;
  spec.noise_level = o.noise_level;
  Rng rng(hash(seed, 0x5EC));
  std::int64_t t = o.lead_in;
  for (int k = 0; k < o.events; ++k) {
    if (k > 0) t += rng.range(o.min_gap, o.max_gap);
    VehicleEvent e;
    e.enter_frame = t;
    e.exit_frame = t + rng.range(o.min_visible, o.max_visible) - 1;
    const double h0 = rng.uniform(o.min_plate_h, o.max_plate_h);
    const double h1 = std::min(o.max_plate_h * 1.2, h0 * rng.uniform(1.0, 1.25));
    auto place = [&](double h) {
      const double w = 2 * h;
      return BoundingBox{rng.uniform(0, o.width - w), rng.uniform(0, o.height - h), w, h};
    };
    e.start_box = place(h0);
    e.end_box = place(h1);
    // Keep motion plausible: the end point stays near the start.
    e.end_box.x = std::clamp(e.start_box.x + rng.uniform(-80, 80), 0.0, o.width - e.end_box.w);
    e.end_box.y = std::clamp(e.start_box.y + rng.uniform(-40, 60), 0.0, o.height - e.end_box.h);
    e.plate_text = random_plate_text(hash(seed, static_cast<std::uint64_t>(k)));
    spec.events.push_back(e);
    t = e.exit_frame + 1;
  }
  spec.frames = t + o.tail;
  validate(spec);
  return spec;
}

namespace {

json box_json(const BoundingBox& b) { return {{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h}}; }
BoundingBox box_from(const json& j) {
  return {j.at("x").get<double>(), j.at("y").get<double>(), j.at("w").get<double>(), j.at("h").get<double>()};
}

}  // namespace

json spec_to_json(const SynthSpec& spec) {
  json events = json::array();
  for (const auto& e : spec.events) {
    events.push_back({{"enter_frame", e.enter_frame},
                      {"exit_frame", e.exit_frame},
                      {"start_box", box_json(e.start_box)},
                      {"end_box", box_json(e.end_box)},
                      {"plate_text", e.plate_text}});
  }
  return {{"stream_id", spec.stream_id}, {"seed", spec.seed},         {"width", spec.width},
          {"height", spec.height},       {"fps", spec.fps},           {"frames", spec.frames},
          {"noise_level", spec.noise_level}, {"clutter_rects", spec.clutter_rects}, {"events", std::move(events)}};
}

SynthSpec spec_from_json(const json& doc) {
  try {
    SynthSpec spec;
    spec.stream_id = doc.value("stream_id", spec.stream_id);
    spec.seed = doc.value("seed", spec.seed);
    spec.width = doc.value("width", spec.width);
    spec.height = doc.value("height", spec.height);
    spec.fps = doc.value("fps", spec.fps);
    spec.frames = doc.value("frames", spec.frames);
    spec.noise_level = doc.value("noise_level", spec.noise_level);
    spec.clutter_rects = doc.value("clutter_rects", spec.clutter_rects);
    for (const auto& e : doc.value("events", json::array())) {
      spec.events.push_back({e.at("enter_frame").get<std::int64_t>(), e.at("exit_frame").get<std::int64_t>(),
                             box_from(e.at("start_box")), box_from(e.at("end_box")),
                             e.at("plate_text").get<std::string>()});
    }
    validate(spec);
    return spec;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed synth spec: ") + e.what());
  }
}

std::vector<SynthSpec> corpus_from_json(const json& doc) {
  try {
    std::vector<SynthSpec> specs;
    if (doc.contains("streams")) {
      for (const auto& s : doc.at("streams")) specs.push_back(spec_from_json(s));
    } else if (doc.contains("random")) {
      const auto& r = doc.at("random");
      RandomStreamOptions o;
      o.events = r.value("events_per_stream", o.events);
      o.min_gap = r.value("min_gap", o.min_gap);
      o.max_gap = r.value("max_gap", o.max_gap);
      o.min_visible = r.value("min_visible", o.min_visible);
      o.max_visible = r.value("max_visible", o.max_visible);
      o.min_plate_h = r.value("min_plate_h", o.min_plate_h);
      o.max_plate_h = r.value("max_plate_h", o.max_plate_h);
      o.width = r.value("width", o.width);
      o.height = r.value("height", o.height);
      o.noise_level = r.value("noise_level", o.noise_level);
      const auto seed = r.value("seed", std::uint64_t{1});
      const int n = r.value("streams", 1);
      for (int i = 0; i < n; ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "stream-%03d", i);
        specs.push_back(random_stream_spec(id, hash(seed, static_cast<std::uint64_t>(i)), o));
      }
    } else {
      specs.push_back(spec_from_json(doc));
    }
    return specs;
  } catch (const json::exception& e) {
    throw SpecError(std::string("malformed corpus spec: ") + e.what());
  }
}

void write_corpus(const std::vector<SynthSpec>& specs, const std::filesystem::path& out) {
  std::filesystem::create_directories(out);
  ocr::OcrManifest manifest;
  for (const auto& spec : specs) {
    write_stream(spec, out / spec.stream_id);
    manifest.merge(make_manifest(spec));
  }
  ocr::save_manifest(out / "ocr_manifest.json", manifest);
}

}  // namespace plateflow::synth
