#include "plateflow/pipeline/frame_source.hpp"

#include <cstdio>

#include "plateflow/image_io.hpp"

namespace plateflow::pipeline {

using nlohmann::json;

StreamInfo stream_info_from_json(const json& doc) {
  try {
    if (doc.value("v", 0) != 1) throw SourceError("stream.json: unsupported version");
    StreamInfo info;
    info.fps = doc.at("fps").get<double>();
    info.frames = doc.at("frames").get<std::int64_t>();
    info.width = doc.at("width").get<int>();
    info.height = doc.at("height").get<int>();
    if (!(info.fps > 0) || info.frames < 0 || info.width < 1 || info.height < 1) {
      throw SourceError("stream.json: invalid stream parameters");
    }
    return info;
  } catch (const json::exception& e) {
    throw SourceError(std::string("stream.json: ") + e.what());
  }
}

json stream_info_to_json(const StreamInfo& info) {
  return {{"v", 1}, {"fps", info.fps}, {"frames", info.frames}, {"width", info.width}, {"height", info.height}};
}

StreamInfo read_stream_info(const std::filesystem::path& stream_dir) {
  const auto path = stream_dir / "stream.json";
  if (!std::filesystem::exists(path)) throw SourceError("missing " + path.string());
  json doc;
  try {
    doc = json::parse(io::read_text(path));
  } catch (const json::exception& e) {
    throw SourceError(path.string() + ": " + e.what());
  }
  return stream_info_from_json(doc);
}

DirectoryFrameSource::DirectoryFrameSource(std::filesystem::path dir)
    : dir_(std::move(dir)), info_(read_stream_info(dir_)) {}

std::optional<Frame> DirectoryFrameSource::next() {
  if (cursor_ >= info_.frames) return std::nullopt;
  char name[32];
  std::snprintf(name, sizeof(name), "%06lld", static_cast<long long>(cursor_));
  const auto pgm = dir_ / (std::string(name) + ".pgm");
  const auto png = dir_ / (std::string(name) + ".png");
  Frame frame;
  try {
    if (std::filesystem::exists(pgm)) {
      frame.gray = io::read_pgm(pgm, cursor_);
    } else if (std::filesystem::exists(png)) {
      auto color = std::make_shared<Image>(io::read_png(png));
      frame.gray = to_gray(*color, cursor_);
      if (color->channels == 3) frame.color = std::move(color);
    } else {
      throw SourceError("missing frame file " + pgm.string());
    }
  } catch (const ImageError& e) {
    throw SourceError(e.what());
  }
  if (frame.gray.width != info_.width || frame.gray.height != info_.height) {
    throw SourceError("frame " + std::string(name) + " does not match stream.json dimensions");
  }
  ++cursor_;
  return frame;
}

MemoryFrameSource::MemoryFrameSource(std::vector<GrayFrame> frames, double fps) : frames_(std::move(frames)) {
  info_.fps = fps;
  info_.frames = static_cast<std::int64_t>(frames_.size());
  if (!frames_.empty()) {
    info_.width = frames_.front().width;
    info_.height = frames_.front().height;
  }
}

std::optional<Frame> MemoryFrameSource::next() {
  if (cursor_ >= frames_.size()) return std::nullopt;
  Frame f{std::move(frames_[cursor_]), nullptr};
  f.gray.frame_index = static_cast<std::int64_t>(cursor_);
  ++cursor_;
  return f;
}

SynthFrameSource::SynthFrameSource(synth::SynthSpec spec) : spec_(std::move(spec)) {
  synth::validate(spec_);
  info_ = {spec_.fps, spec_.frames, spec_.width, spec_.height};
}

std::optional<Frame> SynthFrameSource::next() {
  if (cursor_ >= spec_.frames) return std::nullopt;
  return Frame{synth::render_frame(spec_, cursor_++), nullptr};
}

}  // namespace plateflow::pipeline
