#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "plateflow/image.hpp"
#include "plateflow/synth/generator.hpp"

namespace plateflow::pipeline {

/// Contents of stream.json.
struct StreamInfo {
  double fps = 24;
  std::int64_t frames = 0;
  int width = 0;
  int height = 0;
};

class SourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

StreamInfo stream_info_from_json(const nlohmann::json& doc);
nlohmann::json stream_info_to_json(const StreamInfo& info);
StreamInfo read_stream_info(const std::filesystem::path& stream_dir);

/// One ingested frame. `color` is set only when the source has colour data.
struct Frame {
  GrayFrame gray;
  std::shared_ptr<const Image> color;
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const StreamInfo& info() const = 0;
  /// Next frame in index order, or nullopt at end of stream.
  virtual std::optional<Frame> next() = 0;
};

/// Reads %06d.pgm (or %06d.png) frames listed by <dir>/stream.json.
class DirectoryFrameSource : public FrameSource {
 public:
  explicit DirectoryFrameSource(std::filesystem::path dir);
  const StreamInfo& info() const override { return info_; }
  std::optional<Frame> next() override;

 private:
  std::filesystem::path dir_;
  StreamInfo info_;
  std::int64_t cursor_ = 0;
};

class MemoryFrameSource : public FrameSource {
 public:
  MemoryFrameSource(std::vector<GrayFrame> frames, double fps = 24);
  const StreamInfo& info() const override { return info_; }
  std::optional<Frame> next() override;

 private:
  std::vector<GrayFrame> frames_;
  StreamInfo info_;
  std::size_t cursor_ = 0;
};

/// Renders a synthetic stream on the fly.
class SynthFrameSource : public FrameSource {
 public:
  explicit SynthFrameSource(synth::SynthSpec spec);
  const StreamInfo& info() const override { return info_; }
  std::optional<Frame> next() override;

 private:
  synth::SynthSpec spec_;
  StreamInfo info_;
  std::int64_t cursor_ = 0;
};

}  // namespace plateflow::pipeline
