#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "plateflow/detect/box_ops.hpp"
#include "plateflow/eval/annotation.hpp"
#include "plateflow/image.hpp"

namespace plateflow::detect {

/// Raised when a backbone cannot produce a result for a frame.
class DetectorFailure : public std::runtime_error {
 public:
  DetectorFailure(std::int64_t frame_index, const std::string& what)
      : std::runtime_error(what), frame_index_(frame_index) {}
  std::int64_t frame_index() const { return frame_index_; }

 private:
  std::int64_t frame_index_;
};

struct NmsParams {
  double score_thr = 0.1;
  double iou_thr = 0.4;
};

struct ConfidenceLaw {
  enum class Kind { Constant, Uniform };
  Kind kind = Kind::Constant;
  double value = 1.0;  // Constant
  double lo = 0.5;     // Uniform
  double hi = 1.0;
};

struct OracleNoise {
  double miss_rate = 0;
  double jitter_px = 0;
  ConfidenceLaw confidence;
  std::uint64_t seed = 1;
};

struct SubprocessConfig {
  /// Run through /bin/sh -c.
  std::string command;
  std::chrono::milliseconds handshake_timeout{5000};
  std::chrono::milliseconds response_timeout{5000};
};

enum class FailurePolicy { Skip, Abort };

struct DetectorConfig {
  enum class Kind { Oracle, Subprocess };
  Kind kind = Kind::Oracle;
  double confidence_threshold = 0.5;
  std::optional<NmsParams> nms;
  OracleNoise oracle;
  SubprocessConfig subprocess;
  FailurePolicy on_failure = FailurePolicy::Skip;
};

void validate(const DetectorConfig& config);

/// Optional NMS, then keeps detections with confidence strictly above the threshold.
std::vector<Detection> postprocess(std::vector<Detection> dets, const DetectorConfig& config);

class Detector {
 public:
  virtual ~Detector() = default;
  /// Raw detections for one frame, before postprocess().
  virtual std::vector<Detection> detect(const Image& frame, std::int64_t frame_index) = 0;
  virtual std::string name() const = 0;
};

/// Ground-truth stand-in: reports annotated plates with optional misses, corner
/// jitter and a confidence law. Pure function of (annotation, noise, frame_index).
class OracleDetector : public Detector {
 public:
  OracleDetector(eval::VideoAnnotation annotation, OracleNoise noise);
  std::vector<Detection> detect(const Image& frame, std::int64_t frame_index) override;
  std::vector<Detection> detect_index(std::int64_t frame_index) const;
  std::string name() const override { return "oracle"; }

 private:
  eval::VideoAnnotation annotation_;
  OracleNoise noise_;
};

/// Hosts an external backbone over newline-delimited JSON on the child's stdin/stdout.
class SubprocessDetector : public Detector {
 public:
  explicit SubprocessDetector(SubprocessConfig config);
  ~SubprocessDetector() override;
  SubprocessDetector(const SubprocessDetector&) = delete;
  SubprocessDetector& operator=(const SubprocessDetector&) = delete;

  std::vector<Detection> detect(const Image& frame, std::int64_t frame_index) override;
  std::string name() const override { return "subprocess"; }
  bool alive() const { return pid_ > 0 && !broken_; }

 private:
  std::string read_line(std::chrono::milliseconds timeout, std::int64_t frame_index);
  void write_all(const std::string& data, std::int64_t frame_index);
  [[noreturn]] void fail(std::int64_t frame_index, const std::string& what);
  void shutdown();

  SubprocessConfig config_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  bool broken_ = false;
  std::string pending_;
};

/// Adds a fixed latency to another detector and counts invocations.
class SimulatedDetector : public Detector {
 public:
  SimulatedDetector(std::unique_ptr<Detector> inner, std::chrono::microseconds latency);
  std::vector<Detection> detect(const Image& frame, std::int64_t frame_index) override;
  std::string name() const override { return "simulated-" + inner_->name(); }
  long calls() const { return calls_; }

 private:
  std::unique_ptr<Detector> inner_;
  std::chrono::microseconds latency_;
  std::atomic<long> calls_{0};
};

/// Builds the configured backbone. The oracle needs the stream's annotation.
std::unique_ptr<Detector> make_detector(const DetectorConfig& config, const eval::VideoAnnotation* annotation);

}  // namespace plateflow::detect
