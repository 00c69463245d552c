#include "plateflow/detect/detector.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <random>
#include <thread>

#include <json.hpp>

#include "plateflow/encoding.hpp"

namespace plateflow::detect {

using nlohmann::json;

void validate(const DetectorConfig& c) {
  auto unit = [](double v) { return v >= 0 && v <= 1; };
  if (!unit(c.confidence_threshold)) throw std::invalid_argument("confidence_threshold must be in [0, 1]");
  if (c.nms && (!unit(c.nms->score_thr) || !unit(c.nms->iou_thr))) {
    throw std::invalid_argument("nms thresholds must be in [0, 1]");
  }
  if (!unit(c.oracle.miss_rate)) throw std::invalid_argument("miss_rate must be in [0, 1]");
  if (c.oracle.jitter_px < 0) throw std::invalid_argument("jitter_px must be >= 0");
  const auto& law = c.oracle.confidence;
  if (law.kind == ConfidenceLaw::Kind::Constant && !unit(law.value)) {
    throw std::invalid_argument("constant confidence must be in [0, 1]");
  }
  if (law.kind == ConfidenceLaw::Kind::Uniform && !(unit(law.lo) && unit(law.hi) && law.lo <= law.hi)) {
    throw std::invalid_argument("uniform confidence bounds must satisfy 0 <= lo <= hi <= 1");
  }
  if (c.kind == DetectorConfig::Kind::Subprocess && c.subprocess.command.empty()) {
    throw std::invalid_argument("subprocess detector needs a command");
  }
}

std::vector<Detection> postprocess(std::vector<Detection> dets, const DetectorConfig& config) {
  if (config.nms) dets = nms(std::move(dets), config.nms->score_thr, config.nms->iou_thr);
  std::erase_if(dets, [&](const Detection& d) { return !(d.confidence > config.confidence_threshold); });
  return dets;
}

// Oracle ---------------------------------------------------------------------

OracleDetector::OracleDetector(eval::VideoAnnotation annotation, OracleNoise noise)
    : annotation_(std::move(annotation)), noise_(noise) {}

std::vector<Detection> OracleDetector::detect(const Image&, std::int64_t frame_index) {
  return detect_index(frame_index);
}

std::vector<Detection> OracleDetector::detect_index(std::int64_t frame_index) const {
  std::vector<Detection> out;
  for (const auto& [instance, box] : annotation_.boxes_at(frame_index)) {
    std::seed_seq seq{static_cast<std::uint32_t>(noise_.seed), static_cast<std::uint32_t>(noise_.seed >> 32),
                      static_cast<std::uint32_t>(frame_index), static_cast<std::uint32_t>(frame_index >> 32),
                      static_cast<std::uint32_t>(instance)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    if (noise_.miss_rate > 0 && u01(rng) < noise_.miss_rate) continue;
    BoundingBox b = box;
    if (noise_.jitter_px > 0) {
      std::uniform_real_distribution<double> j(-noise_.jitter_px, noise_.jitter_px);
      const double x0 = box.x + j(rng), y0 = box.y + j(rng);
      const double x1 = box.right() + j(rng), y1 = box.bottom() + j(rng);
      b = {x0, y0, std::max(x1 - x0, 1.0), std::max(y1 - y0, 1.0)};
    }
    double conf = noise_.confidence.value;
    if (noise_.confidence.kind == ConfidenceLaw::Kind::Uniform) {
      conf = noise_.confidence.lo + (noise_.confidence.hi - noise_.confidence.lo) * u01(rng);
    }
    out.push_back({b, conf, frame_index});
  }
  return out;
}

// Subprocess -----------------------------------------------------------------

namespace {

using Clock = std::chrono::steady_clock;

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

SubprocessDetector::SubprocessDetector(SubprocessConfig config) : config_(std::move(config)) {
  // A dead child must surface as EPIPE, not kill the host.
  ::signal(SIGPIPE, SIG_IGN);
  int in_pipe[2], out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw DetectorFailure(-1, "pipe failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    throw DetectorFailure(-1, "pipe failed");
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    throw DetectorFailure(-1, "fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", config_.command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  pid_ = pid;
  ::setpgid(pid, pid);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];

  const std::string line = read_line(config_.handshake_timeout, -1);
  json hello;
  try {
    hello = json::parse(line);
  } catch (const json::exception&) {
    fail(-1, "detector handshake is not JSON: " + line);
  }
  if (!hello.is_object() || hello.value("v", 0) != 1 || !hello.value("ready", false)) {
    fail(-1, "unexpected detector handshake: " + line);
  }
}

SubprocessDetector::~SubprocessDetector() { shutdown(); }

void SubprocessDetector::shutdown() {
  close_fd(to_child_);
  close_fd(from_child_);
  if (pid_ > 0) {
    const auto deadline = Clock::now() + std::chrono::milliseconds(500);
    int status = 0;
    while (::waitpid(pid_, &status, WNOHANG) == 0) {
      if (Clock::now() > deadline) {
        ::kill(-pid_, SIGKILL);
        ::waitpid(pid_, &status, 0);
        break;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    pid_ = -1;
  }
}

void SubprocessDetector::fail(std::int64_t frame_index, const std::string& what) {
  broken_ = true;
  if (pid_ > 0) ::kill(-pid_, SIGKILL);
  shutdown();
  throw DetectorFailure(frame_index, what);
}

std::string SubprocessDetector::read_line(std::chrono::milliseconds timeout, std::int64_t frame_index) {
  const auto deadline = Clock::now() + timeout;
  while (true) {
    const auto nl = pending_.find('\n');
    if (nl != std::string::npos) {
      std::string line = pending_.substr(0, nl);
      pending_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
    if (left <= 0) fail(frame_index, "detector response timed out");
    pollfd pfd{from_child_, POLLIN, 0};
    const int rc = ::poll(&pfd, 1, static_cast<int>(left));
    if (rc < 0) {
      if (errno == EINTR) continue;
      fail(frame_index, std::string("poll failed: ") + std::strerror(errno));
    }
    if (rc == 0) continue;
    char buf[65536];
    const ssize_t n = ::read(from_child_, buf, sizeof(buf));
    if (n < 0) {
      if (errno == EINTR || errno == EAGAIN) continue;
      fail(frame_index, std::string("read from detector failed: ") + std::strerror(errno));
    }
    if (n == 0) fail(frame_index, "detector exited");
    pending_.append(buf, static_cast<std::size_t>(n));
  }
}

void SubprocessDetector::write_all(const std::string& data, std::int64_t frame_index) {
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t n = ::write(to_child_, data.data() + off, data.size() - off);
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(frame_index, std::string("write to detector failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(n);
  }
}

std::vector<Detection> SubprocessDetector::detect(const Image& frame, std::int64_t frame_index) {
  if (!alive()) throw DetectorFailure(frame_index, "detector process is not running");
  const json request = {{"v", 1},
                        {"frame_id", frame_index},
                        {"width", frame.width},
                        {"height", frame.height},
                        {"channels", frame.channels},
                        {"pixels_b64", base64_encode(frame.pixels)}};
  write_all(request.dump() + "\n", frame_index);
  const std::string line = read_line(config_.response_timeout, frame_index);
  std::vector<Detection> out;
  try {
    const auto doc = json::parse(line);
    if (doc.value("v", 0) != 1) fail(frame_index, "detector response has wrong version");
    if (doc.at("frame_id").get<std::int64_t>() != frame_index) {
      fail(frame_index, "detector response out of order: " + line);
    }
    for (const auto& b : doc.at("boxes")) {
      const double score = b.at("score").get<double>();
      if (!(score >= 0 && score <= 1)) fail(frame_index, "detector score outside [0, 1]");
      out.push_back({{b.at("x").get<double>(), b.at("y").get<double>(), b.at("w").get<double>(),
                      b.at("h").get<double>()},
                     score,
                     frame_index});
    }
  } catch (const json::exception& e) {
    fail(frame_index, std::string("malformed detector response: ") + e.what());
  }
  return out;
}

SimulatedDetector::SimulatedDetector(std::unique_ptr<Detector> inner, std::chrono::microseconds latency)
    : inner_(std::move(inner)), latency_(latency) {}

std::vector<Detection> SimulatedDetector::detect(const Image& frame, std::int64_t frame_index) {
  ++calls_;
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return inner_->detect(frame, frame_index);
}

std::unique_ptr<Detector> make_detector(const DetectorConfig& config, const eval::VideoAnnotation* annotation) {
  validate(config);
  if (config.kind == DetectorConfig::Kind::Oracle) {
    if (annotation == nullptr) throw std::invalid_argument("oracle detector needs the stream annotation");
    return std::make_unique<OracleDetector>(*annotation, config.oracle);
  }
  return std::make_unique<SubprocessDetector>(config.subprocess);
}

}  // namespace plateflow::detect
