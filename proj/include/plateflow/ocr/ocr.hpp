#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "plateflow/image.hpp"
#include "plateflow/ocr/manifest.hpp"

namespace plateflow::ocr {

struct OcrResult {
  std::string text;
  std::optional<double> confidence;
  double latency_s = 0;
};

class OcrError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Connection refused, timeout, or a broken exchange.
class TransportError : public OcrError {
 public:
  using OcrError::OcrError;
};

/// Non-2xx status or a body that does not follow the wire contract. status is 0 for body errors.
class ProtocolError : public OcrError {
 public:
  ProtocolError(int status, const std::string& what) : OcrError(what), status(status) {}
  int status;
};

class LookupError : public OcrError {
 public:
  using OcrError::OcrError;
};

struct RetryPolicy {
  int retries = 2;
  std::chrono::milliseconds backoff{250};
};

struct OcrEndpoint {
  std::string base_url;
  double timeout_s = 10;
  int max_parallel = 4;
  RetryPolicy retry;
};

void validate(const OcrEndpoint& ep);

/// Upper bound on one recognize call: timeout per attempt plus the doubling backoff between attempts.
double worst_case_seconds(const OcrEndpoint& ep);

/// Where a crop came from. The mock keys its ground truth on this.
struct Provenance {
  std::string stream_id;
  int instance_id = 0;
  bool operator==(const Provenance&) const = default;
};

struct OcrRequest {
  const Image* crop = nullptr;
  std::optional<Provenance> provenance;
};

class OcrService {
 public:
  virtual ~OcrService() = default;
  virtual OcrResult recognize(const OcrRequest& request) = 0;
  virtual std::string name() const = 0;
};

nlohmann::json request_to_json(const OcrRequest& request);

/// Speaks the JSON wire contract against {base_url}/v1/recognize.
class HttpOcrClient : public OcrService {
 public:
  explicit HttpOcrClient(OcrEndpoint ep);
  OcrResult recognize(const OcrRequest& request) override;
  std::string name() const override { return "http"; }
  const OcrEndpoint& endpoint() const { return ep_; }

 private:
  OcrResult attempt(const std::string& body) const;

  OcrEndpoint ep_;
  std::string host_;
  std::string path_;
};

struct ErrorModel {
  double char_sub_rate = 0;
  std::uint64_t seed = 0;
};

/// Character class used by the mock substitution. Codepoints outside every class are never substituted.
const std::vector<char32_t>* substitution_class(char32_t c);

/// Ground truth for (stream_id, instance_id) with each codepoint replaced, with probability char_sub_rate,
/// by a same-class codepoint that does not occur in the ground truth when one exists.
OcrResult mock_recognize(const Provenance& provenance, const OcrManifest& manifest, const ErrorModel& errors);

class MockOcr : public OcrService {
 public:
  MockOcr(OcrManifest manifest, ErrorModel errors) : manifest_(std::move(manifest)), errors_(errors) {}
  OcrResult recognize(const OcrRequest& request) override;
  std::string name() const override { return "mock"; }

 private:
  OcrManifest manifest_;
  ErrorModel errors_;
};

/// Bengali-block codepoints only, without virama, nukta and zero-width (non-)joiners.
std::string normalize_bangla(const std::string& text);

struct OcrOutcome {
  std::optional<OcrResult> result;
  std::string error;
  bool ok() const { return result.has_value(); }
};

/// Runs every request with at most max_parallel in flight; outcomes are in request order.
std::vector<OcrOutcome> recognize_all(OcrService& service, const std::vector<OcrRequest>& requests, int max_parallel);

/// Serves the wire contract on 127.0.0.1 from a MockOcr. Requests must carry provenance.
class MockOcrServer {
 public:
  MockOcrServer(OcrManifest manifest, ErrorModel errors, int port = 0, std::string host = "127.0.0.1");
  ~MockOcrServer();
  MockOcrServer(const MockOcrServer&) = delete;
  MockOcrServer& operator=(const MockOcrServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  std::size_t requests() const;
  /// Blocks until stop() is called from another thread.
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::string host_;
};

}  // namespace plateflow::ocr
