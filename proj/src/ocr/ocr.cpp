#include "plateflow/ocr/ocr.hpp"

#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <random>
#include <set>

#include "plateflow/encoding.hpp"
#include "plateflow/image_io.hpp"

namespace plateflow::ocr {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<char32_t> span_of(std::initializer_list<std::pair<char32_t, char32_t>> ranges) {
  std::vector<char32_t> out;
  for (auto [lo, hi] : ranges)
    for (char32_t c = lo; c <= hi; ++c) out.push_back(c);
  return out;
}

const std::vector<std::vector<char32_t>>& classes() {
  static const std::vector<std::vector<char32_t>> all = {
      // Consonants, including the nukta forms and khanda ta.
      span_of({{0x0995, 0x09A8}, {0x09AA, 0x09B0}, {0x09B2, 0x09B2}, {0x09B6, 0x09B9}, {0x09CE, 0x09CE},
               {0x09DC, 0x09DD}, {0x09DF, 0x09DF}}),
      span_of({{0x0985, 0x098C}, {0x098F, 0x0990}, {0x0993, 0x0994}}),
      span_of({{0x09BE, 0x09C4}, {0x09C7, 0x09C8}, {0x09CB, 0x09CC}, {0x09D7, 0x09D7}}),
      span_of({{0x0981, 0x0983}, {0x09BC, 0x09BC}, {0x09CD, 0x09CD}}),
      span_of({{0x09E6, 0x09EF}}),
      span_of({{U'0', U'9'}}),
      span_of({{U'A', U'Z'}}),
      span_of({{U'a', U'z'}}),
      {U' ', U'-', U'.', U',', U'/', U':', U'_'},
      {0x200C, 0x200D},
  };
  return all;
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

void json_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(nlohmann::json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

}  // namespace

void validate(const OcrEndpoint& ep) {
  if (ep.base_url.rfind("http://", 0) != 0) throw OcrError("OCR base URL must start with http://");
  if (!(ep.timeout_s > 0)) throw OcrError("OCR timeout must be positive");
  if (ep.max_parallel < 1) throw OcrError("max_parallel must be at least 1");
  if (ep.retry.retries < 0 || ep.retry.backoff.count() < 0) throw OcrError("invalid retry policy");
}

double worst_case_seconds(const OcrEndpoint& ep) {
  double backoff = 0;
  for (int i = 0; i < ep.retry.retries; ++i) backoff += std::ldexp(ep.retry.backoff.count() / 1000.0, i);
  return ep.timeout_s * (ep.retry.retries + 1) + backoff;
}

nlohmann::json request_to_json(const OcrRequest& request) {
  if (request.crop == nullptr || request.crop->empty()) throw OcrError("OCR crop is empty");
  nlohmann::json body{{"v", 1}, {"image_b64", base64_encode(io::encode_png(*request.crop))}, {"lang_hint", "bn"}};
  if (request.provenance) {
    body["provenance"] = {{"stream_id", request.provenance->stream_id},
                          {"instance_id", request.provenance->instance_id}};
  }
  return body;
}

HttpOcrClient::HttpOcrClient(OcrEndpoint ep) : ep_(std::move(ep)) {
  validate(ep_);
  const auto rest = ep_.base_url.substr(7);
  const auto slash = rest.find('/');
  host_ = "http://" + rest.substr(0, slash);
  path_ = slash == std::string::npos ? "" : rest.substr(slash);
  while (!path_.empty() && path_.back() == '/') path_.pop_back();
  path_ += "/v1/recognize";
}

OcrResult HttpOcrClient::attempt(const std::string& body) const {
  httplib::Client client(host_);
  const auto sec = static_cast<time_t>(ep_.timeout_s);
  const auto usec = static_cast<time_t>((ep_.timeout_s - static_cast<double>(sec)) * 1e6);
  client.set_connection_timeout(sec, usec);
  client.set_read_timeout(sec, usec);
  client.set_write_timeout(sec, usec);
  const auto start = Clock::now();
  auto res = client.Post(path_, body, "application/json");
  if (!res) throw TransportError("OCR request to " + host_ + path_ + " failed: " + httplib::to_string(res.error()));
  if (res->status < 200 || res->status >= 300) {
    throw ProtocolError(res->status, "OCR service returned status " + std::to_string(res->status));
  }
  OcrResult out;
  try {
    const auto doc = nlohmann::json::parse(res->body);
    if (doc.value("v", 0) != 1) throw ProtocolError(0, "OCR response has unsupported version");
    out.text = doc.at("text").get<std::string>();
    if (doc.contains("confidence") && !doc.at("confidence").is_null()) {
      out.confidence = doc.at("confidence").get<double>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(0, std::string("malformed OCR response: ") + e.what());
  }
  out.latency_s = std::chrono::duration<double>(Clock::now() - start).count();
  return out;
}

OcrResult HttpOcrClient::recognize(const OcrRequest& request) {
  const auto body = request_to_json(request).dump();
  auto delay = ep_.retry.backoff;
  for (int attempt_no = 0;; ++attempt_no) {
    try {
      return attempt(body);
    } catch (const ProtocolError& e) {
      if ((e.status >= 400 && e.status < 500) || attempt_no >= ep_.retry.retries) throw;
    } catch (const TransportError&) {
      if (attempt_no >= ep_.retry.retries) throw;
    }
    std::this_thread::sleep_for(delay);
    delay *= 2;
  }
}

const std::vector<char32_t>* substitution_class(char32_t c) {
  for (const auto& cls : classes()) {
    if (std::find(cls.begin(), cls.end(), c) != cls.end()) return &cls;
  }
  return nullptr;
}

OcrResult mock_recognize(const Provenance& provenance, const OcrManifest& manifest, const ErrorModel& errors) {
  const auto* truth = manifest.lookup(provenance.stream_id, provenance.instance_id);
  if (truth == nullptr) {
    throw LookupError("no ground truth for " + provenance.stream_id + "/" + std::to_string(provenance.instance_id));
  }
  if (!(errors.char_sub_rate >= 0 && errors.char_sub_rate <= 1)) throw OcrError("char_sub_rate must be in [0, 1]");
  auto cps = utf8_decode(*truth);
  const std::set<char32_t> present(cps.begin(), cps.end());
  std::seed_seq seq{static_cast<std::uint32_t>(errors.seed), static_cast<std::uint32_t>(errors.seed >> 32),
                    static_cast<std::uint32_t>(fnv1a(provenance.stream_id)),
                    static_cast<std::uint32_t>(fnv1a(provenance.stream_id) >> 32),
                    static_cast<std::uint32_t>(provenance.instance_id)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto& c : cps) {
    const bool hit = u01(rng) < errors.char_sub_rate;
    const auto* cls = substitution_class(c);
    if (!hit || cls == nullptr) continue;
    std::vector<char32_t> pool;
    for (char32_t k : *cls)
      if (!present.count(k)) pool.push_back(k);
    if (pool.empty()) {
      for (char32_t k : *cls)
        if (k != c) pool.push_back(k);
    }
    if (pool.empty()) continue;
    c = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
  }
  return {utf8_encode(cps), 1.0 - errors.char_sub_rate, 0.0};
}

OcrResult MockOcr::recognize(const OcrRequest& request) {
  if (request.crop == nullptr || request.crop->empty()) throw OcrError("OCR crop is empty");
  if (!request.provenance) throw OcrError("mock OCR needs provenance");
  return mock_recognize(*request.provenance, manifest_, errors_);
}

std::string normalize_bangla(const std::string& text) {
  std::u32string out;
  for (char32_t c : utf8_decode(text)) {
    if (c < 0x0980 || c > 0x09FF || c == 0x09CD || c == 0x09BC) continue;
    out.push_back(c);
  }
  return utf8_encode(out);
}

std::vector<OcrOutcome> recognize_all(OcrService& service, const std::vector<OcrRequest>& requests,
                                      int max_parallel) {
  if (max_parallel < 1) throw OcrError("max_parallel must be at least 1");
  std::vector<OcrOutcome> out(requests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < requests.size(); i = next++) {
      try {
        out[i].result = service.recognize(requests[i]);
      } catch (const std::exception& e) {
        out[i].error = e.what();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(max_parallel), requests.size());
  std::vector<std::thread> pool;
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  return out;
}

struct MockOcrServer::Impl {
  MockOcr mock;
  httplib::Server server;
  std::thread thread;
  std::atomic<std::size_t> requests{0};
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;

  Impl(OcrManifest manifest, ErrorModel errors) : mock(std::move(manifest), errors) {}
};

MockOcrServer::MockOcrServer(OcrManifest manifest, ErrorModel errors, int port, std::string host)
    : impl_(std::make_unique<Impl>(std::move(manifest), errors)), host_(std::move(host)) {
  auto* impl = impl_.get();
  impl->server.Post("/v1/recognize", [impl](const httplib::Request& req, httplib::Response& res) {
    ++impl->requests;
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(req.body);
    } catch (const nlohmann::json::exception&) {
      return json_error(res, 400, "bad_json", "request body is not JSON");
    }
    if (!body.is_object() || body.value("v", 0) != 1) return json_error(res, 400, "bad_version", "expected v 1");
    const Image crop = [&] {
      try {
        return io::decode_png(base64_decode(body.at("image_b64").get<std::string>()));
      } catch (const std::exception&) {
        return Image{};
      }
    }();
    if (crop.empty()) return json_error(res, 400, "bad_image", "image_b64 is not a base64 PNG");
    if (!body.contains("provenance")) return json_error(res, 400, "no_provenance", "mock OCR needs provenance");
    try {
      const auto& p = body.at("provenance");
      OcrRequest request{&crop, Provenance{p.at("stream_id").get<std::string>(), p.at("instance_id").get<int>()}};
      const auto r = impl->mock.recognize(request);
      res.set_content(nlohmann::json{{"v", 1}, {"text", r.text}, {"confidence", *r.confidence}}.dump(),
                      "application/json");
    } catch (const LookupError& e) {
      json_error(res, 404, "unknown_plate", e.what());
    } catch (const std::exception& e) {
      json_error(res, 400, "bad_request", e.what());
    }
  });
  port_ = port == 0 ? impl->server.bind_to_any_port(host_) : (impl->server.bind_to_port(host_, port) ? port : -1);
  if (port_ <= 0) throw TransportError("cannot bind mock OCR server on " + host_ + ":" + std::to_string(port));
  impl->thread = std::thread([impl] { impl->server.listen_after_bind(); });
  impl->server.wait_until_ready();
}

MockOcrServer::~MockOcrServer() { stop(); }

std::string MockOcrServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

std::size_t MockOcrServer::requests() const { return impl_->requests.load(); }

void MockOcrServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [&] { return impl_->stopped; });
}

void MockOcrServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->cv.notify_all();
}

}  // namespace plateflow::ocr
