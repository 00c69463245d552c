#include "plateflow/app/server.hpp"

#include <httplib.h>

#include <condition_variable>
#include <mutex>
#include <thread>

#include "plateflow/app/config.hpp"
#include "plateflow/image_io.hpp"

namespace plateflow::app {

using nlohmann::json;

namespace {

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
  res.status = status;
  res.set_content(json{{"error", {{"code", code}, {"message", message}}}}.dump(), "application/json");
}

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

/// Runs a handler and maps exceptions to error documents.
template <class F>
httplib::Server::Handler guarded(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    try {
      f(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.http_status, e.code, e.what());
    } catch (const ConfigError& e) {
      send_error(res, 400, "invalid_config", e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, "bad_json", e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, "internal", e.what());
    }
  };
}

int int_param(const httplib::Request& req, std::size_t i) { return std::stoi(req.matches[i].str()); }

}  // namespace

struct ApiServer::Impl {
  httplib::Server server;
  std::thread thread;
  std::mutex mu;
  std::condition_variable cv;
  bool stopped = false;
};

ApiServer::ApiServer(JobService& service, int port, std::string host)
    : impl_(std::make_unique<Impl>()), host_(std::move(host)) {
  auto& s = impl_->server;
  JobService* svc = &service;

  s.Post("/api/v1/jobs", guarded([svc](const httplib::Request& req, httplib::Response& res) {
           JobRequest request;
           if (req.is_multipart_form_data()) {
             std::vector<std::pair<std::string, std::string>> files;
             for (const auto& [field, part] : req.files) {
               if (field == "config") {
                 request.config = json::parse(part.content);
               } else {
                 files.emplace_back(part.filename.empty() ? field : part.filename, part.content);
               }
             }
             request.stream_dir = svc->stage_upload(files);
           } else {
             const auto body = json::parse(req.body);
             if (!body.contains("stream")) throw ServiceError("invalid", 400, "body needs a stream path");
             request.stream_dir = body.at("stream").get<std::string>();
             if (body.contains("config")) request.config = body.at("config");
           }
           const auto id = svc->submit(request);
           send_json(res, {{"job_id", id}, {"status", to_string(svc->get(id).status)}}, 202);
         }));

  s.Get(R"(/api/v1/jobs/([A-Za-z0-9-]+))", guarded([svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, svc->job_view(req.matches[1].str()));
        }));

  s.Get(R"(/api/v1/jobs/([A-Za-z0-9-]+)/instances)",
        guarded([svc](const httplib::Request& req, httplib::Response& res) {
          res.set_content(svc->instances_document(req.matches[1].str()), "application/json");
        }));

  s.Get(R"(/api/v1/instances/([A-Za-z0-9-]+)/(\d+)/candidates/(\d+)\.png)",
        guarded([svc](const httplib::Request& req, httplib::Response& res) {
          const auto path = svc->candidate_png(req.matches[1].str(), int_param(req, 2), int_param(req, 3));
          const auto bytes = io::read_file(path);
          res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
        }));

  s.Post(R"(/api/v1/instances/([A-Za-z0-9-]+)/(\d+)/select)",
         guarded([svc](const httplib::Request& req, httplib::Response& res) {
           const auto body = json::parse(req.body);
           if (!body.contains("rank") || !body.at("rank").is_number_integer()) {
             throw ServiceError("invalid", 400, "body needs an integer rank");
           }
           send_json(res, svc->select(req.matches[1].str(), int_param(req, 2), body.at("rank").get<int>()));
         }));

  s.Post(R"(/api/v1/instances/([A-Za-z0-9-]+)/(\d+)/save)",
         guarded([svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, record_to_json(svc->save(req.matches[1].str(), int_param(req, 2))));
         }));

  s.Delete(R"(/api/v1/instances/([A-Za-z0-9-]+)/(\d+))",
           guarded([svc](const httplib::Request& req, httplib::Response& res) {
             send_json(res, record_to_json(svc->remove(req.matches[1].str(), int_param(req, 2))));
           }));

  s.Get("/api/v1/results", guarded([svc](const httplib::Request&, httplib::Response& res) {
          json rows = json::array();
          for (const auto& r : svc->results()) rows.push_back(record_to_json(r));
          send_json(res, {{"results", rows}});
        }));

  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) {
      send_error(res, res.status, res.status == 404 ? "not_found" : "http_error",
                 "HTTP " + std::to_string(res.status));
    }
  });

  port_ = port == 0 ? s.bind_to_any_port(host_) : (s.bind_to_port(host_, port) ? port : -1);
  if (port_ <= 0) throw ServiceError("storage", 500, "cannot bind " + host_ + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  s.wait_until_ready();
}

ApiServer::~ApiServer() { stop(); }

std::string ApiServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

void ApiServer::wait() {
  std::unique_lock lock(impl_->mu);
  impl_->cv.wait(lock, [&] { return impl_->stopped; });
}

void ApiServer::stop() {
  {
    std::lock_guard lock(impl_->mu);
    if (impl_->stopped) return;
    impl_->stopped = true;
  }
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  impl_->cv.notify_all();
}

}  // namespace plateflow::app
