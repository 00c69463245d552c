#pragma once

#include <memory>
#include <string>

#include "plateflow/app/jobs.hpp"

namespace plateflow::app {

/// JSON HTTP API over a JobService. Errors are {"error":{"code","message"}}.
class ApiServer {
 public:
  ApiServer(JobService& service, int port = 0, std::string host = "127.0.0.1");
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  int port() const { return port_; }
  std::string base_url() const;
  /// Blocks until stop().
  void wait();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = 0;
  std::string host_;
};

}  // namespace plateflow::app
