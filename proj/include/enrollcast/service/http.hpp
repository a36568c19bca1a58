#pragma once

#include <memory>
#include <string>

#include "enrollcast/error.hpp"
#include "enrollcast/service/store.hpp"

namespace enrollcast::service {

/// HTTP status for a library error: 400 input, 404 unknown id, 409
/// duplicate, 422 domain failure, 500 internal.
int http_status(ErrorCode code) noexcept;

/// JSON API over a Store. Training requests run as background jobs, one at a
/// time per dataset; prediction routes never wait on them.
class HttpService {
 public:
  explicit HttpService(Store& store, unsigned search_threads = 1);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Returns the bound port, or -1.
  int bind(const std::string& host, int port);
  int bind_any_port(const std::string& host = "127.0.0.1");
  /// Blocks until stop().
  bool run();
  void stop();
  /// Blocks until every submitted job has finished.
  void wait_for_jobs();

 private:
  class Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace enrollcast::service
