#pragma once

#include <functional>
#include <string>

#include "atcor/service/service.hpp"

namespace atcor::service {

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;  // optional planner assets served at /
};

// Blocks until stop() is called from another thread (or the process ends).
class HttpServer {
 public:
  HttpServer(const Service& service, ServerOptions options);
  ~HttpServer();
  // Returns false when the port cannot be bound. `on_ready` runs once the
  // socket listens, with the bound port.
  bool run(const std::function<void(int port)>& on_ready = {});
  // Binds an ephemeral port and serves on a background thread; returns it.
  int start_background();
  void stop();

 private:
  struct Impl;
  Impl* impl_;
};

}  // namespace atcor::service
