#include "atcor/service/http_server.hpp"

#include <httplib.h>
#include <json.hpp>

#include <thread>

#include "atcor/common/log.hpp"

namespace atcor::service {

namespace {

std::optional<std::size_t> size_param(const httplib::Request& req, const char* name, bool& bad) {
  if (!req.has_param(name)) return std::nullopt;
  const auto v = req.get_param_value(name);
  if (v.empty() || v.size() > 12 || v.find_first_not_of("0123456789") != std::string::npos) {
    bad = true;
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoull(v));
}

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body, "application/json");
}

Response error_response(int status, const std::string& message) {
  return {status, nlohmann::json{{"error", message}}.dump()};
}

}  // namespace

struct HttpServer::Impl {
  ServerOptions options;
  httplib::Server server;
  std::thread thread;
};

HttpServer::HttpServer(const Service& svc, ServerOptions options) : impl_(new Impl{std::move(options), {}, {}}) {
  auto& srv = impl_->server;
  srv.Get("/health", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.health()); });
  srv.Get("/stations", [&svc](const httplib::Request& req, httplib::Response& res) {
    bool bad = false;
    const auto offset = size_param(req, "offset", bad);
    const auto limit = size_param(req, "limit", bad);
    if (bad) return send(res, error_response(400, "offset and limit must be non-negative integers"));
    send(res, svc.stations(offset, limit));
  });
  srv.Get("/clusters", [&svc](const httplib::Request&, httplib::Response& res) { send(res, svc.clusters()); });
  srv.Get(R"(/stations/([^/]+)/prediction)", [&svc](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("from") || !req.has_param("to"))
      return send(res, error_response(400, "from and to query parameters are required"));
    send(res, svc.prediction(req.matches[1].str(), req.get_param_value("from"), req.get_param_value("to")));
  });
  srv.Post("/candidates",
           [&svc](const httplib::Request& req, httplib::Response& res) { send(res, svc.candidates(req.body)); });
  srv.set_exception_handler([](const httplib::Request& req, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    log::error(req.method + " " + req.path + ": " + what);
    send(res, error_response(500, what));
  });
  if (!impl_->options.static_dir.empty()) srv.set_mount_point("/", impl_->options.static_dir);
}

HttpServer::~HttpServer() {
  stop();
  delete impl_;
}

bool HttpServer::run(const std::function<void(int)>& on_ready) {
  auto& srv = impl_->server;
  if (!srv.bind_to_port(impl_->options.host, impl_->options.port)) return false;
  if (on_ready) on_ready(impl_->options.port);
  return srv.listen_after_bind();
}

int HttpServer::start_background() {
  auto& srv = impl_->server;
  const int port = srv.bind_to_any_port(impl_->options.host);
  if (port <= 0) return -1;
  impl_->thread = std::thread([&srv] { srv.listen_after_bind(); });
  srv.wait_until_ready();
  return port;
}

void HttpServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace atcor::service
