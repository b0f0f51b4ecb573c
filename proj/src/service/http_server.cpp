#include "saz/service/http_server.hpp"

#include "httplib.h"
#include "saz/errors.hpp"

namespace saz {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

template <typename Fn>
void guarded(httplib::Response& res, Fn&& fn) {
  try {
    send_json(res, 200, fn());
  } catch (const ServiceError& e) {
    send_json(res, e.status(), e.body());
  } catch (const std::exception& e) {
    send_json(res, 500, ServiceError(500, "internal", e.what()).body());
  }
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(400, "bad_json", std::string("body is not valid JSON: ") + e.what());
  }
}

}  // namespace

HttpServer::HttpServer(GameService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
  auto& s = *server_;
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  s.Get("/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}, {"version", kServiceApiVersion}});
  });
  s.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service_.create_session(parse_body(req)); });
    if (res.status == 200) res.status = 201;
  });
  s.Get(R"(/sessions/([A-Za-z0-9_-]+))", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service_.get_session(req.matches[1]); });
  });
  s.Get(R"(/sessions/([A-Za-z0-9_-]+)/legal)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service_.list_legal(req.matches[1]); });
  });
  s.Post(R"(/sessions/([A-Za-z0-9_-]+)/moves)", [this](const httplib::Request& req, httplib::Response& res) {
    guarded(res, [&] { return service_.post_move(req.matches[1], parse_body(req)); });
  });
  s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty())
      send_json(res, res.status, ServiceError(res.status, res.status == 404 ? "not_found" : "http_error",
                                              "no route for this request").body());
  });
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  if (port == 0) {
    int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error("cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) throw Error("cannot bind " + host + ":" + std::to_string(port));
  return port;
}

void HttpServer::listen() { server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

}  // namespace saz
