#pragma once

#include <memory>
#include <string>

#include "saz/service/game_service.hpp"

namespace httplib {
class Server;
}

namespace saz {

// JSON over HTTP for a GameService:
//   POST /sessions                 create, body as GameService::create_session
//   GET  /sessions/{id}            session view
//   POST /sessions/{id}/moves      human move, then the agent's reply
//   GET  /sessions/{id}/legal      legal actions for the human
//   GET  /health
// Errors answer with the ServiceError status and {"code","message","rule"}.
class HttpServer {
 public:
  explicit HttpServer(GameService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Port 0 binds any free port. Returns the bound port.
  int bind(const std::string& host, int port);
  // Serves until stop(); call after bind().
  void listen();
  void stop();
  bool running() const;

 private:
  GameService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace saz
