#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "json.hpp"
#include "saz/arena/agents.hpp"
#include "saz/errors.hpp"

namespace saz {

// Layout version of every JSON view the service returns.
constexpr int kServiceApiVersion = 1;

// A request the service refuses; maps to an HTTP status and the JSON body
// {"code", "message", "rule"}.
class ServiceError : public Error {
 public:
  ServiceError(int status, std::string code, const std::string& message, std::optional<std::string> rule = {})
      : Error(message), status_(status), code_(std::move(code)), rule_(std::move(rule)) {}
  int status() const { return status_; }
  const std::string& code() const { return code_; }
  const std::optional<std::string>& rule() const { return rule_; }
  nlohmann::json body() const;

 private:
  int status_;
  std::string code_;
  std::optional<std::string> rule_;
};

struct ServiceOptions {
  SearchConfig search;                  // base settings for Saz agents
  std::filesystem::path default_weights;  // used by agent "saz" without a path
  size_t max_sessions = 1000;
  uint64_t seed = 0;
};

// In-memory game sessions between a human and an agent. Reads share the
// session table lock; each session serialises its own moves, and a move
// that arrives while another is being applied gets a conflict.
class GameService {
 public:
  explicit GameService(ServiceOptions options = {});

  // {"game", "n", "k"?, "komi"?, "agent", "human_color"?, "search"?, "seed"?}
  nlohmann::json create_session(const nlohmann::json& request);
  nlohmann::json get_session(const std::string& id) const;
  // {"action": "r,c" | "pass" | cell index, "expected_ply"?}
  nlohmann::json post_move(const std::string& id, const nlohmann::json& body);
  nlohmann::json list_legal(const std::string& id) const;
  size_t session_count() const;

  // Sessions as their creation requests plus move logs; restoring replays
  // every move.
  void save_snapshot(const std::filesystem::path& path) const;
  void load_snapshot(const std::filesystem::path& path);

 private:
  struct Move {
    int player;
    Action action;
  };
  struct Session {
    explicit Session(BoardState start) : state(start), initial(std::move(start)) {}
    std::string id;
    nlohmann::json request;
    GameKind kind;
    int n = 0;
    BoardState state;
    BoardState initial;
    int human_color = kDark;
    std::string agent_label;
    std::unique_ptr<Agent> agent;
    std::vector<Move> moves;
    std::optional<nlohmann::json> last_search;
    Rng rng;
    mutable std::mutex mutex;
  };

  std::shared_ptr<Session> find(const std::string& id) const;
  std::shared_ptr<Session> build(const nlohmann::json& request, const std::string& id);
  std::shared_ptr<const nn::Network> network(const std::filesystem::path& weights);
  void agent_turns(Session& s);
  nlohmann::json view(const Session& s) const;

  ServiceOptions options_;
  mutable std::shared_mutex table_mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  uint64_t next_id_ = 1;
  std::mutex net_mutex_;
  std::map<std::string, std::shared_ptr<const nn::Network>> networks_;
};

}  // namespace saz
