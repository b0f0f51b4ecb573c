#include "saz/service/game_service.hpp"

#include <fstream>
#include <set>

#include "saz/errors.hpp"
#include "saz/nn/weights_io.hpp"

namespace saz {

using nlohmann::json;

json ServiceError::body() const {
  return {{"code", code_}, {"message", what()}, {"rule", rule_ ? json(*rule_) : json(nullptr)}};
}

namespace {

ServiceError bad_request(const std::string& message) { return ServiceError(400, "bad_request", message); }

template <typename T>
T field(const json& body, const char* key, T fallback) {
  if (!body.contains(key) || body[key].is_null()) return fallback;
  try {
    return body[key].get<T>();
  } catch (const json::exception&) {
    throw bad_request(std::string("field '") + key + "' has the wrong type");
  }
}

int parse_color(const json& v) {
  if (v.is_null()) return kDark;
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s == "dark" || s == "black" || s == "x") return kDark;
    if (s == "light" || s == "white" || s == "o") return kLight;
  }
  if (v.is_number_integer()) {
    int c = v.get<int>();
    if (c == kDark || c == kLight) return c;
  }
  throw bad_request("human_color must be \"dark\", \"light\", 1 or -1");
}

SearchConfig parse_search(const json& overrides, SearchConfig cfg) {
  if (overrides.is_null()) return cfg;
  if (!overrides.is_object()) throw bad_request("search must be an object");
  for (const auto& [key, value] : overrides.items()) {
    try {
      if (key == "n_sim")
        cfg.n_sim = value.get<int>();
      else if (key == "c_puct")
        cfg.c_puct = value.get<double>();
      else if (key == "k_subgraphs")
        cfg.k_subgraphs = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
      else if (key == "m")
        cfg.m = value.is_null() ? std::nullopt : std::optional<int>(value.get<int>());
      else if (key == "combine")
        cfg.combine = parse_combine_mode(value.get<std::string>());
      else if (key == "scatter")
        cfg.scatter = parse_scatter(value.get<std::string>());
      else
        throw bad_request("unknown search field '" + key + "'");
    } catch (const json::exception&) {
      throw bad_request("search field '" + key + "' has the wrong type");
    } catch (const ParameterError& e) {
      throw bad_request(e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ParameterError& e) {
    throw bad_request(e.what());
  }
  return cfg;
}

// pi is the root visit distribution (tau = 1) even when the agent played
// the most visited move.
json search_summary(const SearchResult& r, int n) {
  json visits = json::object();
  std::vector<double> pi(n * n + 1, 0.0);
  double total = 0;
  for (int v : r.visits) total += v;
  for (size_t i = 0; i < r.slots.size(); ++i) {
    visits[std::to_string(r.slots[i])] = r.visits[i];
    if (total > 0) pi[r.slots[i]] = r.visits[i] / total;
  }
  return {{"pi", pi}, {"value", r.root_value}, {"visits", visits}, {"played", r.action.slot(n)}};
}

Action parse_action(const json& body, int n) {
  if (!body.is_object() || !body.contains("action")) throw bad_request("body needs an 'action'");
  const json& a = body["action"];
  try {
    if (a.is_number_integer()) return Action::place(a.get<int>());
    if (a.is_string()) return Action::parse(a.get<std::string>(), n);
  } catch (const RuleViolation& e) {
    throw ServiceError(422, "illegal_move", e.what(), rule_name(e.rule()));
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  throw bad_request("action must be \"row,col\", \"pass\" or a cell index");
}

}  // namespace

GameService::GameService(ServiceOptions options) : options_(std::move(options)) {}

std::shared_ptr<const nn::Network> GameService::network(const std::filesystem::path& weights) {
  std::lock_guard lock(net_mutex_);
  auto key = weights.string();
  auto it = networks_.find(key);
  if (it != networks_.end()) return it->second;
  try {
    auto net = std::make_shared<const nn::Network>(nn::load_weights(weights));
    networks_.emplace(key, net);
    return net;
  } catch (const Error& e) {
    throw ServiceError(400, "weights_unavailable", e.what());
  }
}

std::shared_ptr<GameService::Session> GameService::build(const json& request, const std::string& id) {
  if (!request.is_object()) throw bad_request("request body must be a JSON object");
  static const std::set<std::string> known{"game", "n", "k", "komi", "agent", "weights", "human_color", "search", "seed"};
  for (const auto& [key, value] : request.items())
    if (!known.count(key)) throw bad_request("unknown field '" + key + "'");

  GameKind kind;
  try {
    kind.game = parse_game(field<std::string>(request, "game", ""));
  } catch (const ServiceError&) {
    throw;
  } catch (const Error& e) {
    throw bad_request(e.what());
  }
  kind.k = field<int>(request, "k", 5);
  kind.komi = field<double>(request, "komi", 5.5);
  if (!request.contains("n")) throw bad_request("field 'n' is required");
  int n = field<int>(request, "n", 0);
  try {
    validate_size(kind, n);
  } catch (const SizeError& e) {
    throw bad_request(e.what());
  }

  auto s = std::make_shared<Session>(initial_state(kind, n));
  s->id = id;
  s->request = request;
  s->kind = kind;
  s->n = n;
  s->human_color = parse_color(request.value("human_color", json(nullptr)));
  s->rng.seed(field<uint64_t>(request, "seed", options_.seed ^ std::hash<std::string>{}(id)));

  std::string agent_text = field<std::string>(request, "agent", "greedy");
  AgentSpec spec;
  if (agent_text == "saz") {
    spec = AgentSpec::saz(field<std::string>(request, "weights", options_.default_weights.string()));
    if (spec.weights.empty()) throw bad_request("agent 'saz' needs 'weights' or a server default");
  } else {
    try {
      spec = parse_agent(agent_text);
    } catch (const Error& e) {
      throw bad_request(e.what());
    }
  }
  if (spec.type == AgentType::External) throw bad_request("external agents are not served");
  spec.search = parse_search(request.value("search", json(nullptr)), options_.search);
  std::shared_ptr<const nn::Network> net;
  if (spec.type == AgentType::Saz) net = network(spec.weights);
  s->agent = make_agent(spec, net);
  s->agent_label = spec.label();
  return s;
}

json GameService::create_session(const json& request) {
  std::string id;
  {
    std::unique_lock lock(table_mutex_);
    if (sessions_.size() >= options_.max_sessions) throw ServiceError(503, "too_many_sessions", "session limit reached");
    id = "s" + std::to_string(next_id_++);
  }
  auto s = build(request, id);
  std::lock_guard session_lock(s->mutex);
  agent_turns(*s);
  {
    std::unique_lock lock(table_mutex_);
    sessions_[id] = s;
  }
  return view(*s);
}

std::shared_ptr<GameService::Session> GameService::find(const std::string& id) const {
  std::shared_lock lock(table_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw ServiceError(404, "not_found", "no session '" + id + "'");
  return it->second;
}

void GameService::agent_turns(Session& s) {
  while (!is_terminal(s.state) && s.state.to_move() != s.human_color) {
    Action a = Action::pass();
    try {
      a = s.agent->choose(s.state, s.rng);
      int mover = s.state.to_move();
      s.state = apply(s.state, a);
      s.moves.push_back({mover, a});
    } catch (const Error& e) {
      throw ServiceError(500, "agent_failed", "agent '" + s.agent_label + "' failed: " + e.what());
    }
    if (const SearchResult* r = s.agent->last_search()) s.last_search = search_summary(*r, s.n);
  }
}

json GameService::get_session(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  return view(*s);
}

json GameService::list_legal(const std::string& id) const {
  auto s = find(id);
  std::lock_guard lock(s->mutex);
  json v = view(*s);
  return {{"version", kServiceApiVersion}, {"id", id}, {"legal", v["legal"]}, {"pass_slot", v["pass_slot"]}};
}

json GameService::post_move(const std::string& id, const json& body) {
  auto s = find(id);
  std::unique_lock lock(s->mutex, std::try_to_lock);
  if (!lock.owns_lock()) throw ServiceError(409, "conflict", "another move is being applied to session " + id);
  if (is_terminal(s->state)) throw ServiceError(409, "finished", "session " + id + " is finished");
  if (s->state.to_move() != s->human_color) throw ServiceError(409, "out_of_turn", "it is not the human's turn");
  if (body.is_object() && body.contains("expected_ply") && !body["expected_ply"].is_null()) {
    int expected = field<int>(body, "expected_ply", -1);
    if (expected != s->state.ply())
      throw ServiceError(409, "conflict",
                         "expected ply " + std::to_string(expected) + " but the session is at " +
                             std::to_string(s->state.ply()));
  }
  Action a = parse_action(body, s->n);
  size_t before = s->moves.size();
  try {
    s->state = apply(s->state, a);
  } catch (const RuleViolation& e) {
    throw ServiceError(422, "illegal_move", e.what(), rule_name(e.rule()));
  }
  s->moves.push_back({s->human_color, a});
  agent_turns(*s);
  json v = view(*s);
  json applied = json::array();
  for (size_t i = before; i < s->moves.size(); ++i)
    applied.push_back({{"player", s->moves[i].player},
                       {"action", s->moves[i].action.to_string()},
                       {"slot", s->moves[i].action.slot(s->n)}});
  v["applied"] = applied;
  return v;
}

size_t GameService::session_count() const {
  std::shared_lock lock(table_mutex_);
  return sessions_.size();
}

json GameService::view(const Session& s) const {
  const BoardState& st = s.state;
  const int n = s.n;
  json board = json::array();
  for (int r = 0; r < n; ++r) {
    json row = json::array();
    for (int c = 0; c < n; ++c) row.push_back(st.at(r, c));
    board.push_back(row);
  }
  bool finished = is_terminal(st);
  json legal = json::array();
  if (!finished && st.to_move() == s.human_color)
    for (const auto& a : legal_actions(st)) legal.push_back(a.slot(n));
  json moves = json::array();
  for (const auto& m : s.moves)
    moves.push_back({{"player", m.player}, {"action", m.action.to_string()}, {"slot", m.action.slot(n)}});
  json result = nullptr;
  if (finished) {
    int dark = *terminal_value(st) * st.to_move();
    result = {{"winner", dark}, {"human", dark * s.human_color}};
  }
  json v{{"version", kServiceApiVersion},
         {"id", s.id},
         {"game", game_name(s.kind.game)},
         {"n", n},
         {"agent", s.agent_label},
         {"human_color", s.human_color},
         {"to_move", st.to_move()},
         {"ply", st.ply()},
         {"board", board},
         {"status", finished ? "finished" : "active"},
         {"result", result},
         {"legal", legal},
         {"pass_slot", n * n},
         {"moves", moves},
         {"stones", {{"dark", st.count(kDark)}, {"light", st.count(kLight)}}},
         {"agent_search", s.last_search ? *s.last_search : json(nullptr)}};
  if (s.kind.game == Game::Gomoku) v["k"] = s.kind.k;
  if (s.kind.game == Game::Go) v["komi"] = s.kind.komi;
  return v;
}

void GameService::save_snapshot(const std::filesystem::path& path) const {
  json out{{"version", kServiceApiVersion}, {"sessions", json::array()}};
  {
    std::shared_lock lock(table_mutex_);
    out["next_id"] = next_id_;
    for (const auto& [id, s] : sessions_) {
      std::lock_guard session_lock(s->mutex);
      json moves = json::array();
      for (const auto& m : s->moves) moves.push_back(m.action.to_string());
      out["sessions"].push_back({{"id", id}, {"request", s->request}, {"moves", moves}});
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path);
  if (!f) throw Error("cannot write snapshot " + path.string());
  f << out.dump(1) << '\n';
}

void GameService::load_snapshot(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot read snapshot " + path.string());
  json in;
  try {
    in = json::parse(f);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  std::map<std::string, std::shared_ptr<Session>> restored;
  for (const auto& entry : in.at("sessions")) {
    std::string id = entry.at("id").get<std::string>();
    auto s = build(entry.at("request"), id);
    for (const auto& text : entry.at("moves")) {
      Action a = Action::parse(text.get<std::string>(), s->n);
      int mover = s->state.to_move();
      s->state = apply(s->state, a);
      s->moves.push_back({mover, a});
    }
    restored[id] = s;
  }
  std::unique_lock lock(table_mutex_);
  for (auto& [id, s] : restored) sessions_[id] = s;
  next_id_ = std::max(next_id_, in.value("next_id", next_id_));
}

}  // namespace saz
