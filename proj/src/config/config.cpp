#include "saz/config/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "saz/errors.hpp"

namespace saz {

namespace {

std::string where(const std::string& origin, const YAML::Mark& mark) {
  if (mark.line < 0) return origin;
  return origin + ":" + std::to_string(mark.line + 1);
}

std::string expand_env(const std::string& text) {
  std::string out;
  for (size_t i = 0; i < text.size(); ++i) {
    if (text[i] != '$' || i + 1 == text.size()) {
      out += text[i];
      continue;
    }
    size_t start = i + 1, end;
    std::string name;
    if (text[start] == '{') {
      end = text.find('}', start);
      if (end == std::string::npos) throw ConfigError("unterminated ${ in '" + text + "'");
      name = text.substr(start + 1, end - start - 1);
      i = end;
    } else {
      end = start;
      while (end < text.size() && (std::isalnum(static_cast<unsigned char>(text[end])) || text[end] == '_')) ++end;
      if (end == start) {
        out += '$';
        continue;
      }
      name = text.substr(start, end - start);
      i = end - 1;
    }
    if (const char* v = std::getenv(name.c_str())) out += v;
  }
  return out;
}

// A YAML mapping whose keys are consumed one by one; finish() rejects the
// rest.
class Section {
 public:
  Section(YAML::Node node, std::string prefix, std::string origin)
      : node_(std::move(node)), prefix_(std::move(prefix)), origin_(std::move(origin)) {
    if (node_ && !node_.IsNull() && !node_.IsMap())
      throw ConfigError(where(origin_, node_.Mark()) + ": " + name_or_root() + " must be a mapping");
  }

  YAML::Node take(const std::string& key) {
    used_.insert(key);
    if (!node_ || node_.IsNull()) return YAML::Node();
    return node_[key];
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    YAML::Node v = take(key);
    if (!v || v.IsNull()) return;
    try {
      out = v.as<T>();
    } catch (const YAML::Exception&) {
      fail(v, key, "has the wrong type");
    }
  }

  void get_path(const std::string& key, std::filesystem::path& out) {
    std::string text;
    bool present = has(key);
    get(key, text);
    if (present) out = expand_env(text);
  }

  void get_auto(const std::string& key, std::optional<int>& out) {
    YAML::Node v = take(key);
    if (!v || v.IsNull()) return;
    if (v.IsScalar() && v.Scalar() == "auto") {
      out.reset();
      return;
    }
    try {
      out = v.as<int>();
    } catch (const YAML::Exception&) {
      fail(v, key, "must be an integer or 'auto'");
    }
  }

  bool has(const std::string& key) const { return node_ && node_.IsMap() && node_[key]; }

  Section child(const std::string& key) { return Section(take(key), qualified(key), origin_); }

  [[noreturn]] void fail(const YAML::Node& at, const std::string& key, const std::string& what) const {
    throw ConfigError(where(origin_, at.Mark()) + ": " + qualified(key) + " " + what);
  }

  void check(bool ok, const std::string& key, const std::string& what) const {
    if (ok) return;
    YAML::Node at = has(key) ? node_[key] : node_;
    throw ConfigError(where(origin_, at ? at.Mark() : YAML::Mark::null_mark()) + ": " + qualified(key) + " " + what);
  }

  void finish() const {
    if (!node_ || !node_.IsMap()) return;
    for (const auto& kv : node_) {
      auto key = kv.first.as<std::string>();
      if (!used_.count(key)) throw ConfigError(where(origin_, kv.first.Mark()) + ": unknown key '" + qualified(key) + "'");
    }
  }

  std::string qualified(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

 private:
  std::string name_or_root() const { return prefix_.empty() ? "the document" : prefix_; }

  YAML::Node node_;
  std::string prefix_;
  std::string origin_;
  std::set<std::string> used_;
};

template <typename Fn>
void guarded(Section& s, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    s.check(false, key, std::string("is invalid: ") + e.what());
  }
}

void read_search(Section s, SearchConfig& c) {
  s.get("n_sim", c.n_sim);
  s.get("c_puct", c.c_puct);
  s.get_auto("k_subgraphs", c.k_subgraphs);
  s.get_auto("m", c.m);
  s.get("m_offset", c.m_offset);
  s.get("plus_one_upper", c.plus_one_upper);
  std::string combine = combine_mode_name(c.combine), scatter = scatter_name(c.scatter);
  s.get("combine", combine);
  s.get("scatter", scatter);
  guarded(s, "combine", [&] { c.combine = parse_combine_mode(combine); });
  guarded(s, "scatter", [&] { c.scatter = parse_scatter(scatter); });
  s.get("tau_moves", c.tau_moves);
  s.get("reuse_tree", c.reuse_tree);
  s.get("dirichlet_alpha", c.dirichlet_alpha);
  s.get("dirichlet_fraction", c.dirichlet_fraction);
  s.finish();
  guarded(s, "n_sim", [&] { c.validate(); });
}

// Shortest text that parses back to the same double.
std::string num(double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

std::vector<std::string> nums(const std::vector<double>& xs) {
  std::vector<std::string> out;
  for (double x : xs) out.push_back(num(x));
  return out;
}

void emit_search(YAML::Emitter& out, const SearchConfig& c) {
  out << YAML::BeginMap;
  out << YAML::Key << "n_sim" << YAML::Value << c.n_sim;
  out << YAML::Key << "c_puct" << YAML::Value << num(c.c_puct);
  out << YAML::Key << "k_subgraphs" << YAML::Value;
  if (c.k_subgraphs)
    out << *c.k_subgraphs;
  else
    out << "auto";
  out << YAML::Key << "m" << YAML::Value;
  if (c.m)
    out << *c.m;
  else
    out << "auto";
  out << YAML::Key << "m_offset" << YAML::Value << c.m_offset;
  out << YAML::Key << "plus_one_upper" << YAML::Value << c.plus_one_upper;
  out << YAML::Key << "combine" << YAML::Value << combine_mode_name(c.combine);
  out << YAML::Key << "scatter" << YAML::Value << scatter_name(c.scatter);
  out << YAML::Key << "tau_moves" << YAML::Value << c.tau_moves;
  out << YAML::Key << "reuse_tree" << YAML::Value << c.reuse_tree;
  out << YAML::Key << "dirichlet_alpha" << YAML::Value << num(c.dirichlet_alpha);
  out << YAML::Key << "dirichlet_fraction" << YAML::Value << num(c.dirichlet_fraction);
  out << YAML::EndMap;
}

YAML::Node load_yaml(const std::string& text, const std::string& origin) {
  try {
    return YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(where(origin, e.mark) + ": " + e.msg);
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

}  // namespace

void RootConfig::validate() const {
  if (workers < 1) throw ConfigError("workers must be >= 1");
  validate_size(game, board_size);
  if (net.embed_dim < 1 || net.num_layers < 1) throw ConfigError("net.embed_dim and net.num_layers must be >= 1");
  if (net.dropout < 0 || net.dropout >= 1) throw ConfigError("net.dropout must be in [0, 1)");
  if (net.bn_momentum < 0 || net.bn_momentum >= 1) throw ConfigError("net.bn_momentum must be in [0, 1)");
  search.validate();
  if (search.m && *search.m > board_size - 1)
    throw ConfigError("search.m = " + std::to_string(*search.m) + " must be <= game.size - 1 = " +
                      std::to_string(board_size - 1));
  train.validate();
  for (int n : train.size_set) validate_size(game, n);
  if (service.port < 1 || service.port > 65535) throw ConfigError("service.port must be in [1, 65535]");
  if (service.n_sim < 1) throw ConfigError("service.n_sim must be >= 1");
  if (service.max_sessions < 1) throw ConfigError("service.max_sessions must be >= 1");
}

TrainerOptions RootConfig::trainer_options() const {
  TrainerOptions o;
  o.kind = game;
  o.board_size = board_size;
  o.arch = net;
  o.search = search;
  o.train = train;
  o.seed = seed;
  o.workers = workers;
  o.checkpoint_dir = paths.checkpoint_dir;
  return o;
}

RootConfig parse_config(const std::string& text, const std::string& origin) {
  RootConfig c;
  Section root(load_yaml(text, origin), "", origin);
  root.get("seed", c.seed);
  root.get("workers", c.workers);

  Section game = root.child("game");
  std::string name = game_name(c.game.game);
  game.get("name", name);
  guarded(game, "name", [&] { c.game.game = parse_game(name); });
  game.get("size", c.board_size);
  game.get("k", c.game.k);
  game.get("komi", c.game.komi);
  game.finish();
  guarded(game, "size", [&] { validate_size(c.game, c.board_size); });

  Section net = root.child("net");
  net.get("embed_dim", c.net.embed_dim);
  net.get("num_layers", c.net.num_layers);
  net.get("dropout", c.net.dropout);
  net.get("learnable_eps", c.net.learnable_eps);
  net.get("bn_momentum", c.net.bn_momentum);
  net.finish();

  read_search(root.child("search"), c.search);
  if (c.search.m) {
    Section search = Section(root.take("search"), "search", origin);
    search.check(*c.search.m <= c.board_size - 1, "m", "must be <= game.size - 1 = " + std::to_string(c.board_size - 1));
  }

  Section train = root.child("train");
  train.get("n_iter", c.train.n_iter);
  train.get("games_per_iter", c.train.games_per_iter);
  train.get("history_window", c.train.history_window);
  train.get("size_set", c.train.size_set);
  train.get("size_probs", c.train.size_probs);
  train.get("epochs", c.train.epochs);
  train.get("batch_size", c.train.batch_size);
  train.get("lr", c.train.lr);
  train.get("keep_checkpoints", c.train.keep_checkpoints);
  train.get("snapshot_games", c.train.snapshot_games);
  train.get("snapshot_sims", c.train.snapshot_sims);
  train.finish();
  guarded(train, "size_set", [&] {
    c.train.validate();
    for (int n : c.train.size_set) validate_size(c.game, n);
  });

  Section paths = root.child("paths");
  paths.get_path("checkpoint_dir", c.paths.checkpoint_dir);
  paths.get_path("weights", c.paths.weights);
  paths.get_path("results", c.paths.results);
  paths.finish();

  Section service = root.child("service");
  service.get("host", c.service.host);
  service.get("port", c.service.port);
  service.get("n_sim", c.service.n_sim);
  service.get("max_sessions", c.service.max_sessions);
  service.finish();

  root.finish();
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  return c;
}

RootConfig load_config(const std::filesystem::path& path) { return parse_config(read_file(path), path.string()); }

std::string dump_config(const RootConfig& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "workers" << YAML::Value << c.workers;
  out << YAML::Key << "game" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << game_name(c.game.game);
  out << YAML::Key << "size" << YAML::Value << c.board_size;
  out << YAML::Key << "k" << YAML::Value << c.game.k;
  out << YAML::Key << "komi" << YAML::Value << num(c.game.komi);
  out << YAML::EndMap;
  out << YAML::Key << "net" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "embed_dim" << YAML::Value << c.net.embed_dim;
  out << YAML::Key << "num_layers" << YAML::Value << c.net.num_layers;
  out << YAML::Key << "dropout" << YAML::Value << num(c.net.dropout);
  out << YAML::Key << "learnable_eps" << YAML::Value << c.net.learnable_eps;
  out << YAML::Key << "bn_momentum" << YAML::Value << num(c.net.bn_momentum);
  out << YAML::EndMap;
  out << YAML::Key << "search" << YAML::Value;
  emit_search(out, c.search);
  out << YAML::Key << "train" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_iter" << YAML::Value << c.train.n_iter;
  out << YAML::Key << "games_per_iter" << YAML::Value << c.train.games_per_iter;
  out << YAML::Key << "history_window" << YAML::Value << c.train.history_window;
  out << YAML::Key << "size_set" << YAML::Value << YAML::Flow << c.train.size_set;
  out << YAML::Key << "size_probs" << YAML::Value << YAML::Flow << nums(c.train.size_probs);
  out << YAML::Key << "epochs" << YAML::Value << c.train.epochs;
  out << YAML::Key << "batch_size" << YAML::Value << c.train.batch_size;
  out << YAML::Key << "lr" << YAML::Value << num(c.train.lr);
  out << YAML::Key << "keep_checkpoints" << YAML::Value << c.train.keep_checkpoints;
  out << YAML::Key << "snapshot_games" << YAML::Value << c.train.snapshot_games;
  out << YAML::Key << "snapshot_sims" << YAML::Value << c.train.snapshot_sims;
  out << YAML::EndMap;
  out << YAML::Key << "paths" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "checkpoint_dir" << YAML::Value << c.paths.checkpoint_dir.string();
  out << YAML::Key << "weights" << YAML::Value << c.paths.weights.string();
  out << YAML::Key << "results" << YAML::Value << c.paths.results.string();
  out << YAML::EndMap;
  out << YAML::Key << "service" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "host" << YAML::Value << c.service.host;
  out << YAML::Key << "port" << YAML::Value << c.service.port;
  out << YAML::Key << "n_sim" << YAML::Value << c.service.n_sim;
  out << YAML::Key << "max_sessions" << YAML::Value << c.service.max_sessions;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

void save_config(const RootConfig& cfg, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config " + path.string());
  out << dump_config(cfg);
}

SuiteManifest parse_manifest(const std::string& text, const SearchConfig& base_search, const std::string& origin) {
  SuiteManifest m;
  Section root(load_yaml(text, origin), "", origin);
  root.get("seed", m.seed);
  root.get("workers", m.workers);
  YAML::Node rows = root.take("rows");
  root.finish();
  if (!rows || !rows.IsSequence() || rows.size() == 0)
    throw ConfigError(origin + ": manifest needs a non-empty 'rows' list");
  for (size_t i = 0; i < rows.size(); ++i) {
    Section row(rows[i], "rows[" + std::to_string(i) + "]", origin);
    SuiteEntry e;
    std::string agent, opponent, game = "othello";
    row.get("agent", agent);
    row.get("opponent", opponent);
    row.get("game", game);
    int k = 5;
    double komi = 5.5;
    row.get("k", k);
    row.get("komi", komi);
    row.get("sizes", e.sizes);
    row.get("games", e.games);
    row.get("repeats", e.repeats);
    row.check(!agent.empty(), "agent", "is required");
    row.check(!opponent.empty(), "opponent", "is required");
    row.check(!e.sizes.empty(), "sizes", "is required");
    row.check(e.games > 0 && e.games % 2 == 0, "games", "must be a positive even number");
    row.check(e.repeats >= 1, "repeats", "must be >= 1");
    guarded(row, "agent", [&] { e.agent = parse_agent(agent); });
    guarded(row, "opponent", [&] { e.opponent = parse_agent(opponent); });
    guarded(row, "game", [&] { e.kind.game = parse_game(game); });
    e.kind.k = k;
    e.kind.komi = komi;
    guarded(row, "sizes", [&] {
      for (int n : e.sizes) validate_size(e.kind, n);
    });
    SearchConfig search = base_search;
    if (row.has("search")) read_search(row.child("search"), search);
    row.take("search");
    e.agent.search = search;
    e.opponent.search = search;
    row.finish();
    m.entries.push_back(std::move(e));
  }
  return m;
}

SuiteManifest load_manifest(const std::filesystem::path& path, const SearchConfig& base_search) {
  return parse_manifest(read_file(path), base_search, path.string());
}

}  // namespace saz
