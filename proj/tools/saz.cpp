#include <csignal>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "saz/config/config.hpp"
#include "saz/nn/weights_io.hpp"
#include "saz/service/http_server.hpp"
#include "selfcheck.hpp"

namespace fs = std::filesystem;
using namespace saz;

namespace {

// Exit status for missing or invalid input files (weights, config, manifest,
// board).
constexpr int kBadInput = 2;

struct InputError : Error {
  using Error::Error;
};

struct Globals {
  std::string config;
  std::optional<uint64_t> seed;
  std::optional<int> workers;
};

RootConfig load_root(const Globals& g) {
  RootConfig cfg;
  if (!g.config.empty()) cfg = load_config(g.config);
  if (g.seed) cfg.seed = *g.seed;
  if (g.workers) cfg.workers = *g.workers;
  cfg.validate();
  return cfg;
}

void require_file(const fs::path& path, const std::string& what) {
  if (!fs::is_regular_file(path)) throw InputError(what + " not found: " + path.string());
}

void require_weights(const AgentSpec& spec) {
  if (spec.type == AgentType::Saz) require_file(spec.weights, "weights");
}

GameKind game_kind(const std::string& name, std::optional<int> k, std::optional<double> komi, const RootConfig& cfg) {
  GameKind kind = name.empty() ? cfg.game : GameKind{parse_game(name)};
  if (!name.empty() && kind.game == cfg.game.game) kind = cfg.game;
  if (k) kind.k = *k;
  if (komi) kind.komi = *komi;
  return kind;
}

std::string cell_name(const Action& a, int n) {
  if (a.is_pass()) return "pass";
  return std::to_string(a.index() / n) + "," + std::to_string(a.index() % n);
}

void print_board(std::ostream& out, const BoardState& s) {
  int n = s.size();
  int w = static_cast<int>(std::to_string(n - 1).size()) + 1;
  out << std::setw(w) << "";
  for (int c = 0; c < n; ++c) out << std::setw(w) << c;
  out << "\n";
  for (int r = 0; r < n; ++r) {
    out << std::setw(w) << r;
    for (int c = 0; c < n; ++c) {
      int v = s.at(r, c);
      out << std::setw(w) << (v == kDark ? 'x' : v == kLight ? 'o' : '.');
    }
    out << "\n";
  }
  out << (s.to_move() == kDark ? "x" : "o") << " to move, ply " << s.ply() << "\n";
}

// --- train ---

struct TrainArgs {
  std::optional<int> iterations;
  std::string checkpoint_dir;
};

int cmd_train(const Globals& g, const TrainArgs& a) {
  RootConfig cfg = load_root(g);
  if (a.iterations) cfg.train.n_iter = *a.iterations;
  if (!a.checkpoint_dir.empty()) cfg.paths.checkpoint_dir = a.checkpoint_dir;
  cfg.validate();
  auto options = cfg.trainer_options();
  fs::create_directories(options.checkpoint_dir);
  save_config(cfg, options.checkpoint_dir / "config.yaml");

  bool resuming = Trainer::has_checkpoint(options.checkpoint_dir);
  Trainer trainer = resuming ? Trainer::resume(options) : Trainer(options);
  if (resuming) std::cout << "resuming " << options.checkpoint_dir.string() << " at iteration " << trainer.iteration() << "\n";
  trainer.run([](const IterationStats& s) {
    std::cout << "iter " << s.iteration << ": games " << s.games << " examples " << s.examples << " pool "
              << s.pool_examples << " value_loss " << s.value_loss << " policy_loss " << s.policy_loss;
    if (s.snapshot_score) std::cout << " vs_greedy " << *s.snapshot_score;
    std::cout << " (" << std::fixed << std::setprecision(1) << s.seconds << "s)" << std::defaultfloat
              << std::setprecision(6) << "\n"
              << std::flush;
  });
  auto latest = options.checkpoint_dir / "latest.sazw";
  nn::save_weights(trainer.network(), latest);
  std::cout << "wrote " << latest.string() << "\n";
  return 0;
}

// --- eval ---

struct EvalArgs {
  std::string manifest;
  std::string agent, opponent = "random", game;
  std::optional<int> k;
  std::optional<double> komi;
  std::vector<int> sizes;
  int games = 100;
  int repeats = 1;
  std::optional<int> n_sim;
  std::string out;
};

int cmd_eval(const Globals& g, const EvalArgs& a) {
  RootConfig cfg = load_root(g);
  SearchConfig base = cfg.search;
  if (a.n_sim) base.n_sim = *a.n_sim;
  SuiteManifest manifest;
  if (!a.manifest.empty()) {
    require_file(a.manifest, "manifest");
    manifest = load_manifest(a.manifest, base);
    if (g.seed) manifest.seed = *g.seed;
    if (g.workers) manifest.workers = *g.workers;
  } else {
    if (a.agent.empty()) throw ParameterError("eval needs --manifest or --agent");
    SuiteEntry e;
    e.agent = parse_agent(a.agent);
    e.opponent = parse_agent(a.opponent);
    for (auto* spec : {&e.agent, &e.opponent}) spec->search = base;
    e.kind = game_kind(a.game, a.k, a.komi, cfg);
    e.sizes = a.sizes.empty() ? std::vector<int>{cfg.board_size} : a.sizes;
    e.games = a.games;
    e.repeats = a.repeats;
    for (int n : e.sizes) validate_size(e.kind, n);
    manifest.seed = cfg.seed;
    manifest.workers = cfg.workers;
    manifest.entries.push_back(e);
  }
  for (const auto& e : manifest.entries) {
    require_weights(e.agent);
    require_weights(e.opponent);
  }
  auto rows = run_suite(manifest);
  fs::path out = a.out.empty() ? cfg.paths.results / "eval.csv" : fs::path(a.out);
  if (out.has_parent_path()) fs::create_directories(out.parent_path());
  std::ofstream csv(out);
  if (!csv) throw Error("cannot write " + out.string());
  write_csv(csv, rows);
  write_table(std::cout, rows);
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

// --- play ---

struct PlayArgs {
  std::string agent;
  std::string game;
  std::optional<int> size, k;
  std::optional<double> komi;
  std::string human = "dark";
  std::optional<int> n_sim;
};

int cmd_play(const Globals& g, const PlayArgs& a) {
  RootConfig cfg = load_root(g);
  std::string agent_text = a.agent;
  if (agent_text.empty()) agent_text = cfg.paths.weights.empty() ? "greedy" : "saz:" + cfg.paths.weights.string();
  AgentSpec spec = parse_agent(agent_text);
  if (spec.type == AgentType::Saz && spec.weights.empty()) spec.weights = cfg.paths.weights;
  spec.search = cfg.search;
  if (a.n_sim) spec.search.n_sim = *a.n_sim;
  require_weights(spec);
  auto agent = make_agent(spec);

  GameKind kind = game_kind(a.game, a.k, a.komi, cfg);
  int n = a.size.value_or(cfg.board_size);
  validate_size(kind, n);
  int human = a.human == "light" ? kLight : kDark;
  if (a.human != "dark" && a.human != "light") throw ParameterError("--human must be dark or light");

  Rng rng(cfg.seed);
  BoardState s = initial_state(kind, n);
  std::cout << game_name(kind.game) << " " << n << "x" << n << " vs " << agent->name() << "; you play "
            << (human == kDark ? "x" : "o") << ". Moves: row,col | index | pass. Also: legal, quit.\n";
  std::string line;
  while (!is_terminal(s)) {
    if (s.to_move() != human) {
      Action reply = agent->choose(s, rng);
      s = apply(s, reply);
      std::cout << "agent plays " << cell_name(reply, n);
      if (auto* r = agent->last_search()) std::cout << " (value " << std::setprecision(3) << r->root_value << ")";
      std::cout << "\n";
      continue;
    }
    print_board(std::cout, s);
    std::cout << "move> " << std::flush;
    if (!std::getline(std::cin, line)) {
      std::cout << "\n";
      return 0;
    }
    if (line.empty()) continue;
    if (line == "quit") return 0;
    if (line == "legal") {
      for (const auto& m : legal_actions(s)) std::cout << cell_name(m, n) << " ";
      std::cout << "\n";
      continue;
    }
    try {
      s = apply(s, Action::parse(line, n));
    } catch (const Error& e) {
      std::cout << "illegal: " << e.what() << "\n";
    }
  }
  print_board(std::cout, s);
  int outcome = *terminal_value(s) * s.to_move() * human;
  std::cout << (outcome > 0 ? "you win" : outcome < 0 ? "you lose" : "tie") << "\n";
  return 0;
}

// --- serve ---

HttpServer* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

struct ServeArgs {
  std::string host, weights, snapshot;
  std::optional<int> port, n_sim;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
  RootConfig cfg = load_root(g);
  ServiceOptions options;
  options.search = cfg.search;
  options.search.n_sim = a.n_sim.value_or(cfg.service.n_sim);
  options.default_weights = a.weights.empty() ? cfg.paths.weights : fs::path(a.weights);
  if (!options.default_weights.empty()) require_file(options.default_weights, "weights");
  options.max_sessions = static_cast<size_t>(cfg.service.max_sessions);
  options.seed = cfg.seed;
  GameService service(options);
  if (!a.snapshot.empty() && fs::exists(a.snapshot)) service.load_snapshot(a.snapshot);

  HttpServer server(service);
  int port = server.bind(a.host.empty() ? cfg.service.host : a.host, a.port.value_or(cfg.service.port));
  std::cout << "listening on http://" << (a.host.empty() ? cfg.service.host : a.host) << ":" << port << "\n"
            << std::flush;
  g_server = &server;
  std::signal(SIGINT, stop_server);
  std::signal(SIGTERM, stop_server);
  server.listen();
  g_server = nullptr;
  if (!a.snapshot.empty()) service.save_snapshot(a.snapshot);
  return 0;
}

// --- export-embeddings ---

struct ExportArgs {
  std::string weights, board, game, out;
  std::optional<int> size;
};

int cmd_export(const Globals& g, const ExportArgs& a) {
  RootConfig cfg = load_root(g);
  fs::path weights = a.weights.empty() ? cfg.paths.weights : fs::path(a.weights);
  if (weights.empty()) throw ParameterError("export-embeddings needs --weights");
  require_file(weights, "weights");
  auto net = nn::load_weights(weights);

  std::optional<BoardState> s;
  if (!a.board.empty()) {
    require_file(a.board, "board");
    std::ifstream in(a.board);
    std::stringstream text;
    text << in.rdbuf();
    s = deserialize(text.str(), cfg.game.komi);
  } else {
    s = initial_state(game_kind(a.game, {}, {}, cfg), a.size.value_or(cfg.board_size));
  }
  auto graph = encode(*s);
  auto emb = net.embeddings(graph);

  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw Error("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  out << "node,row,col";
  for (int j = 0; j < emb.cols(); ++j) out << ",e" << j;
  out << "\n" << std::setprecision(9);
  for (int v = 0; v < graph.num_nodes; ++v) {
    int pos = graph.pos_of_node[v];
    out << v << "," << (pos < 0 ? -1 : pos / graph.side) << "," << (pos < 0 ? -1 : pos % graph.side);
    for (int j = 0; j < emb.cols(); ++j) out << "," << emb(v, j);
    out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-network AlphaZero for Othello, Gomoku and Go at any board size"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "YAML config file");
  app.add_option("--seed", g.seed, "Master seed (overrides config)");
  app.add_option("--workers", g.workers, "Parallel games (overrides config)")->check(CLI::PositiveNumber);

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Selfplay training; resumes when the checkpoint dir has a checkpoint");
  train->add_option("--iterations", ta.iterations, "Override train.n_iter");
  train->add_option("--checkpoint-dir", ta.checkpoint_dir, "Override paths.checkpoint_dir");

  EvalArgs ea;
  auto* eval = app.add_subcommand("eval", "Run an evaluation suite and write a CSV report");
  eval->add_option("--manifest", ea.manifest, "Suite manifest (YAML)");
  eval->add_option("--agent", ea.agent, "random | greedy | saz:<weights> | external:<cmd>");
  eval->add_option("--opponent", ea.opponent, "Opponent agent")->capture_default_str();
  eval->add_option("--game", ea.game, "othello | gomoku | go (default: config)");
  eval->add_option("--k", ea.k, "Gomoku run length");
  eval->add_option("--komi", ea.komi, "Go komi");
  eval->add_option("--sizes", ea.sizes, "Board sides")->delimiter(',');
  eval->add_option("--games", ea.games, "Games per match (even)")->capture_default_str();
  eval->add_option("--repeats", ea.repeats, "Independent matches per size")->capture_default_str();
  eval->add_option("--n-sim", ea.n_sim, "Simulations per move for saz agents");
  eval->add_option("--out", ea.out, "CSV path (default: <paths.results>/eval.csv)");

  PlayArgs pa;
  auto* play = app.add_subcommand("play", "Play against an agent on the terminal");
  play->add_option("--agent", pa.agent, "Opponent (default: saz with paths.weights, else greedy)");
  play->add_option("--game", pa.game, "othello | gomoku | go");
  play->add_option("--size", pa.size, "Board side");
  play->add_option("--k", pa.k, "Gomoku run length");
  play->add_option("--komi", pa.komi, "Go komi");
  play->add_option("--human", pa.human, "dark | light")->capture_default_str();
  play->add_option("--n-sim", pa.n_sim, "Simulations per agent move");

  ServeArgs sa;
  auto* serve = app.add_subcommand("serve", "HTTP/JSON game service");
  serve->add_option("--host", sa.host, "Bind address (default: service.host)");
  serve->add_option("--port", sa.port, "Port, 0 for any (default: service.port)");
  serve->add_option("--weights", sa.weights, "Network for agent \"saz\" (default: paths.weights)");
  serve->add_option("--n-sim", sa.n_sim, "Simulations per agent move (default: service.n_sim)");
  serve->add_option("--snapshot", sa.snapshot, "Load sessions from and save them to this file");

  ExportArgs xa;
  auto* exp = app.add_subcommand("export-embeddings", "Per-node trunk inputs [h0..hL] of one position as CSV");
  exp->add_option("--weights", xa.weights, "Network weights (default: paths.weights)");
  exp->add_option("--board", xa.board, "Position in the text board format (default: initial position)");
  exp->add_option("--game", xa.game, "Game for the initial position");
  exp->add_option("--size", xa.size, "Board side for the initial position");
  exp->add_option("--out", xa.out, "CSV path (default: stdout)");

  auto* check = app.add_subcommand("selfcheck", "Quick invariant suite; exit 0 when every check passes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::string first = argc > 1 ? argv[1] : "";
    auto subs = app.get_subcommands({});
    bool unknown = !first.empty() && first[0] != '-' &&
                   std::none_of(subs.begin(), subs.end(), [&](auto* sub) { return sub->get_name() == first; });
    std::cerr << "error: " << (unknown ? "unknown subcommand '" + first + "'" : std::string(e.what())) << "\n\n"
              << app.help();
    return e.get_exit_code() ? e.get_exit_code() : 1;
  }

  try {
    if (*train) return cmd_train(g, ta);
    if (*eval) return cmd_eval(g, ea);
    if (*play) return cmd_play(g, pa);
    if (*serve) return cmd_serve(g, sa);
    if (*exp) return cmd_export(g, xa);
    if (*check) {
      auto results = cli::run_selfcheck(std::cout, g.seed.value_or(1));
      for (const auto& r : results)
        if (!r.passed) return 1;
      return 0;
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kBadInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
