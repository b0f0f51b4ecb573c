#include "selfcheck.hpp"

#include <cmath>
#include <filesystem>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>

#include "mcts_checks.hpp"
#include "nn_checks.hpp"
#include "othello_check.hpp"
#include "saz/nn/weights_io.hpp"
#include "saz/train/selfplay.hpp"

namespace saz::cli {
namespace {

nn::ArchConfig tiny_arch(int embed) {
  nn::ArchConfig a;
  a.embed_dim = embed;
  a.num_layers = 3;
  return a;
}

CheckResult othello_oracle(uint64_t seed) {
  auto r = testing::othello_oracle_sweep(300, seed);
  return {"othello-oracle", r.mismatches == 0,
          std::to_string(r.positions) + " positions" + (r.mismatches ? ", " + r.first_mismatch : "")};
}

CheckResult rule_walks(uint64_t seed) {
  Rng rng(seed);
  int games = 0;
  for (auto [kind, n] : {std::pair{GameKind::othello(), 6}, {GameKind::gomoku(), 7}, {GameKind::go(), 5}}) {
    for (int g = 0; g < 5; ++g, ++games) {
      auto s = initial_state(kind, n);
      for (int ply = 0; ply < 4 * n * n && !is_terminal(s); ++ply) {
        if (deserialize(serialize(s), kind.komi).cells() != s.cells())
          return {"rule-walks", false, "serialize round trip failed for " + game_name(kind.game)};
        auto legal = legal_actions(s);
        if (legal.empty()) return {"rule-walks", false, "non-terminal state without moves"};
        s = apply(s, legal[rng() % legal.size()]);
      }
      auto v = terminal_value(s);
      if (v && std::abs(*v) > 1) return {"rule-walks", false, "terminal value out of range"};
    }
  }
  return {"rule-walks", true, std::to_string(games) + " games"};
}

CheckResult subgraph_sizes(uint64_t seed) {
  Rng rng(seed);
  auto g = encode(initial_state(GameKind::gomoku(), 9));
  auto range = subgraph_size_range(5, g.num_board_nodes());
  for (int i = 0; i < 1000; ++i) {
    auto sub = sample_subgraph(g, 5, rng);
    int d = static_cast<int>(sub.node_map.size());
    if (d < range.lo || d > range.hi) return {"subgraph-sizes", false, "sampled size " + std::to_string(d)};
  }
  return {"subgraph-sizes", true, "1000 samples in [" + std::to_string(range.lo) + ", " + std::to_string(range.hi) + "]"};
}

CheckResult gradcheck(uint64_t seed) {
  Rng rng(seed);
  nn::Network net(tiny_arch(4), rng);
  auto dnet = net.cast<double>();
  auto batch = nn::GraphBatch::single(testing::three_node_graph());
  auto targets = testing::random_targets<double>(batch, rng);
  auto r = testing::network_gradcheck(dnet, batch, targets, seed, 1e-6);
  std::ostringstream d;
  d << "max relative error " << r.max_rel_error << " over " << r.entries << " entries";
  return {"gradcheck", r.max_rel_error < 1e-4, d.str()};
}

CheckResult symmetry(uint64_t seed) {
  Rng rng(seed);
  auto arch = tiny_arch(16);
  arch.learnable_eps = false;
  nn::Network net(arch, rng);
  double worst = 0;
  for (auto [kind, n] : {std::pair{GameKind::othello(), 6}, {GameKind::gomoku(), 7}, {GameKind::go(), 5}}) {
    auto r = testing::symmetry_sweep(net, kind, n, 3, rng);
    worst = std::max({worst, r.max_policy_error, r.max_value_error});
  }
  std::ostringstream d;
  d << "max error " << worst;
  return {"dihedral-symmetry", worst < 1e-5, d.str()};
}

CheckResult weights_round_trip(uint64_t seed) {
  Rng rng(seed);
  nn::Network net(tiny_arch(8), rng);
  auto path = std::filesystem::temp_directory_path() / ("saz-selfcheck-" + std::to_string(seed) + ".sazw");
  nn::save_weights(net, path);
  auto back = nn::load_weights(path);
  std::filesystem::remove(path);
  auto batch = nn::GraphBatch::single(encode(initial_state(GameKind::othello(), 6)));
  auto a = net.evaluate(batch);
  auto b = back.evaluate(batch);
  bool same = a.log_policy == b.log_policy && a.value == b.value;
  return {"weights-round-trip", same, same ? "identical outputs" : "outputs differ"};
}

CheckResult search_invariants(uint64_t seed) {
  Rng rng(seed);
  auto net = std::make_shared<const nn::Network>(tiny_arch(8), rng);
  NetworkEvaluator eval(net);
  SearchConfig cfg;
  cfg.n_sim = 40;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::othello(), 6);
  auto r = search.best_action(s);
  int visits = std::accumulate(r.visits.begin(), r.visits.end(), 0);
  double mass = std::accumulate(r.pi.begin(), r.pi.end(), 0.0);
  auto legal = legal_actions(s);
  bool ok = visits == cfg.n_sim && std::abs(mass - 1) < 1e-9 &&
            std::find(legal.begin(), legal.end(), r.action) != legal.end();
  return {"search-invariants", ok,
          "visits " + std::to_string(visits) + "/" + std::to_string(cfg.n_sim) + ", action " + r.action.to_string()};
}

CheckResult tic_tac_toe(uint64_t seed) {
  auto r = testing::tic_tac_toe_sweep(10, 200, seed + 1);
  return {"tic-tac-toe", r.optimal >= 9, std::to_string(r.optimal) + "/" + std::to_string(r.runs) + " optimal"};
}

CheckResult selfplay_targets(uint64_t seed) {
  Rng rng(seed);
  auto net = std::make_shared<const nn::Network>(tiny_arch(8), rng);
  NetworkEvaluator eval(net);
  SearchConfig cfg;
  cfg.n_sim = 8;
  auto game = selfplay_game(GameKind::gomoku(3), 4, eval, cfg, rng);
  if (game.examples.size() != game.moves.size()) return {"selfplay-targets", false, "example count != plies"};
  for (const auto& ex : game.examples) {
    double mass = std::accumulate(ex.pi.begin(), ex.pi.end(), 0.0);
    if (std::abs(mass - 1) > 1e-5 || std::abs(ex.z) > 1) return {"selfplay-targets", false, "bad target"};
  }
  return {"selfplay-targets", true, std::to_string(game.examples.size()) + " examples"};
}

}  // namespace

std::vector<CheckResult> run_selfcheck(std::ostream& out, uint64_t seed) {
  std::vector<std::pair<std::string, std::function<CheckResult(uint64_t)>>> checks{
      {"othello-oracle", othello_oracle},       {"rule-walks", rule_walks},
      {"subgraph-sizes", subgraph_sizes},       {"gradcheck", gradcheck},
      {"dihedral-symmetry", symmetry},          {"weights-round-trip", weights_round_trip},
      {"search-invariants", search_invariants}, {"tic-tac-toe", tic_tac_toe},
      {"selfplay-targets", selfplay_targets}};
  std::vector<CheckResult> results;
  for (auto& [name, check] : checks) {
    CheckResult r;
    try {
      r = check(seed);
    } catch (const std::exception& e) {
      r = {name, false, e.what()};
    }
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << "\n" << std::flush;
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace saz::cli
