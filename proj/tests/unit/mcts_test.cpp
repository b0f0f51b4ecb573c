#include <gtest/gtest.h>

#include <map>
#include <numeric>
#include <sstream>

#include "../support/mcts_checks.hpp"
#include "json.hpp"
#include "saz/errors.hpp"
#include "saz/mcts/search.hpp"

namespace saz {
namespace {

TEST(Puct, TabulatedExamples) {
  EXPECT_NEAR(puct_score(0, 0.5, 3, 16, 1.5), 0.75, 1e-9);
  EXPECT_NEAR(puct_score(0.3, 0.5, 3, 0, 1.5), 0.3, 1e-9);
  EXPECT_NEAR(puct_score(-0.2, 0, 7, 100, 1.5), -0.2, 1e-9);
}

TEST(Backup, RunningMean) {
  auto e = backup({0.5, 3}, 1.0);
  EXPECT_NEAR(e.q, 0.625, 1e-9);
  EXPECT_EQ(e.n, 4);
  auto f = backup({0, 0}, -0.4);
  EXPECT_NEAR(f.q, -0.4, 1e-9);
  EXPECT_EQ(f.n, 1);
}

TEST(VisitsToPolicy, Examples) {
  std::vector<int> slots{0, 1};
  auto p = visits_to_policy(slots, std::vector<int>{1, 3}, 2, 1.0);
  EXPECT_NEAR(p[0], 0.25, 1e-9);
  EXPECT_NEAR(p[1], 0.75, 1e-9);
  auto g = visits_to_policy(slots, std::vector<int>{1, 3}, 2, 0.0);
  EXPECT_EQ(g, (std::vector<double>{0, 1}));
  auto tie = visits_to_policy(slots, std::vector<int>{4, 4}, 2, 0.0);
  EXPECT_EQ(tie, (std::vector<double>{1, 0}));
  auto sharp = visits_to_policy(slots, std::vector<int>{1, 3}, 2, 0.5);
  EXPECT_NEAR(sharp[0], 0.1, 1e-9);
  EXPECT_NEAR(sharp[1], 0.9, 1e-9);
  EXPECT_THROW(visits_to_policy(slots, std::vector<int>{0, 0}, 2, 1.0), StateError);
}

TEST(VisitsToPolicy, CoversAllSlotsWithZerosOffSupport) {
  std::vector<int> slots{2, 5, 9};
  auto p = visits_to_policy(slots, std::vector<int>{2, 0, 6}, 10, 1.0);
  EXPECT_EQ(p.size(), 10u);
  EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-12);
  EXPECT_EQ(p[5], 0);
  EXPECT_EQ(p[0], 0);
}

TEST(Combine, SazExample) {
  std::vector<double> p1{0.5, 0.5}, p2{0.8, 0.2};
  std::vector<int> legal{0, 1};
  auto P = combine_priors(p1, p2, legal, CombineMode::Saz);
  EXPECT_NEAR(P[0], 0.6, 1e-12);
  EXPECT_NEAR(P[1], 0.4, 1e-12);
}

TEST(Combine, ZeroSubgraphPolicyGivesP1) {
  std::vector<double> p1{0.2, 0.3, 0.5}, p2{0, 0, 0};
  std::vector<int> legal{0, 2};
  auto P = combine_priors(p1, p2, legal, CombineMode::Saz);
  EXPECT_NEAR(P[0], 0.2 / 0.7, 1e-12);
  EXPECT_NEAR(P[1], 0.5 / 0.7, 1e-12);
  auto full = combine_priors(p1, p2, legal, CombineMode::FullOnly);
  EXPECT_EQ(P, full);
}

TEST(Combine, ModesAndFallback) {
  std::vector<double> p1{0.7, 0.3, 0.0}, p2{0.1, 0.6, 0.3};
  std::vector<int> legal{0, 1, 2};
  auto sub = combine_priors(p1, p2, legal, CombineMode::SubgraphsOnly);
  EXPECT_NEAR(sub[1], 0.6, 1e-12);
  std::vector<int> only_zero{2};
  auto fallback = combine_priors(p1, p2, only_zero, CombineMode::FullOnly);
  EXPECT_EQ(fallback, std::vector<double>{1.0});
  std::vector<double> z{0, 0, 0};
  auto uniform = combine_priors(z, z, legal, CombineMode::Saz);
  for (double p : uniform) EXPECT_NEAR(p, 1.0 / 3, 1e-12);
}

Subgraph fake_subgraph(std::vector<int> nodes) {
  Subgraph s;
  s.node_map = std::move(nodes);
  s.graph.num_nodes = static_cast<int>(s.node_map.size()) + 1;
  return s;
}

TEST(Scatter, MeanAndMaxOverOccurrences) {
  // Node 4 appears in subgraphs 0 and 2 with 0.1 and 0.3.
  std::vector<Subgraph> subs{fake_subgraph({1, 4}), fake_subgraph({1, 2}), fake_subgraph({4})};
  std::vector<GraphEval> outs{{{0.5f, 0.1f, 0.4f}, 0}, {{0.2f, 0.2f, 0.6f}, 0}, {{0.3f, 0.7f}, 0}};
  auto mean = scatter_subgraph_policy(subs, outs, 6, Scatter::Mean);
  EXPECT_NEAR(mean[4], 0.2, 1e-6);
  EXPECT_NEAR(mean[1], 0.35, 1e-6);
  EXPECT_NEAR(mean[2], 0.2, 1e-6);
  EXPECT_EQ(mean[0], 0);
  EXPECT_EQ(mean[5], 0);  // dummy slot
  auto mx = scatter_subgraph_policy(subs, outs, 6, Scatter::Max);
  EXPECT_NEAR(mx[4], 0.3, 1e-6);
  EXPECT_NEAR(mx[1], 0.5, 1e-6);
}

TEST(Defaults, SubgraphCountIsHalfTheSide) {
  for (int n = 3; n <= 50; ++n) EXPECT_EQ(default_k_subgraphs(n), static_cast<int>(std::lround(n / 2.0)));
  EXPECT_EQ(default_k_subgraphs(8), 4);
  EXPECT_EQ(default_k_subgraphs(9), 5);
}

TEST(Config, Validation) {
  SearchConfig cfg;
  cfg.n_sim = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.c_puct = 0;
  EXPECT_THROW(cfg.validate(), ParameterError);
  cfg = {};
  cfg.m = 2;
  EXPECT_THROW(cfg.validate(), ParameterError);
  EXPECT_EQ(parse_combine_mode("full-only"), CombineMode::FullOnly);
  EXPECT_EQ(parse_combine_mode(combine_mode_name(CombineMode::SubgraphsOnly)), CombineMode::SubgraphsOnly);
  EXPECT_THROW(parse_combine_mode("x"), ParameterError);
  EXPECT_EQ(parse_scatter("max"), Scatter::Max);
}

// Scripted evaluator: the full graph gets a fixed pseudo-random policy keyed
// by cell, subgraphs get one keyed by (cell, call index). Every call is logged
// so the test can rebuild p2 on its own.
struct ScriptedEvaluator : Evaluator {
  struct Call {
    std::vector<std::vector<int>> cells;  // per graph, board cell of each node (-1 dummy)
    std::vector<GraphEval> outs;
  };
  mutable std::vector<Call> calls;

  static float weight(int cell, int salt) {
    uint64_t x = static_cast<uint64_t>(cell + 3) * 0x9E3779B97F4A7C15ull + static_cast<uint64_t>(salt) * 77;
    x ^= x >> 29;
    return 0.1f + static_cast<float>(x % 1000) / 1000.0f;
  }

  std::vector<GraphEval> evaluate(std::span<const BoardGraph* const> graphs) const override {
    Call call;
    for (size_t i = 0; i < graphs.size(); ++i) {
      const BoardGraph& g = *graphs[i];
      GraphEval e;
      float total = 0;
      for (int v = 0; v < g.num_nodes; ++v) {
        float w = weight(g.pos_of_node[v], i == 0 ? 0 : static_cast<int>(i));
        e.policy.push_back(w);
        total += w;
      }
      for (auto& p : e.policy) p /= total;
      e.value = 0.25f;
      call.cells.push_back(g.pos_of_node);
      call.outs.push_back(e);
    }
    calls.push_back(call);
    return call.outs;
  }
};

TEST(Expand, StoredPriorMatchesCombinationRule) {
  ScriptedEvaluator eval;
  Rng rng(3);
  SearchConfig cfg;
  cfg.k_subgraphs = 4;
  Search search(eval, cfg, rng);
  auto s = apply(initial_state(GameKind::gomoku(), 9), Action::place(40));
  double v = search.expand(s);
  EXPECT_NEAR(v, 0.25, 1e-6);
  ASSERT_EQ(eval.calls.size(), 1u);
  const auto& call = eval.calls[0];
  ASSERT_EQ(call.outs.size(), 5u);

  // Independent rebuild of p2: mean over the subgraphs that contain each cell.
  std::map<int, std::vector<double>> seen;
  for (size_t g = 1; g < call.outs.size(); ++g) {
    const auto& cells = call.cells[g];
    EXPECT_GE(cells.size() - 1, 49u);  // m = 8: d in [49, 64]
    EXPECT_LE(cells.size() - 1, 64u);
    for (size_t v = 0; v < cells.size(); ++v)
      if (cells[v] >= 0) seen[cells[v]].push_back(call.outs[g].policy[v]);
  }
  const TreeNode* node = search.find(s);
  ASSERT_NE(node, nullptr);
  double total = 0;
  std::vector<double> raw;
  for (int slot : node->slots) {
    double p1 = call.outs[0].policy[slot];
    double p2 = 0;
    if (seen.count(slot)) {
      for (double x : seen[slot]) p2 += x;
      p2 /= seen[slot].size();
    }
    raw.push_back((p1 + p1 * p2) / 2);
    total += raw.back();
  }
  for (size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(node->prior[i], raw[i] / total, 1e-6);
  EXPECT_EQ(node->slots.size(), 80u);
  for (int slot : node->slots) EXPECT_NE(slot, 81);  // dummy slot masked for gomoku
}

TEST(Expand, SmallBoardsSkipSubgraphsAndExplicitBadMThrows) {
  ScriptedEvaluator eval;
  Rng rng(4);
  Search search(eval, {}, rng);
  search.expand(initial_state(GameKind::gomoku(3), 3));
  EXPECT_EQ(eval.calls.back().outs.size(), 1u);

  SearchConfig cfg;
  cfg.m = 7;
  Search strict(eval, cfg, rng);
  EXPECT_THROW(strict.expand(initial_state(GameKind::othello(), 6)), ParameterError);
}

TEST(Expand, GoPassUsesDummySlot) {
  ScriptedEvaluator eval;
  Rng rng(5);
  Search search(eval, {}, rng);
  auto s = initial_state(GameKind::go(), 5);
  search.expand(s);
  const TreeNode* node = search.find(s);
  ASSERT_EQ(node->slots.back(), 25);
  EXPECT_NEAR(std::accumulate(node->prior.begin(), node->prior.end(), 0.0), 1.0, 1e-9);
}

TEST(Search, InvariantsAfterRun) {
  Rng init(6);
  nn::ArchConfig arch;
  arch.embed_dim = 8;
  auto net = std::make_shared<nn::Network>(arch, init);
  NetworkEvaluator eval(net);
  Rng rng(7);
  SearchConfig cfg;
  cfg.n_sim = 60;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::othello(), 6);
  search.run(s, 60);
  const TreeNode* root = search.find(s);
  ASSERT_NE(root, nullptr);
  EXPECT_EQ(root->visits(), 60);
  auto pi = search.policy(s, 1.0);
  EXPECT_NEAR(std::accumulate(pi.begin(), pi.end(), 0.0), 1.0, 1e-6);
  std::set<int> legal(root->slots.begin(), root->slots.end());
  for (int slot = 0; slot < s.num_slots(); ++slot) {
    EXPECT_GE(pi[slot], 0);
    if (!legal.count(slot)) {
      EXPECT_EQ(pi[slot], 0);
    }
  }
  EXPECT_NEAR(std::accumulate(root->prior.begin(), root->prior.end(), 0.0), 1.0, 1e-5);
  for (double q : root->q) {
    EXPECT_GE(q, -1);
    EXPECT_LE(q, 1);
  }
  search.run(s, 15);
  EXPECT_EQ(search.find(s)->visits(), 75);
}

TEST(Search, UnexpandedRootHasNoPolicy) {
  ScriptedEvaluator eval;
  Rng rng(8);
  Search search(eval, {}, rng);
  EXPECT_THROW(search.policy(initial_state(GameKind::othello(), 6), 1.0), StateError);
  EXPECT_EQ(search.find(initial_state(GameKind::othello(), 6)), nullptr);
}

TEST(Search, ZeroSubgraphsMatchesFullOnly) {
  Rng init(9);
  nn::ArchConfig arch;
  arch.embed_dim = 8;
  auto net = std::make_shared<nn::Network>(arch, init);
  NetworkEvaluator eval(net);
  auto s = initial_state(GameKind::gomoku(), 7);
  SearchConfig a;
  a.k_subgraphs = 0;
  SearchConfig b = a;
  b.combine = CombineMode::FullOnly;
  Rng ra(10), rb(10);
  Search sa(eval, a, ra), sb(eval, b, rb);
  sa.run(s, 40);
  sb.run(s, 40);
  EXPECT_EQ(sa.size(), sb.size());
  EXPECT_EQ(sa.find(s)->prior, sb.find(s)->prior);
  EXPECT_EQ(sa.find(s)->n, sb.find(s)->n);
  EXPECT_EQ(sa.find(s)->q, sb.find(s)->q);
}

TEST(Search, SingleSimulationConcentratesOnOneChild) {
  ScriptedEvaluator eval;
  Rng rng(11);
  SearchConfig cfg;
  cfg.n_sim = 1;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::othello(), 6);
  auto r = search.best_action(s);
  int nonzero = 0;
  for (double p : r.pi) nonzero += p > 0;
  EXPECT_EQ(nonzero, 1);
  EXPECT_EQ(r.pi[r.action.slot(6)], 1.0);
  // the single visit goes to the highest-prior child
  auto best = std::max_element(r.prior.begin(), r.prior.end()) - r.prior.begin();
  EXPECT_EQ(r.slots[best], r.action.slot(6));
}

TEST(Search, SeededBestActionIsReproducible) {
  Rng init(12);
  nn::ArchConfig arch;
  arch.embed_dim = 8;
  auto net = std::make_shared<nn::Network>(arch, init);
  NetworkEvaluator eval(net);
  auto s = initial_state(GameKind::gomoku(), 7);
  std::vector<int> moves[2];
  for (int run = 0; run < 2; ++run) {
    Rng rng(99);
    SearchConfig cfg;
    cfg.n_sim = 20;
    Search search(eval, cfg, rng);
    auto t = s;
    for (int i = 0; i < 4; ++i) {
      auto r = search.best_action(t);
      moves[run].push_back(r.action.slot(7));
      t = apply(t, r.action);
    }
  }
  EXPECT_EQ(moves[0], moves[1]);
}

TEST(Search, TauScheduleFollowsPly) {
  ScriptedEvaluator eval;
  Rng rng(13);
  SearchConfig cfg;
  cfg.n_sim = 30;
  cfg.tau_moves = 2;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::gomoku(), 7);
  EXPECT_EQ(search.best_action(s).tau, 1.0);
  s = apply(apply(s, Action::place(0)), Action::place(1));
  auto r = search.best_action(s);
  EXPECT_EQ(r.tau, 0.0);
  EXPECT_EQ(std::count(r.pi.begin(), r.pi.end(), 1.0), 1);
}

TEST(Search, FindsForcedWinInOne) {
  // Dark to move with an open three on row 2 and k = 4: (2,0) and (2,4) win.
  auto s = deserialize(
      "gomoku:4 6 1 8\n"
      "o....o\n"
      "......\n"
      ".xxx..\n"
      "..o...\n"
      "....o.\n"
      "......\n");
  ASSERT_FALSE(is_terminal(s));
  Rng init(14);
  nn::ArchConfig arch;
  arch.embed_dim = 8;
  auto net = std::make_shared<nn::Network>(arch, init);
  NetworkEvaluator eval(net);
  int wins = 0;
  for (int seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    SearchConfig cfg;
    cfg.n_sim = 100;
    cfg.tau_moves = 0;
    Search search(eval, cfg, rng);
    auto r = search.best_action(s);
    auto t = apply(s, r.action);
    wins += is_terminal(t) && terminal_value(t) == -1;
  }
  EXPECT_EQ(wins, 10);
}

TEST(Search, TicTacToeMinimax) {
  auto report = testing::tic_tac_toe_sweep(30, 200, 1);
  EXPECT_GE(report.optimal, 28) << report.optimal << "/" << report.runs;
}

TEST(Search, ReuseTreeKeepsStatistics) {
  ScriptedEvaluator eval;
  Rng rng(15);
  SearchConfig cfg;
  cfg.n_sim = 10;
  cfg.reuse_tree = true;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::othello(), 6);
  search.best_action(s);
  search.best_action(s);
  EXPECT_EQ(search.find(s)->visits(), 20);
  cfg.reuse_tree = false;
  Search fresh(eval, cfg, rng);
  fresh.best_action(s);
  fresh.best_action(s);
  EXPECT_EQ(fresh.find(s)->visits(), 10);
}

TEST(Search, TraceWritesJsonLines) {
  ScriptedEvaluator eval;
  Rng rng(16);
  SearchConfig cfg;
  cfg.n_sim = 5;
  Search search(eval, cfg, rng);
  std::ostringstream trace;
  search.set_trace(&trace);
  auto s = initial_state(GameKind::othello(), 6);
  search.best_action(s);
  search.best_action(s);
  std::istringstream lines(trace.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["N"].size(), 4u);
    EXPECT_TRUE(j.contains("Q"));
    ++count;
  }
  EXPECT_EQ(count, 2);
}

TEST(Search, DirichletNoiseKeepsPriorNormalised) {
  ScriptedEvaluator eval;
  Rng rng(17);
  SearchConfig cfg;
  cfg.n_sim = 3;
  cfg.dirichlet_alpha = 0.3;
  Search search(eval, cfg, rng);
  auto s = initial_state(GameKind::gomoku(), 7);
  search.run(s, 3);
  const auto& prior = search.find(s)->prior;
  EXPECT_NEAR(std::accumulate(prior.begin(), prior.end(), 0.0), 1.0, 1e-9);
}

TEST(TreeKey, DistinguishesSizeGameAndMover) {
  auto a = initial_state(GameKind::gomoku(), 5);
  auto b = initial_state(GameKind::gomoku(), 6);
  auto c = initial_state(GameKind::go(), 5);
  auto d = initial_state(GameKind::gomoku(4), 5);
  EXPECT_NE(tree_key(a), tree_key(b));
  EXPECT_NE(tree_key(a), tree_key(c));
  EXPECT_NE(tree_key(a), tree_key(d));
  // canonical equivalence: same stones with colours and mover swapped
  auto x = apply(a, Action::place(3));
  auto y = BoardState(x.kind(), 5, [&] {
    auto cells = x.cells();
    for (auto& v : cells) v = static_cast<int8_t>(-v);
    return cells;
  }(), kDark, x.ply(), {});
  EXPECT_EQ(tree_key(x), tree_key(y));
}

}  // namespace
}  // namespace saz
