#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "saz/game/rules.hpp"
#include "saz/graph/board_graph.hpp"
#include "saz/nn/gin_network.hpp"

namespace saz {

// How the stored prior is formed from the full-graph policy p1 and the
// scattered subgraph policy p2.
enum class CombineMode {
  Saz,            // (p1 + p1 * p2) / 2
  FullOnly,       // p1
  SubgraphsOnly,  // p2
};

enum class Scatter { Mean, Max };

std::string combine_mode_name(CombineMode mode);
CombineMode parse_combine_mode(const std::string& text);
std::string scatter_name(Scatter scatter);
Scatter parse_scatter(const std::string& text);

struct SearchConfig {
  int n_sim = 100;
  double c_puct = 1.5;
  // Subgraphs per expansion; round(n/2) when unset.
  std::optional<int> k_subgraphs;
  // Absolute subgraph size parameter. When unset, m = n - m_offset, and
  // boards too small for that m are searched without subgraphs.
  std::optional<int> m;
  int m_offset = 1;
  bool plus_one_upper = false;  // sample d up to (m+1)^2
  CombineMode combine = CombineMode::Saz;
  Scatter scatter = Scatter::Mean;
  int tau_moves = 25;  // tau = 1 while ply < tau_moves, then 0
  bool reuse_tree = false;
  double dirichlet_alpha = 0.0;  // root noise; off when 0
  double dirichlet_fraction = 0.25;

  void validate() const;
};

int default_k_subgraphs(int n);

// Per-graph network output in probability space.
struct GraphEval {
  std::vector<float> policy;  // one entry per node, sums to 1
  float value = 0;            // for the mover of the encoded state
};

class Evaluator {
 public:
  virtual ~Evaluator() = default;
  // Must be safe to call concurrently from several searches.
  virtual std::vector<GraphEval> evaluate(std::span<const BoardGraph* const> graphs) const = 0;
};

class NetworkEvaluator : public Evaluator {
 public:
  explicit NetworkEvaluator(std::shared_ptr<const nn::Network> net) : net_(std::move(net)) {}
  std::vector<GraphEval> evaluate(std::span<const BoardGraph* const> graphs) const override;
  const nn::Network& network() const { return *net_; }

 private:
  std::shared_ptr<const nn::Network> net_;
};

// Evaluator backed by an arbitrary callable; used for scripted priors.
class FunctionEvaluator : public Evaluator {
 public:
  using Fn = std::function<std::vector<GraphEval>(std::span<const BoardGraph* const>)>;
  explicit FunctionEvaluator(Fn fn) : fn_(std::move(fn)) {}
  std::vector<GraphEval> evaluate(std::span<const BoardGraph* const> graphs) const override { return fn_(graphs); }

 private:
  Fn fn_;
};

// Q + c * P * sqrt(n_total) / (1 + n_sa).
double puct_score(double q, double p, double n_sa, double n_total, double c_puct);

// Running-mean value update and visit increment for one edge.
struct EdgeStats {
  double q = 0;
  int n = 0;
};
EdgeStats backup(EdgeStats e, double v);

// p2 over `num_slots` parent slots: each subgraph's board-node probabilities
// are scattered to their parent nodes and reduced by mean or max over the
// subgraphs that sampled the node. Unsampled nodes and the dummy slot get 0.
std::vector<double> scatter_subgraph_policy(std::span<const Subgraph> subgraphs, std::span<const GraphEval> outputs,
                                            int num_slots, Scatter scatter);

// Prior over `legal_slots` (same order) from p1 and p2, masked and
// renormalised; uniform over the legal slots when no legal mass remains.
std::vector<double> combine_priors(std::span<const double> p1, std::span<const double> p2,
                                   std::span<const int> legal_slots, CombineMode mode);

// Visit counts to a play distribution over all slots. tau > 0: N^(1/tau)
// normalised. tau == 0: one-hot at the most visited slot, lowest slot on ties.
std::vector<double> visits_to_policy(std::span<const int> slots, std::span<const int> visits, int num_slots,
                                     double tau);

struct TreeKey {
  uint64_t hi = 0;
  uint64_t lo = 0;
  bool operator==(const TreeKey&) const = default;
};

// Key of canonical(s), including game, rule parameters and board side; Go
// keys also cover the position history because it shapes legality.
TreeKey tree_key(const BoardState& s);

struct TreeNode {
  std::vector<int> slots;  // legal action slots, ascending
  std::vector<double> prior;
  std::vector<double> q;
  std::vector<int> n;
  double value = 0;  // network value at expansion, mover's view
  int visits() const;
};

struct SearchResult {
  Action action = Action::pass();
  std::vector<double> pi;  // over n*n + 1 slots
  double tau = 1;
  double root_value = 0;  // visit-weighted mean Q at the root
  std::vector<int> slots;
  std::vector<int> visits;
  std::vector<double> q;
  std::vector<double> prior;
};

class Search {
 public:
  Search(const Evaluator& evaluator, SearchConfig cfg, Rng& rng);

  const SearchConfig& config() const { return cfg_; }

  // Expands `root` if needed (not counted as a simulation), then runs
  // `n_sim` simulations.
  void run(const BoardState& root, int n_sim);
  // One selection / expansion / backup pass from `root`; root must be expanded.
  void simulate(const BoardState& root);
  // Evaluates and stores a node for `s`; returns the value for s.to_move().
  double expand(const BoardState& s);

  std::vector<double> policy(const BoardState& root, double tau) const;
  const TreeNode* find(const BoardState& s) const;
  size_t size() const { return tree_.size(); }
  void clear() { tree_.clear(); }

  // Runs the configured simulations and picks a move; tau follows the ply
  // schedule. The tree is cleared first unless reuse_tree is set.
  SearchResult best_action(const BoardState& s);

  // Appends one JSON line per best_action call.
  void set_trace(std::ostream* out) { trace_ = out; }

 private:
  struct KeyHash {
    size_t operator()(const TreeKey& k) const { return static_cast<size_t>(k.hi ^ (k.lo * 0x9E3779B97F4A7C15ull)); }
  };

  int select(const TreeNode& node) const;
  void add_root_noise(TreeNode& node);
  int subgraph_m(int n) const;

  const Evaluator& evaluator_;
  SearchConfig cfg_;
  Rng& rng_;
  std::unordered_map<TreeKey, TreeNode, KeyHash> tree_;
  std::ostream* trace_ = nullptr;
};

}  // namespace saz
