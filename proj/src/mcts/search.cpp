#include "saz/mcts/search.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstring>
#include <ostream>

#include "json.hpp"
#include "saz/errors.hpp"

namespace saz {

std::string combine_mode_name(CombineMode mode) {
  switch (mode) {
    case CombineMode::Saz: return "saz";
    case CombineMode::FullOnly: return "full-only";
    case CombineMode::SubgraphsOnly: return "subgraphs-only";
  }
  return "unknown";
}

CombineMode parse_combine_mode(const std::string& text) {
  if (text == "saz") return CombineMode::Saz;
  if (text == "full-only") return CombineMode::FullOnly;
  if (text == "subgraphs-only") return CombineMode::SubgraphsOnly;
  throw ParameterError("unknown combine mode '" + text + "' (saz, full-only, subgraphs-only)");
}

std::string scatter_name(Scatter scatter) { return scatter == Scatter::Mean ? "mean" : "max"; }

Scatter parse_scatter(const std::string& text) {
  if (text == "mean") return Scatter::Mean;
  if (text == "max") return Scatter::Max;
  throw ParameterError("unknown scatter '" + text + "' (mean, max)");
}

void SearchConfig::validate() const {
  if (n_sim < 1) throw ParameterError("simulations must be >= 1");
  if (!(c_puct > 0)) throw ParameterError("c_puct must be > 0");
  if (k_subgraphs && *k_subgraphs < 0) throw ParameterError("subgraph count must be >= 0");
  if (m && *m < 3) throw ParameterError("subgraph m must satisfy (m-1)^2 >= 4");
  if (m_offset < 0) throw ParameterError("subgraph m offset must be >= 0");
  if (tau_moves < 0) throw ParameterError("tau_moves must be >= 0");
  if (dirichlet_alpha < 0 || dirichlet_fraction < 0 || dirichlet_fraction > 1)
    throw ParameterError("dirichlet parameters out of range");
}

int default_k_subgraphs(int n) { return static_cast<int>(std::lround(n / 2.0)); }

std::vector<GraphEval> NetworkEvaluator::evaluate(std::span<const BoardGraph* const> graphs) const {
  auto batch = nn::GraphBatch::pack(graphs);
  auto out = net_->evaluate(batch);
  std::vector<GraphEval> evals(graphs.size());
  for (size_t g = 0; g < graphs.size(); ++g) {
    auto& e = evals[g];
    e.policy.resize(out.offsets[g + 1] - out.offsets[g]);
    for (size_t v = 0; v < e.policy.size(); ++v) e.policy[v] = std::exp(out.log_policy[out.offsets[g] + v]);
    e.value = out.value[g];
  }
  return evals;
}

double puct_score(double q, double p, double n_sa, double n_total, double c_puct) {
  return q + c_puct * p * std::sqrt(n_total) / (1.0 + n_sa);
}

EdgeStats backup(EdgeStats e, double v) { return {(e.n * e.q + v) / (e.n + 1), e.n + 1}; }

std::vector<double> scatter_subgraph_policy(std::span<const Subgraph> subgraphs, std::span<const GraphEval> outputs,
                                            int num_slots, Scatter scatter) {
  if (subgraphs.size() != outputs.size()) throw ShapeError("one output per subgraph expected");
  std::vector<double> acc(num_slots, 0.0);
  std::vector<int> count(num_slots, 0);
  for (size_t i = 0; i < subgraphs.size(); ++i) {
    const auto& map = subgraphs[i].node_map;
    if (outputs[i].policy.size() != map.size() + 1) throw ShapeError("subgraph output size mismatch");
    for (size_t j = 0; j < map.size(); ++j) {
      int parent = map[j];
      double p = outputs[i].policy[j];
      if (scatter == Scatter::Mean || count[parent] == 0)
        acc[parent] = scatter == Scatter::Mean ? acc[parent] + p : p;
      else
        acc[parent] = std::max(acc[parent], p);
      ++count[parent];
    }
  }
  if (scatter == Scatter::Mean)
    for (int s = 0; s < num_slots; ++s)
      if (count[s] > 0) acc[s] /= count[s];
  return acc;
}

std::vector<double> combine_priors(std::span<const double> p1, std::span<const double> p2,
                                   std::span<const int> legal_slots, CombineMode mode) {
  std::vector<double> prior(legal_slots.size());
  double total = 0;
  for (size_t i = 0; i < legal_slots.size(); ++i) {
    int s = legal_slots[i];
    double a = p1[s], b = p2[s];
    double r = 0;
    switch (mode) {
      case CombineMode::Saz: r = (a + a * b) / 2; break;
      case CombineMode::FullOnly: r = a; break;
      case CombineMode::SubgraphsOnly: r = b; break;
    }
    prior[i] = r;
    total += r;
  }
  if (!(total > 0) || !std::isfinite(total)) {
    std::fill(prior.begin(), prior.end(), 1.0 / static_cast<double>(prior.size()));
  } else {
    for (auto& p : prior) p /= total;
  }
  return prior;
}

std::vector<double> visits_to_policy(std::span<const int> slots, std::span<const int> visits, int num_slots,
                                     double tau) {
  if (slots.size() != visits.size()) throw ShapeError("slots and visits differ in length");
  std::vector<double> pi(num_slots, 0.0);
  int most = -1;
  size_t best = 0;
  for (size_t i = 0; i < slots.size(); ++i) {
    if (visits[i] > most || (visits[i] == most && slots[i] < slots[best])) {
      most = visits[i];
      best = i;
    }
  }
  if (most <= 0) throw StateError("policy needs at least one visit at the root");
  if (tau <= 0) {
    pi[slots[best]] = 1.0;
    return pi;
  }
  double total = 0;
  for (size_t i = 0; i < slots.size(); ++i) {
    double w = visits[i] == 0 ? 0.0 : std::pow(static_cast<double>(visits[i]) / most, 1.0 / tau);
    pi[slots[i]] = w;
    total += w;
  }
  for (auto& p : pi) p /= total;
  return pi;
}

namespace {

uint64_t mix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

struct KeyBuilder {
  uint64_t a = 0x243F6A8885A308D3ull;
  uint64_t b = 0x13198A2E03707344ull;
  void add(uint64_t w) {
    a = mix(a ^ w);
    b = mix(b + (w * 0xD6E8FEB86659FD93ull) + 0xA4093822299F31D0ull);
  }
};

}  // namespace

TreeKey tree_key(const BoardState& s) {
  KeyBuilder k;
  uint64_t komi_bits;
  static_assert(sizeof(komi_bits) == sizeof(double));
  double komi = s.kind().komi;
  std::memcpy(&komi_bits, &komi, sizeof komi);
  k.add(static_cast<uint64_t>(s.game()));
  k.add(static_cast<uint64_t>(s.kind().k));
  k.add(komi_bits);
  k.add(static_cast<uint64_t>(s.size()));
  k.add(static_cast<uint64_t>(s.consecutive_passes()));
  const int mover = s.to_move();
  uint64_t word = 0;
  int filled = 0;
  for (int8_t c : s.cells()) {
    word = (word << 2) | static_cast<uint64_t>(c * mover + 1);
    if (++filled == 32) {
      k.add(word);
      word = 0;
      filled = 0;
    }
  }
  k.add(word);
  if (s.game() == Game::Go) {
    uint64_t seen = 0;
    for (uint64_t h : s.history()) seen += mix(h);
    k.add(seen);
  }
  return {k.a, k.b};
}

int TreeNode::visits() const {
  int total = 0;
  for (int v : n) total += v;
  return total;
}

Search::Search(const Evaluator& evaluator, SearchConfig cfg, Rng& rng)
    : evaluator_(evaluator), cfg_(std::move(cfg)), rng_(rng) {
  cfg_.validate();
}

int Search::subgraph_m(int n) const {
  if (cfg_.m) {
    subgraph_size_range(*cfg_.m, n * n, cfg_.plus_one_upper);  // throws when m does not fit
    return *cfg_.m;
  }
  int m = n - cfg_.m_offset;
  if ((m - 1) * (m - 1) < 4 || m < 3) return 0;
  return m;
}

double Search::expand(const BoardState& s) {
  if (is_terminal(s)) throw StateError("cannot expand a finished game");
  const int n = s.size(), num_slots = s.num_slots();
  TreeNode node;
  for (const auto& a : legal_actions(s)) node.slots.push_back(a.slot(n));

  BoardGraph g = encode(s);
  std::vector<Subgraph> subs;
  if (cfg_.combine != CombineMode::FullOnly) {
    int k = cfg_.k_subgraphs.value_or(default_k_subgraphs(n));
    int m = k > 0 ? subgraph_m(n) : 0;
    if (m > 0) {
      subs.reserve(k);
      for (int i = 0; i < k; ++i) subs.push_back(sample_subgraph(g, m, rng_, cfg_.plus_one_upper));
    }
  }
  std::vector<const BoardGraph*> graphs{&g};
  for (const auto& sub : subs) graphs.push_back(&sub.graph);
  auto outs = evaluator_.evaluate(graphs);
  if (outs.size() != graphs.size()) throw ShapeError("evaluator returned the wrong number of outputs");
  if (static_cast<int>(outs[0].policy.size()) != num_slots) throw ShapeError("full-graph policy size mismatch");

  std::vector<double> p1(outs[0].policy.begin(), outs[0].policy.end());
  std::vector<double> p2 = scatter_subgraph_policy(subs, std::span<const GraphEval>(outs).subspan(1), num_slots,
                                                   cfg_.scatter);
  node.prior = combine_priors(p1, p2, node.slots, cfg_.combine);
  node.q.assign(node.slots.size(), 0.0);
  node.n.assign(node.slots.size(), 0);
  node.value = std::clamp(static_cast<double>(outs[0].value), -1.0, 1.0);
  double v = node.value;
  tree_[tree_key(s)] = std::move(node);
  return v;
}

const TreeNode* Search::find(const BoardState& s) const {
  auto it = tree_.find(tree_key(s));
  return it == tree_.end() ? nullptr : &it->second;
}

int Search::select(const TreeNode& node) const {
  const double total = node.visits();
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < node.slots.size(); ++i) {
    double score = puct_score(node.q[i], node.prior[i], node.n[i], total, cfg_.c_puct);
    if (best < 0 || score > best_score || (score == best_score && node.prior[i] > node.prior[best])) {
      best = static_cast<int>(i);
      best_score = score;
    }
  }
  return best;
}

void Search::simulate(const BoardState& root) {
  struct Step {
    TreeNode* node;
    int index;
    int mover;
  };
  std::vector<Step> path;
  BoardState s = root;
  double v = 0;
  while (true) {
    if (auto z = terminal_value(s)) {
      v = *z;
      break;
    }
    auto it = tree_.find(tree_key(s));
    if (it == tree_.end()) {
      v = expand(s);
      break;
    }
    TreeNode& node = it->second;
    int i = select(node);
    path.push_back({&node, i, s.to_move()});
    s = apply(s, Action::from_slot(node.slots[i], s.size()));
  }
  // v is for s.to_move(); each edge is credited from its own mover's view.
  const int leaf_mover = s.to_move();
  for (auto& step : path) {
    double signed_v = step.mover == leaf_mover ? v : -v;
    auto e = backup({step.node->q[step.index], step.node->n[step.index]}, signed_v);
    step.node->q[step.index] = e.q;
    step.node->n[step.index] = e.n;
  }
}

void Search::add_root_noise(TreeNode& node) {
  std::gamma_distribution<double> gamma(cfg_.dirichlet_alpha, 1.0);
  std::vector<double> noise(node.prior.size());
  double total = 0;
  for (auto& x : noise) total += (x = gamma(rng_));
  if (!(total > 0)) return;
  for (size_t i = 0; i < noise.size(); ++i)
    node.prior[i] = (1 - cfg_.dirichlet_fraction) * node.prior[i] + cfg_.dirichlet_fraction * noise[i] / total;
}

void Search::run(const BoardState& root, int n_sim) {
  if (is_terminal(root)) throw StateError("cannot search a finished game");
  auto key = tree_key(root);
  if (!tree_.count(key)) {
    expand(root);
    if (cfg_.dirichlet_alpha > 0) add_root_noise(tree_.at(key));
  }
  for (int i = 0; i < n_sim; ++i) simulate(root);
}

std::vector<double> Search::policy(const BoardState& root, double tau) const {
  const TreeNode* node = find(root);
  if (!node) throw StateError("policy requested for an unexpanded root");
  return visits_to_policy(node->slots, node->n, root.num_slots(), tau);
}

SearchResult Search::best_action(const BoardState& s) {
  if (!cfg_.reuse_tree) clear();
  run(s, cfg_.n_sim);
  const TreeNode& node = *find(s);
  SearchResult r;
  r.tau = s.ply() < cfg_.tau_moves ? 1.0 : 0.0;
  r.pi = visits_to_policy(node.slots, node.n, s.num_slots(), r.tau);
  std::discrete_distribution<int> pick(r.pi.begin(), r.pi.end());
  r.action = Action::from_slot(pick(rng_), s.size());
  r.slots = node.slots;
  r.visits = node.n;
  r.q = node.q;
  r.prior = node.prior;
  double weighted = 0;
  int total = 0;
  for (size_t i = 0; i < node.slots.size(); ++i) {
    weighted += node.n[i] * node.q[i];
    total += node.n[i];
  }
  r.root_value = total > 0 ? weighted / total : node.value;
  if (trace_) {
    nlohmann::json line{{"ply", s.ply()},       {"n", s.size()},      {"tau", r.tau},
                        {"action", r.action.to_string()}, {"slots", r.slots}, {"N", r.visits},
                        {"Q", r.q},             {"P", r.prior},       {"root_value", r.root_value}};
    *trace_ << line.dump() << '\n';
  }
  return r;
}

}  // namespace saz
