#include "saz/graph/board_graph.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "saz/errors.hpp"
#include "saz/game/rules.hpp"

namespace saz {

BoardGraph encode(const BoardState& s) {
  const int n = s.size(), cells = n * n;
  const int mover = s.to_move();
  BoardGraph g;
  g.side = n;
  g.num_nodes = cells + 1;
  g.dummy_index = cells;
  g.features.resize(g.num_nodes, 0.0f);
  g.pos_of_node.resize(g.num_nodes);
  for (int i = 0; i < cells; ++i) {
    g.features[i] = static_cast<float>(s.at(i) * mover);
    g.pos_of_node[i] = i;
  }
  g.pos_of_node[cells] = -1;
  g.edges.reserve(static_cast<size_t>(4) * n * (n - 1) + 2 * cells);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int p = r * n + c;
      if (c + 1 < n) {
        g.edges.push_back({p, p + 1});
        g.edges.push_back({p + 1, p});
      }
      if (r + 1 < n) {
        g.edges.push_back({p, p + n});
        g.edges.push_back({p + n, p});
      }
    }
  }
  for (int p = 0; p < cells; ++p) {
    g.edges.push_back({p, g.dummy_index});
    g.edges.push_back({g.dummy_index, p});
  }
  return g;
}

SubgraphSizeRange subgraph_size_range(int m, int num_board_nodes, bool plus_one_upper) {
  if ((m - 1) * (m - 1) < 4)
    throw ParameterError("subgraph parameter m=" + std::to_string(m) + " needs (m-1)^2 >= 4");
  if (m * m > num_board_nodes)
    throw ParameterError("subgraph parameter m=" + std::to_string(m) + " exceeds the board (" +
                         std::to_string(num_board_nodes) + " nodes)");
  int hi = plus_one_upper ? std::min((m + 1) * (m + 1), num_board_nodes) : m * m;
  return {(m - 1) * (m - 1), hi};
}

Subgraph induced_subgraph(const BoardGraph& g, std::vector<int> parent_nodes) {
  std::sort(parent_nodes.begin(), parent_nodes.end());
  std::vector<int> local(g.num_nodes, -1);
  for (size_t i = 0; i < parent_nodes.size(); ++i) {
    int p = parent_nodes[i];
    if (p < 0 || p >= g.num_nodes || p == g.dummy_index)
      throw ParameterError("subgraph node " + std::to_string(p) + " is not a board node");
    local[p] = static_cast<int>(i);
  }
  Subgraph sub;
  const int d = static_cast<int>(parent_nodes.size());
  BoardGraph& h = sub.graph;
  h.side = g.side;
  h.num_nodes = d + 1;
  h.dummy_index = d;
  h.features.resize(d + 1, 0.0f);
  h.pos_of_node.resize(d + 1, -1);
  for (int i = 0; i < d; ++i) {
    h.features[i] = g.features[parent_nodes[i]];
    h.pos_of_node[i] = g.pos_of_node[parent_nodes[i]];
  }
  for (const Edge& e : g.edges) {
    int u = local[e.src], v = local[e.dst];
    if (u >= 0 && v >= 0) h.edges.push_back({u, v});
  }
  for (int i = 0; i < d; ++i) {
    h.edges.push_back({i, d});
    h.edges.push_back({d, i});
  }
  sub.node_map = std::move(parent_nodes);
  return sub;
}

Subgraph sample_subgraph(const BoardGraph& g, int m, Rng& rng, bool plus_one_upper) {
  const int board_nodes = g.num_board_nodes();
  auto range = subgraph_size_range(m, board_nodes, plus_one_upper);
  int d = std::uniform_int_distribution<int>(range.lo, range.hi)(rng);
  std::vector<int> pool;
  pool.reserve(board_nodes);
  for (int v = 0; v < g.num_nodes; ++v)
    if (v != g.dummy_index) pool.push_back(v);
  // Partial Fisher-Yates: the first d entries become a uniform d-subset.
  for (int i = 0; i < d; ++i) {
    int j = std::uniform_int_distribution<int>(i, board_nodes - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(d);
  return induced_subgraph(g, std::move(pool));
}

std::string to_edge_list_text(const BoardGraph& g) {
  std::ostringstream out;
  out << "# nodes " << g.num_nodes << " dummy " << g.dummy_index << '\n';
  for (const Edge& e : g.edges) out << e.src << ' ' << e.dst << '\n';
  out << "# features\n";
  for (int v = 0; v < g.num_nodes; ++v) out << v << ' ' << g.features[v] << '\n';
  return out.str();
}

}  // namespace saz
