#pragma once

#include <string>
#include <vector>

#include "saz/game/board.hpp"

namespace saz {

struct Edge {
  int src;
  int dst;
  bool operator==(const Edge&) const = default;
  auto operator<=>(const Edge&) const = default;
};

// Board as a graph: one node per cell plus a dummy node wired to every
// board node. Edges are directed and stored in both directions.
struct BoardGraph {
  int num_nodes = 0;
  std::vector<float> features;  // h0 per node
  std::vector<Edge> edges;
  int dummy_index = -1;
  // Board cell index of each node (row * side + col); -1 for the dummy.
  std::vector<int> pos_of_node;
  int side = 0;  // board side of the position the graph came from

  int num_board_nodes() const { return num_nodes - 1; }
};

// Graph of canonical(s): the mover's stones are +1. The dummy is the last node.
BoardGraph encode(const BoardState& s);

struct Subgraph {
  std::vector<int> node_map;  // parent node id of each sampled board node, ascending
  BoardGraph graph;           // induced graph; node i < node_map.size() maps to node_map[i]
};

// Inclusive bounds on the number of sampled board nodes.
struct SubgraphSizeRange {
  int lo;
  int hi;
};

// d in [(m-1)^2, m^2]; with `plus_one_upper` the upper bound is (m+1)^2
// (capped at the board node count).
SubgraphSizeRange subgraph_size_range(int m, int num_board_nodes, bool plus_one_upper = false);

// Throws ParameterError unless (m-1)^2 >= 4 and m^2 <= board node count.
Subgraph sample_subgraph(const BoardGraph& g, int m, Rng& rng, bool plus_one_upper = false);

// Induced subgraph over the given parent board nodes plus a fresh dummy.
Subgraph induced_subgraph(const BoardGraph& g, std::vector<int> parent_nodes);

// "u v" per directed edge, then a "# features" block with "node value" lines.
std::string to_edge_list_text(const BoardGraph& g);

}  // namespace saz
