#pragma once

#include <string>
#include <vector>

#include "oracles.hpp"
#include "saz/errors.hpp"
#include "saz/game/rules.hpp"

namespace saz::testing {

struct OracleReport {
  int positions = 0;
  int mismatches = 0;
  std::string first_mismatch;
};

// Walks random Othello games on even sizes 4..10 and, at every visited
// position, compares the legal set and the result of every legal move with the
// line-scan oracle.
inline OracleReport othello_oracle_sweep(int positions, uint64_t seed) {
  OracleReport report;
  Rng rng(seed);
  const int sizes[] = {4, 6, 8, 10};
  auto note = [&](const BoardState& s, const std::string& what) {
    ++report.mismatches;
    if (report.first_mismatch.empty()) report.first_mismatch = what + "\n" + serialize(s);
  };
  while (report.positions < positions) {
    int n = sizes[rng() % 4];
    BoardState s = initial_state(GameKind::othello(), n);
    while (!is_terminal(s) && report.positions < positions) {
      ++report.positions;
      OthelloOracle oracle{n, std::vector<int>(s.cells().begin(), s.cells().end())};
      auto expected = oracle.legal(s.to_move());
      std::vector<int> got;
      for (const auto& a : legal_actions(s)) got.push_back(a.index());
      if (got != expected) {
        note(s, "legal set differs");
        break;
      }
      for (int index : expected) {
        auto [grid, next] = oracle.play(index, s.to_move());
        BoardState t = apply(s, Action::place(index));
        if (std::vector<int>(t.cells().begin(), t.cells().end()) != grid)
          note(s, "cells differ after " + std::to_string(index));
        else if (t.to_move() != next)
          note(s, "mover differs after " + std::to_string(index));
      }
      s = apply(s, Action::place(expected[rng() % expected.size()]));
    }
  }
  return report;
}

}  // namespace saz::testing
