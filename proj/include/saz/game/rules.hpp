#pragma once

#include <optional>
#include <vector>

#include "saz/game/board.hpp"

namespace saz {

BoardState initial_state(const GameKind& kind, int n);

// Legal actions in ascending slot order. Othello never yields an empty set for
// a live state: a mover without flips is skipped inside apply().
std::vector<Action> legal_actions(const BoardState& s);

// Throws RuleViolation naming the broken rule when `a` is illegal.
BoardState apply(const BoardState& s, const Action& a);

// Result from the perspective of s.to_move(), or nullopt while the game runs.
std::optional<int> terminal_value(const BoardState& s);
bool is_terminal(const BoardState& s);

// Same position with the mover recoloured to +1.
BoardState canonical(const BoardState& s);

// Heuristic score of the position for `player`.
double greedy_score(const BoardState& s, int player);
inline double greedy_score(const BoardState& s) { return greedy_score(s, s.to_move()); }

// Tromp-Taylor area (stones plus empty regions reaching only that colour).
int go_area(const BoardState& s, int color);
// Longest straight run of `color` stones in any of the four line directions.
int max_run(const BoardState& s, int color);

// Outcome for dark when a game is stopped before it ends: sign of dark's
// greedy score, 0 when level.
int adjudicate_for_dark(const BoardState& s);

Action random_player(const BoardState& s, Rng& rng);
Action greedy_player(const BoardState& s, Rng& rng);

// One of the 8 dihedral symmetries of the square board; sym in [0, 8).
// Returns perm with perm[cell] = image of cell under the symmetry.
std::vector<int> dihedral_permutation(int n, int sym);
BoardState transform(const BoardState& s, int sym);

}  // namespace saz
