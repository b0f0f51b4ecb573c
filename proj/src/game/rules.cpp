#include "saz/game/rules.hpp"

#include <algorithm>
#include <array>
#include <unordered_set>

#include "saz/errors.hpp"

namespace saz {
namespace {

constexpr std::array<std::array<int, 2>, 8> kDirections8{
    {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}, {0, 1}, {1, -1}, {1, 0}, {1, 1}}};

uint64_t zobrist(int index, int color) {
  // Must agree with position_hash() in board.cpp.
  uint64_t x = static_cast<uint64_t>(index) * 2 + (color > 0 ? 1 : 0);
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

BoardState make_next(const BoardState& s, std::vector<int8_t> cells, int to_move, uint64_t hash,
                     int passes) {
  auto history = s.history();
  history.push_back(hash);
  return BoardState(s.kind(), s.size(), std::move(cells), to_move, s.ply() + 1, std::move(history),
                    passes);
}

// ---------------------------------------------------------------- Othello

int othello_flips_in_direction(const std::vector<int8_t>& cells, int n, int row, int col, int dr,
                               int dc, int player) {
  int r = row + dr, c = col + dc, run = 0;
  while (r >= 0 && r < n && c >= 0 && c < n && cells[r * n + c] == -player) {
    r += dr;
    c += dc;
    ++run;
  }
  if (run > 0 && r >= 0 && r < n && c >= 0 && c < n && cells[r * n + c] == player) return run;
  return 0;
}

bool othello_is_legal(const std::vector<int8_t>& cells, int n, int index, int player) {
  if (cells[index] != kEmpty) return false;
  int row = index / n, col = index % n;
  for (const auto& d : kDirections8)
    if (othello_flips_in_direction(cells, n, row, col, d[0], d[1], player) > 0) return true;
  return false;
}

bool othello_has_move(const std::vector<int8_t>& cells, int n, int player) {
  for (int i = 0; i < n * n; ++i)
    if (othello_is_legal(cells, n, i, player)) return true;
  return false;
}

BoardState othello_apply(const BoardState& s, int index) {
  const int n = s.size(), player = s.to_move();
  if (s.at(index) != kEmpty) throw RuleViolation(Rule::Occupied, "cell " + std::to_string(index) + " is occupied");
  auto cells = s.cells();
  int row = index / n, col = index % n, flipped = 0;
  for (const auto& d : kDirections8) {
    int run = othello_flips_in_direction(cells, n, row, col, d[0], d[1], player);
    for (int step = 1; step <= run; ++step) cells[(row + d[0] * step) * n + col + d[1] * step] = player;
    flipped += run;
  }
  if (flipped == 0) throw RuleViolation(Rule::NoFlip, "cell " + std::to_string(index) + " flips nothing");
  cells[index] = player;
  int next = -player;
  if (!othello_has_move(cells, n, next) && othello_has_move(cells, n, player)) next = player;
  uint64_t hash = position_hash(cells);
  return make_next(s, std::move(cells), next, hash, 0);
}

// ---------------------------------------------------------------- Gomoku

int run_length_at(const std::vector<int8_t>& cells, int n, int row, int col, int dr, int dc) {
  int color = cells[row * n + col], len = 0;
  int r = row, c = col;
  while (r >= 0 && r < n && c >= 0 && c < n && cells[r * n + c] == color) {
    ++len;
    r += dr;
    c += dc;
  }
  return len;
}

int max_run_cells(const std::vector<int8_t>& cells, int n, int color) {
  static constexpr std::array<std::array<int, 2>, 4> kLines{{{0, 1}, {1, 0}, {1, 1}, {1, -1}}};
  int best = 0;
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      if (cells[r * n + c] != color) continue;
      for (const auto& d : kLines) {
        int pr = r - d[0], pc = c - d[1];
        if (pr >= 0 && pr < n && pc >= 0 && pc < n && cells[pr * n + pc] == color) continue;
        best = std::max(best, run_length_at(cells, n, r, c, d[0], d[1]));
      }
    }
  }
  return best;
}

// ---------------------------------------------------------------- Go

// Connected groups of stones with their liberty counts.
struct GoGroups {
  std::vector<int> group_of;  // -1 for empty cells
  std::vector<int> liberties;
  std::vector<std::vector<int>> stones;

  GoGroups(const std::vector<int8_t>& cells, int n) : group_of(cells.size(), -1) {
    std::vector<int> stamp(cells.size(), -1);
    std::vector<int> stack;
    for (int start = 0; start < n * n; ++start) {
      if (cells[start] == kEmpty || group_of[start] >= 0) continue;
      int id = static_cast<int>(stones.size());
      stones.emplace_back();
      int libs = 0;
      stack.assign(1, start);
      group_of[start] = id;
      while (!stack.empty()) {
        int p = stack.back();
        stack.pop_back();
        stones[id].push_back(p);
        for_each_neighbor(p, n, [&](int q) {
          if (cells[q] == kEmpty) {
            if (stamp[q] != id) {
              stamp[q] = id;
              ++libs;
            }
          } else if (cells[q] == cells[start] && group_of[q] < 0) {
            group_of[q] = id;
            stack.push_back(q);
          }
        });
      }
      liberties.push_back(libs);
    }
  }

  template <typename F>
  static void for_each_neighbor(int p, int n, F&& f) {
    int r = p / n, c = p % n;
    if (r > 0) f(p - n);
    if (r + 1 < n) f(p + n);
    if (c > 0) f(p - 1);
    if (c + 1 < n) f(p + 1);
  }
};

// Outcome of trying a placement: captured group ids and the resulting hash,
// or the rule it breaks.
struct GoPlacement {
  std::optional<Rule> violation;
  std::vector<int> captured_groups;
  uint64_t hash = 0;
};

GoPlacement go_try_place(const BoardState& s, const GoGroups& groups,
                         const std::unordered_set<uint64_t>& seen, int p) {
  const int n = s.size(), me = s.to_move();
  GoPlacement out;
  if (s.at(p) != kEmpty) {
    out.violation = Rule::Occupied;
    return out;
  }
  bool breathes = false;
  GoGroups::for_each_neighbor(p, n, [&](int q) {
    int v = s.at(q);
    if (v == kEmpty) {
      breathes = true;
    } else if (v == me) {
      if (groups.liberties[groups.group_of[q]] > 1) breathes = true;
    } else if (groups.liberties[groups.group_of[q]] == 1) {
      int g = groups.group_of[q];
      if (std::find(out.captured_groups.begin(), out.captured_groups.end(), g) == out.captured_groups.end())
        out.captured_groups.push_back(g);
    }
  });
  if (!breathes && out.captured_groups.empty()) {
    out.violation = Rule::Suicide;
    return out;
  }
  uint64_t h = s.position_hash() ^ zobrist(p, me);
  for (int g : out.captured_groups)
    for (int q : groups.stones[g]) h ^= zobrist(q, -me);
  out.hash = h;
  if (seen.count(h)) out.violation = Rule::Superko;
  return out;
}

std::unordered_set<uint64_t> seen_positions(const BoardState& s) {
  return {s.history().begin(), s.history().end()};
}

BoardState go_apply(const BoardState& s, const Action& a) {
  if (a.is_pass()) return make_next(s, s.cells(), -s.to_move(), s.position_hash(), s.consecutive_passes() + 1);
  GoGroups groups(s.cells(), s.size());
  auto placement = go_try_place(s, groups, seen_positions(s), a.index());
  if (placement.violation)
    throw RuleViolation(*placement.violation, "cell " + std::to_string(a.index()));
  auto cells = s.cells();
  cells[a.index()] = static_cast<int8_t>(s.to_move());
  for (int g : placement.captured_groups)
    for (int q : groups.stones[g]) cells[q] = kEmpty;
  return make_next(s, std::move(cells), -s.to_move(), placement.hash, 0);
}

int go_area_cells(const std::vector<int8_t>& cells, int n, int color) {
  int area = 0;
  std::vector<char> visited(cells.size(), 0);
  std::vector<int> stack, region;
  for (int start = 0; start < n * n; ++start) {
    if (cells[start] == color) {
      ++area;
      continue;
    }
    if (cells[start] != kEmpty || visited[start]) continue;
    bool touches_color = false, touches_other = false;
    region.clear();
    stack.assign(1, start);
    visited[start] = 1;
    while (!stack.empty()) {
      int p = stack.back();
      stack.pop_back();
      region.push_back(p);
      GoGroups::for_each_neighbor(p, n, [&](int q) {
        if (cells[q] == kEmpty) {
          if (!visited[q]) {
            visited[q] = 1;
            stack.push_back(q);
          }
        } else if (cells[q] == color) {
          touches_color = true;
        } else {
          touches_other = true;
        }
      });
    }
    if (touches_color && !touches_other) area += static_cast<int>(region.size());
  }
  return area;
}

int sign(double x) { return (x > 0) - (x < 0); }

}  // namespace

BoardState initial_state(const GameKind& kind, int n) {
  validate_size(kind, n);
  std::vector<int8_t> cells(static_cast<size_t>(n) * n, kEmpty);
  if (kind.game == Game::Othello) {
    int c = n / 2;
    cells[(c - 1) * n + (c - 1)] = kLight;
    cells[c * n + c] = kLight;
    cells[(c - 1) * n + c] = kDark;
    cells[c * n + (c - 1)] = kDark;
  }
  return BoardState(kind, n, std::move(cells), kDark, 0, {});
}

std::optional<int> terminal_value(const BoardState& s) {
  const int n = s.size(), me = s.to_move();
  switch (s.game()) {
    case Game::Othello: {
      if (othello_has_move(s.cells(), n, me) || othello_has_move(s.cells(), n, -me)) return std::nullopt;
      return sign(s.count(me) - s.count(-me));
    }
    case Game::Gomoku: {
      const int k = s.kind().k;
      if (max_run_cells(s.cells(), n, me) >= k) return 1;
      if (max_run_cells(s.cells(), n, -me) >= k) return -1;
      if (s.count(kEmpty) == 0) return 0;
      return std::nullopt;
    }
    case Game::Go: {
      if (s.consecutive_passes() < 2) return std::nullopt;
      double dark_margin = go_area_cells(s.cells(), n, kDark) - go_area_cells(s.cells(), n, kLight) - s.kind().komi;
      return sign(dark_margin) * me;
    }
  }
  return std::nullopt;
}

bool is_terminal(const BoardState& s) { return terminal_value(s).has_value(); }

std::vector<Action> legal_actions(const BoardState& s) {
  if (is_terminal(s)) throw StateError("no legal actions in a finished game");
  const int n = s.size();
  std::vector<Action> actions;
  switch (s.game()) {
    case Game::Othello:
      for (int i = 0; i < n * n; ++i)
        if (othello_is_legal(s.cells(), n, i, s.to_move())) actions.push_back(Action::place(i));
      if (actions.empty()) throw StateError("othello mover has no placement; state was not produced by apply()");
      break;
    case Game::Gomoku:
      for (int i = 0; i < n * n; ++i)
        if (s.at(i) == kEmpty) actions.push_back(Action::place(i));
      break;
    case Game::Go: {
      GoGroups groups(s.cells(), n);
      auto seen = seen_positions(s);
      for (int i = 0; i < n * n; ++i)
        if (s.at(i) == kEmpty && !go_try_place(s, groups, seen, i).violation) actions.push_back(Action::place(i));
      actions.push_back(Action::pass());
      break;
    }
  }
  return actions;
}

BoardState apply(const BoardState& s, const Action& a) {
  if (is_terminal(s)) throw StateError("game already finished");
  const int n = s.size();
  if (a.is_pass()) {
    if (s.game() != Game::Go) throw RuleViolation(Rule::PassNotAllowed, game_name(s.game()) + " has no pass");
    return go_apply(s, a);
  }
  if (a.index() < 0 || a.index() >= n * n)
    throw RuleViolation(Rule::OutOfRange, "cell " + std::to_string(a.index()) + " is off the board");
  switch (s.game()) {
    case Game::Othello: return othello_apply(s, a.index());
    case Game::Gomoku: {
      if (s.at(a.index()) != kEmpty)
        throw RuleViolation(Rule::Occupied, "cell " + std::to_string(a.index()) + " is occupied");
      auto cells = s.cells();
      cells[a.index()] = static_cast<int8_t>(s.to_move());
      uint64_t hash = s.position_hash() ^ zobrist(a.index(), s.to_move());
      return make_next(s, std::move(cells), -s.to_move(), hash, 0);
    }
    case Game::Go: return go_apply(s, a);
  }
  throw StateError("unknown game");
}

BoardState canonical(const BoardState& s) {
  if (s.to_move() == kDark) return s;
  auto cells = s.cells();
  for (auto& c : cells) c = static_cast<int8_t>(-c);
  return BoardState(s.kind(), s.size(), std::move(cells), kDark, s.ply(), s.history(), s.consecutive_passes());
}

int go_area(const BoardState& s, int color) { return go_area_cells(s.cells(), s.size(), color); }

int max_run(const BoardState& s, int color) { return max_run_cells(s.cells(), s.size(), color); }

double greedy_score(const BoardState& s, int player) {
  switch (s.game()) {
    case Game::Othello: return s.count(player) - s.count(-player);
    case Game::Gomoku: return max_run(s, player) - max_run(s, -player);
    case Game::Go: return go_area(s, player) - go_area(s, -player);
  }
  return 0;
}

int adjudicate_for_dark(const BoardState& s) { return sign(greedy_score(s, kDark)); }

Action random_player(const BoardState& s, Rng& rng) {
  auto actions = legal_actions(s);
  std::uniform_int_distribution<size_t> pick(0, actions.size() - 1);
  return actions[pick(rng)];
}

Action greedy_player(const BoardState& s, Rng& rng) {
  auto actions = legal_actions(s);
  std::vector<Action> best;
  double best_score = 0;
  for (const auto& a : actions) {
    double score = greedy_score(apply(s, a), s.to_move());
    if (best.empty() || score > best_score) {
      best_score = score;
      best.assign(1, a);
    } else if (score == best_score) {
      best.push_back(a);
    }
  }
  std::uniform_int_distribution<size_t> pick(0, best.size() - 1);
  return best[pick(rng)];
}

std::vector<int> dihedral_permutation(int n, int sym) {
  if (sym < 0 || sym >= 8) throw ParameterError("symmetry index must be in [0, 8)");
  std::vector<int> perm(static_cast<size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      int rr = r, cc = c;
      if (sym & 4) std::swap(rr, cc);
      if (sym & 1) rr = n - 1 - rr;
      if (sym & 2) cc = n - 1 - cc;
      perm[r * n + c] = rr * n + cc;
    }
  }
  return perm;
}

BoardState transform(const BoardState& s, int sym) {
  auto perm = dihedral_permutation(s.size(), sym);
  std::vector<int8_t> cells(s.cells().size());
  for (size_t i = 0; i < perm.size(); ++i) cells[perm[i]] = s.cells()[i];
  return BoardState(s.kind(), s.size(), std::move(cells), s.to_move(), s.ply(), {}, s.consecutive_passes());
}

}  // namespace saz
