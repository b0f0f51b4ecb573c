#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace saz {

using Rng = std::mt19937_64;

enum class Game { Othello, Gomoku, Go };

constexpr int kDark = 1;
constexpr int kLight = -1;
constexpr int kEmpty = 0;

// Game identity plus the per-game rule parameters.
struct GameKind {
  Game game = Game::Othello;
  int k = 5;          // Gomoku winning run length
  double komi = 5.5;  // Go

  static GameKind othello() { return {Game::Othello}; }
  static GameKind gomoku(int k = 5) { return {Game::Gomoku, k}; }
  static GameKind go(double komi = 5.5) { return {Game::Go, 5, komi}; }

  bool operator==(const GameKind&) const = default;
};

std::string game_name(Game game);
Game parse_game(const std::string& name);

// Throws SizeError when `n` is not a playable board side for `kind`.
void validate_size(const GameKind& kind, int n);

// A placement at a board cell, or a pass (Go only). Pass occupies the last
// policy slot, n*n, which is the dummy node of the board graph.
class Action {
 public:
  static Action place(int index) { return Action(index); }
  static Action pass() { return Action(kPassIndex); }

  bool is_pass() const { return index_ == kPassIndex; }
  int index() const { return index_; }
  int slot(int n) const { return is_pass() ? n * n : index_; }
  static Action from_slot(int slot, int n) { return slot == n * n ? pass() : place(slot); }

  std::string to_string() const;
  // Accepts "pass", a cell index, or "row,col".
  static Action parse(const std::string& text, int n);

  bool operator==(const Action&) const = default;
  auto operator<=>(const Action&) const = default;

 private:
  static constexpr int kPassIndex = -1;
  explicit Action(int index) : index_(index) {}
  int index_;
};

// Immutable board position. All rule functions return fresh states.
class BoardState {
 public:
  BoardState(GameKind kind, int n, std::vector<int8_t> cells, int to_move, int ply,
             std::vector<uint64_t> history, int consecutive_passes = 0);

  const GameKind& kind() const { return kind_; }
  Game game() const { return kind_.game; }
  int size() const { return n_; }
  int num_cells() const { return n_ * n_; }
  // Policy slots: one per cell plus the pass/dummy slot.
  int num_slots() const { return n_ * n_ + 1; }
  const std::vector<int8_t>& cells() const { return cells_; }
  int at(int index) const { return cells_[index]; }
  int at(int row, int col) const { return cells_[row * n_ + col]; }
  int to_move() const { return to_move_; }
  int ply() const { return ply_; }
  // history[i] is the position hash after i plies; size() == ply + 1.
  const std::vector<uint64_t>& history() const { return history_; }
  int consecutive_passes() const { return passes_; }
  uint64_t position_hash() const { return history_.back(); }

  int count(int color) const;

  bool operator==(const BoardState&) const = default;

 private:
  GameKind kind_;
  int n_;
  std::vector<int8_t> cells_;
  int to_move_;
  int ply_;
  std::vector<uint64_t> history_;
  int passes_;
};

// Zobrist-style hash of the stones only (colour to move excluded), defined
// for any board size.
uint64_t position_hash(const std::vector<int8_t>& cells);

// Text form: "<game> <n> <to_move> <ply>" then n rows over {'.','x','o'};
// x is dark (+1), o is light (-1). Gomoku with k != 5 is written "gomoku:k".
std::string serialize(const BoardState& s);
BoardState deserialize(const std::string& text, double komi = 5.5);

}  // namespace saz
