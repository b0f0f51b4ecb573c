#include "saz/game/board.hpp"

#include <sstream>

#include "saz/errors.hpp"

namespace saz {

const char* rule_name(Rule rule) {
  switch (rule) {
    case Rule::OutOfRange: return "out-of-range";
    case Rule::Occupied: return "occupied";
    case Rule::NoFlip: return "no-flip";
    case Rule::Suicide: return "suicide";
    case Rule::Superko: return "superko";
    case Rule::PassNotAllowed: return "pass-not-allowed";
  }
  return "unknown";
}

std::string game_name(Game game) {
  switch (game) {
    case Game::Othello: return "othello";
    case Game::Gomoku: return "gomoku";
    case Game::Go: return "go";
  }
  return "unknown";
}

Game parse_game(const std::string& name) {
  if (name == "othello") return Game::Othello;
  if (name == "gomoku") return Game::Gomoku;
  if (name == "go") return Game::Go;
  throw ParameterError("unknown game '" + name + "'");
}

void validate_size(const GameKind& kind, int n) {
  constexpr int kMaxSide = 1024;
  if (n > kMaxSide) throw SizeError("board side " + std::to_string(n) + " exceeds " + std::to_string(kMaxSide));
  switch (kind.game) {
    case Game::Othello:
      if (n < 4 || n % 2 != 0)
        throw SizeError("othello needs an even board side >= 4, got " + std::to_string(n));
      break;
    case Game::Gomoku:
      if (kind.k < 3) throw SizeError("gomoku run length must be >= 3, got " + std::to_string(kind.k));
      if (n < kind.k)
        throw SizeError("gomoku board side " + std::to_string(n) + " is shorter than k=" + std::to_string(kind.k));
      break;
    case Game::Go:
      if (n < 5) throw SizeError("go needs a board side >= 5, got " + std::to_string(n));
      break;
  }
}

std::string Action::to_string() const { return is_pass() ? "pass" : std::to_string(index_); }

Action Action::parse(const std::string& text, int n) {
  if (text == "pass") return pass();
  auto comma = text.find(',');
  try {
    size_t used = 0;
    if (comma == std::string::npos) {
      int index = std::stoi(text, &used);
      if (used != text.size()) throw std::invalid_argument(text);
      return place(index);
    }
    int row = std::stoi(text.substr(0, comma));
    int col = std::stoi(text.substr(comma + 1));
    if (row < 0 || row >= n || col < 0 || col >= n)
      throw RuleViolation(Rule::OutOfRange, "cell " + text + " is off the board");
    return place(row * n + col);
  } catch (const std::invalid_argument&) {
    throw FormatError("cannot parse action '" + text + "'");
  } catch (const std::out_of_range&) {
    throw FormatError("cannot parse action '" + text + "'");
  }
}

BoardState::BoardState(GameKind kind, int n, std::vector<int8_t> cells, int to_move, int ply,
                       std::vector<uint64_t> history, int consecutive_passes)
    : kind_(kind),
      n_(n),
      cells_(std::move(cells)),
      to_move_(to_move),
      ply_(ply),
      history_(std::move(history)),
      passes_(consecutive_passes) {
  validate_size(kind_, n_);
  if (static_cast<int>(cells_.size()) != n_ * n_) throw ShapeError("cell count does not match board side");
  for (int8_t c : cells_)
    if (c < -1 || c > 1) throw FormatError("cell value out of {-1,0,1}");
  if (to_move_ != kDark && to_move_ != kLight) throw FormatError("to_move must be +1 or -1");
  if (ply_ < 0) throw FormatError("negative ply");
  if (history_.empty()) history_.push_back(saz::position_hash(cells_));
}

int BoardState::count(int color) const {
  int total = 0;
  for (int8_t c : cells_) total += (c == color);
  return total;
}

namespace {

uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

}  // namespace

uint64_t position_hash(const std::vector<int8_t>& cells) {
  uint64_t h = 0;
  for (size_t i = 0; i < cells.size(); ++i)
    if (cells[i] != 0) h ^= splitmix64(i * 2 + (cells[i] > 0 ? 1 : 0));
  return h;
}

std::string serialize(const BoardState& s) {
  std::ostringstream out;
  out << game_name(s.game());
  if (s.game() == Game::Gomoku && s.kind().k != 5) out << ':' << s.kind().k;
  out << ' ' << s.size() << ' ' << s.to_move() << ' ' << s.ply() << '\n';
  for (int r = 0; r < s.size(); ++r) {
    for (int c = 0; c < s.size(); ++c) {
      int v = s.at(r, c);
      out << (v == kDark ? 'x' : v == kLight ? 'o' : '.');
    }
    out << '\n';
  }
  return out.str();
}

BoardState deserialize(const std::string& text, double komi) {
  std::istringstream in(text);
  std::string game_token;
  int n = 0, to_move = 0, ply = 0;
  if (!(in >> game_token >> n >> to_move >> ply)) throw FormatError("bad state header");
  GameKind kind;
  auto colon = game_token.find(':');
  kind.game = parse_game(game_token.substr(0, colon));
  if (colon != std::string::npos) {
    if (kind.game != Game::Gomoku) throw FormatError("only gomoku takes a ':k' suffix");
    kind.k = std::stoi(game_token.substr(colon + 1));
  }
  kind.komi = komi;
  validate_size(kind, n);
  std::vector<int8_t> cells;
  cells.reserve(static_cast<size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    std::string row;
    if (!(in >> row) || static_cast<int>(row.size()) != n)
      throw FormatError("row " + std::to_string(r) + " must have " + std::to_string(n) + " cells");
    for (char ch : row) {
      switch (ch) {
        case '.': cells.push_back(kEmpty); break;
        case 'x': cells.push_back(kDark); break;
        case 'o': cells.push_back(kLight); break;
        default: throw FormatError(std::string("unexpected cell character '") + ch + "'");
      }
    }
  }
  return BoardState(kind, n, std::move(cells), to_move, ply, {});
}

}  // namespace saz
