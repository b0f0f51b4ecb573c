#include <gtest/gtest.h>

#include <set>

#include "../support/othello_check.hpp"
#include "saz/errors.hpp"
#include "saz/game/rules.hpp"

namespace saz {
namespace {

BoardState from_rows(const std::string& header, const std::vector<std::string>& rows) {
  std::string text = header + "\n";
  for (const auto& r : rows) text += r + "\n";
  return deserialize(text);
}

TEST(Othello, InitialSixBySixMatchesStandardLayout) {
  auto s = initial_state(GameKind::othello(), 6);
  EXPECT_EQ(s.at(2, 2), kLight);
  EXPECT_EQ(s.at(3, 3), kLight);
  EXPECT_EQ(s.at(2, 3), kDark);
  EXPECT_EQ(s.at(3, 2), kDark);
  EXPECT_EQ(s.count(kEmpty), 32);
  EXPECT_EQ(s.to_move(), kDark);
}

TEST(Othello, OddSizeRejected) {
  EXPECT_THROW(initial_state(GameKind::othello(), 5), SizeError);
  EXPECT_THROW(initial_state(GameKind::othello(), 2), SizeError);
}

TEST(Othello, InitialLegalMovesMatchOracle) {
  auto s = initial_state(GameKind::othello(), 6);
  testing::OthelloOracle oracle{6, std::vector<int>(s.cells().begin(), s.cells().end())};
  auto expected = oracle.legal(kDark);
  ASSERT_EQ(expected.size(), 4u);
  std::vector<int> got;
  for (auto a : legal_actions(s)) got.push_back(a.index());
  EXPECT_EQ(got, expected);
}

TEST(Othello, FirstMoveFlipsOne) {
  auto s = initial_state(GameKind::othello(), 6);
  auto t = apply(s, legal_actions(s).front());
  EXPECT_EQ(t.count(kDark), 4);
  EXPECT_EQ(t.count(kLight), 1);
  EXPECT_EQ(t.to_move(), kLight);
  EXPECT_EQ(t.ply(), 1);
  EXPECT_DOUBLE_EQ(greedy_score(t, kDark), 3);
  // value semantics
  EXPECT_EQ(s.count(kDark), 2);
}

TEST(Othello, IllegalMovesNameTheRule) {
  auto s = initial_state(GameKind::othello(), 6);
  try {
    apply(s, Action::place(0));
    FAIL();
  } catch (const RuleViolation& e) {
    EXPECT_EQ(e.rule(), Rule::NoFlip);
  }
  try {
    apply(s, Action::place(2 * 6 + 2));
    FAIL();
  } catch (const RuleViolation& e) {
    EXPECT_EQ(e.rule(), Rule::Occupied);
  }
  EXPECT_THROW(apply(s, Action::pass()), RuleViolation);
  EXPECT_THROW(apply(s, Action::place(36)), RuleViolation);
}

TEST(Othello, ForcedSkipMatchesOracle) {
  Rng rng(21);
  int skips = 0;
  for (int game = 0; game < 200 && skips < 5; ++game) {
    auto s = initial_state(GameKind::othello(), 4);
    while (!is_terminal(s)) {
      auto a = random_player(s, rng);
      auto t = apply(s, a);
      if (!is_terminal(t) && t.to_move() == s.to_move()) {
        ++skips;
        testing::OthelloOracle oracle{4, std::vector<int>(s.cells().begin(), s.cells().end())};
        EXPECT_EQ(oracle.play(a.index(), s.to_move()).second, s.to_move());
      }
      s = t;
    }
  }
  EXPECT_GT(skips, 0);
}

TEST(Othello, TerminalValueByMajority) {
  std::vector<std::string> rows;
  // 20 dark, 16 light on a full 6x6 board
  rows = {"xxxxxx", "xxxxxx", "xxxxxx", "xxoooo", "oooooo", "oooooo"};
  auto s = from_rows("othello 6 1 32", rows);
  ASSERT_EQ(s.count(kDark), 20);
  EXPECT_EQ(terminal_value(s), 1);
  auto flipped = from_rows("othello 6 -1 32", rows);
  EXPECT_EQ(terminal_value(flipped), -1);
  EXPECT_FALSE(terminal_value(initial_state(GameKind::othello(), 6)).has_value());
  EXPECT_THROW(legal_actions(s), StateError);
}

TEST(Othello, GreedyPicksLargestFlip) {
  // (0,6) flips five stones, (4,0) flips one.
  auto s = from_rows("othello 8 1 10", {"xooooo..", "o.......", "x.......", "o.......", "........",
                                        "........", "........", "........"});
  Rng rng(3);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(greedy_player(s, rng).index(), 6);
}

TEST(Othello, OracleSweep) {
  auto report = testing::othello_oracle_sweep(1500, 11);
  EXPECT_EQ(report.mismatches, 0) << report.first_mismatch;
  EXPECT_EQ(report.positions, 1500);
}

TEST(Othello, StoneCountGrowsByOne) {
  Rng rng(5);
  auto s = initial_state(GameKind::othello(), 8);
  while (!is_terminal(s)) {
    int before = s.count(kDark) + s.count(kLight);
    s = apply(s, random_player(s, rng));
    EXPECT_EQ(s.count(kDark) + s.count(kLight), before + 1);
  }
}

TEST(Gomoku, EmptyBoard) {
  auto s = initial_state(GameKind::gomoku(), 9);
  EXPECT_EQ(s.count(kEmpty), 81);
  EXPECT_EQ(legal_actions(s).size(), 81u);
  EXPECT_THROW(initial_state(GameKind::gomoku(), 4), SizeError);
  EXPECT_THROW(initial_state(GameKind::gomoku(2), 9), SizeError);
}

TEST(Gomoku, FiveInRowWins) {
  auto s = from_rows("gomoku 9 -1 9",
                     {"xxxxx....", "oooo.....", ".........", ".........", ".........", ".........",
                      ".........", ".........", "........."});
  EXPECT_EQ(terminal_value(s), -1);
  auto diag = from_rows("gomoku:3 5 1 5", {"o....", ".o...", "..o..", "x....", "xx..."});
  EXPECT_EQ(terminal_value(diag), -1);
  auto open = from_rows("gomoku 5 1 2", {"xxxx.", "oooo.", ".....", ".....", "....."});
  EXPECT_FALSE(terminal_value(open).has_value());
  auto won = apply(open, Action::place(4));
  EXPECT_EQ(terminal_value(won), -1);  // light to move, dark has five
}

TEST(Gomoku, FullBoardTies) {
  auto s = from_rows("gomoku:3 3 1 9", {"xox", "xox", "oxo"});
  EXPECT_EQ(terminal_value(s), 0);
}

TEST(Gomoku, PlacementOnlyChangesOneCell) {
  auto s = initial_state(GameKind::gomoku(), 9);
  auto t = apply(s, Action::place(40));
  for (int i = 0; i < 81; ++i) EXPECT_EQ(t.at(i), i == 40 ? kDark : kEmpty);
  EXPECT_THROW(apply(t, Action::place(40)), RuleViolation);
}

TEST(Gomoku, GreedyScoreIsRunDifference) {
  auto s = from_rows("gomoku 9 1 5", {"xxx......", "oo.......", ".........", ".........", ".........",
                                      ".........", ".........", ".........", "........."});
  EXPECT_DOUBLE_EQ(greedy_score(s), 1);
  EXPECT_EQ(max_run(s, kDark), 3);
}

TEST(Go, EmptyBoardHasAllPlacementsAndPass) {
  auto s = initial_state(GameKind::go(), 5);
  auto actions = legal_actions(s);
  ASSERT_EQ(actions.size(), 26u);
  EXPECT_TRUE(actions.back().is_pass());
  EXPECT_EQ(actions.back().slot(5), 25);
  EXPECT_THROW(initial_state(GameKind::go(), 4), SizeError);
}

TEST(Go, TwoPassesEnd) {
  auto s = initial_state(GameKind::go(), 5);
  s = apply(s, Action::pass());
  EXPECT_FALSE(is_terminal(s));
  s = apply(s, Action::pass());
  ASSERT_TRUE(is_terminal(s));
  // empty board: 0 - 0 - 5.5 < 0, light wins; dark is to move again
  EXPECT_EQ(s.to_move(), kDark);
  EXPECT_EQ(terminal_value(s), -1);
}

TEST(Go, CaptureRemovesGroup) {
  auto s = from_rows("go 5 1 4", {".xo..", "..x..", ".....", ".....", "....."});
  auto t = apply(s, Action::place(3));  // (0,3) takes the last liberty of (0,2)
  EXPECT_EQ(t.at(0, 2), kEmpty);
  EXPECT_EQ(t.at(0, 3), kDark);
  EXPECT_EQ(t.count(kLight), 0);
}

TEST(Go, SuicideIsIllegal) {
  auto s = from_rows("go 5 -1 4", {".x...", "x....", ".....", ".....", "....."});
  try {
    apply(s, Action::place(0));
    FAIL();
  } catch (const RuleViolation& e) {
    EXPECT_EQ(e.rule(), Rule::Suicide);
  }
  for (auto a : legal_actions(s)) EXPECT_NE(a.index(), 0);
}

TEST(Go, PositionalSuperkoBlocksImmediateRecapture) {
  // . x o . .
  // x o . o .
  // . x o . .
  auto ko = from_rows("go 5 1 0", {".xo..", "xo.o.", ".xo..", ".....", "....."});
  auto after = apply(ko, Action::place(1 * 5 + 2));
  EXPECT_EQ(after.at(1, 1), kEmpty);
  try {
    apply(after, Action::place(1 * 5 + 1));
    FAIL() << "recapture should violate superko";
  } catch (const RuleViolation& e) {
    EXPECT_EQ(e.rule(), Rule::Superko);
  }
  for (auto a : legal_actions(after)) EXPECT_NE(a.index(), 6);
}

TEST(Go, HistoryNeverRepeatsInRandomGames) {
  Rng rng(17);
  for (int game = 0; game < 5; ++game) {
    auto s = initial_state(GameKind::go(), 5);
    int moves = 0;
    while (!is_terminal(s) && moves++ < 200) s = apply(s, random_player(s, rng));
    std::set<uint64_t> seen;
    int placements = 0;
    for (size_t i = 0; i + 1 < s.history().size(); ++i) {
      if (s.history()[i] != s.history()[i + 1]) ++placements;
    }
    // every non-pass move yields a fresh hash
    std::set<uint64_t> distinct(s.history().begin(), s.history().end());
    EXPECT_GE(distinct.size(), static_cast<size_t>(placements));
    EXPECT_EQ(s.history().size(), static_cast<size_t>(s.ply() + 1));
  }
}

TEST(Go, AreaScoring) {
  auto s = from_rows("go 5 1 0", {"..x..", "..x..", "..xo.", "..xo.", "..xo."});
  EXPECT_EQ(go_area(s, kDark), 15);
  // the region right of the light wall touches dark at (0,3)/(1,3)
  EXPECT_EQ(go_area(s, kLight), 3);
}

TEST(Rules, ZeroSumTerminalValues) {
  Rng rng(8);
  for (auto kind : {GameKind::othello(), GameKind::gomoku(4), GameKind::go()}) {
    auto s = initial_state(kind, 6);
    int guard = 0;
    while (!is_terminal(s) && guard++ < 300) s = apply(s, random_player(s, rng));
    if (!is_terminal(s)) continue;
    BoardState other(s.kind(), s.size(), s.cells(), -s.to_move(), s.ply(), s.history(), s.consecutive_passes());
    EXPECT_EQ(*terminal_value(s), -*terminal_value(other));
  }
}

TEST(Rules, ApplyIsPure) {
  auto s = initial_state(GameKind::go(), 7);
  auto a = apply(s, Action::place(10));
  auto b = apply(s, Action::place(10));
  EXPECT_EQ(a, b);
}

TEST(Rules, CanonicalFlipsColours) {
  auto s = apply(initial_state(GameKind::othello(), 6), Action::place(2 * 6 + 1));
  ASSERT_EQ(s.to_move(), kLight);
  auto c = canonical(s);
  EXPECT_EQ(c.to_move(), kDark);
  for (int i = 0; i < 36; ++i) EXPECT_EQ(c.at(i), -s.at(i));
  EXPECT_EQ(canonical(c), c);
  auto d = initial_state(GameKind::othello(), 6);
  EXPECT_EQ(canonical(d), d);
}

TEST(Rules, DihedralPermutationsFormTheGroup) {
  std::set<std::vector<int>> seen;
  for (int sym = 0; sym < 8; ++sym) {
    auto p = dihedral_permutation(5, sym);
    std::set<int> image(p.begin(), p.end());
    EXPECT_EQ(image.size(), 25u);
    seen.insert(p);
  }
  EXPECT_EQ(seen.size(), 8u);
  EXPECT_THROW(dihedral_permutation(5, 8), ParameterError);
}

TEST(Rules, TransformPreservesOthelloMoveSets) {
  auto s = initial_state(GameKind::othello(), 6);
  for (int sym = 0; sym < 8; ++sym) {
    auto perm = dihedral_permutation(6, sym);
    auto t = transform(s, sym);
    std::set<int> mapped, got;
    for (auto a : legal_actions(s)) mapped.insert(perm[a.index()]);
    for (auto a : legal_actions(t)) got.insert(a.index());
    EXPECT_EQ(mapped, got) << "sym " << sym;
  }
}

TEST(Serialization, RoundTrip) {
  Rng rng(2);
  for (auto kind : {GameKind::othello(), GameKind::gomoku(4), GameKind::go()}) {
    auto s = initial_state(kind, 6);
    for (int i = 0; i < 6 && !is_terminal(s); ++i) s = apply(s, random_player(s, rng));
    auto text = serialize(s);
    auto back = deserialize(text);
    EXPECT_EQ(back.cells(), s.cells());
    EXPECT_EQ(back.to_move(), s.to_move());
    EXPECT_EQ(back.ply(), s.ply());
    EXPECT_EQ(back.kind(), s.kind());
    EXPECT_EQ(serialize(back), text);
  }
}

TEST(Serialization, RejectsMalformed) {
  EXPECT_THROW(deserialize("chess 8 1 0\n"), ParameterError);
  EXPECT_THROW(deserialize("othello 4 1 0\n....\n....\n"), FormatError);
  EXPECT_THROW(deserialize("othello 4 1 0\n....\n..q.\n....\n....\n"), FormatError);
  EXPECT_THROW(deserialize("othello 4 2 0\n....\n....\n....\n....\n"), FormatError);
}

TEST(Actions, Parse) {
  EXPECT_TRUE(Action::parse("pass", 5).is_pass());
  EXPECT_EQ(Action::parse("7", 5).index(), 7);
  EXPECT_EQ(Action::parse("1,2", 5).index(), 7);
  EXPECT_THROW(Action::parse("x", 5), FormatError);
  EXPECT_THROW(Action::parse("9,9", 5), RuleViolation);
  EXPECT_EQ(Action::from_slot(25, 5), Action::pass());
}

TEST(Players, RandomIsSeeded) {
  auto s = initial_state(GameKind::gomoku(), 9);
  Rng a(42), b(42);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(random_player(s, a), random_player(s, b));
}

TEST(Players, SingleLegalActionIsChosen) {
  auto s = from_rows("gomoku:3 3 1 8", {"xox", "oxo", "ox."});
  ASSERT_FALSE(is_terminal(s));
  Rng rng(1);
  EXPECT_EQ(greedy_player(s, rng).index(), 8);
  EXPECT_EQ(random_player(s, rng).index(), 8);
}

}  // namespace
}  // namespace saz
