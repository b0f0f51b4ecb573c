#include <gtest/gtest.h>

#include <sstream>

#include "saz/arena/match.hpp"
#include "saz/errors.hpp"
#include "saz/nn/weights_io.hpp"

using namespace saz;

namespace {

const std::string kFirstEmpty = std::string(SAZ_TEST_DATA) + "/first_empty_agent.sh";

std::shared_ptr<const nn::Network> small_net(uint64_t seed) {
  Rng rng(seed);
  nn::ArchConfig arch;
  arch.embed_dim = 8;
  arch.num_layers = 2;
  return std::make_shared<nn::Network>(arch, rng);
}

}  // namespace

TEST(Tally, AverageOutcomeFormula) {
  Tally t;
  for (int i = 0; i < 60; ++i) t.add(1);
  for (int i = 0; i < 10; ++i) t.add(0);
  for (int i = 0; i < 30; ++i) t.add(-1);
  EXPECT_EQ(t.games(), 100);
  EXPECT_DOUBLE_EQ(t.average_outcome(), 0.65);
}

TEST(MeanAndStderr, HandArithmetic) {
  auto [mean, se] = mean_and_stderr({0.5, 0.7});
  EXPECT_NEAR(mean, 0.6, 1e-12);
  ASSERT_TRUE(se.has_value());
  EXPECT_NEAR(*se, 0.1, 1e-12);
  auto [single, none] = mean_and_stderr({0.4});
  EXPECT_DOUBLE_EQ(single, 0.4);
  EXPECT_FALSE(none.has_value());
}

TEST(ParseAgent, KnownForms) {
  EXPECT_EQ(parse_agent("random").type, AgentType::Random);
  EXPECT_EQ(parse_agent("greedy").type, AgentType::Greedy);
  auto saz = parse_agent("saz:run/best.sazw");
  EXPECT_EQ(saz.type, AgentType::Saz);
  EXPECT_EQ(saz.weights, "run/best.sazw");
  auto ext = parse_agent("external:./engine --fast");
  EXPECT_EQ(ext.type, AgentType::External);
  EXPECT_EQ(ext.command, "./engine --fast");
  EXPECT_THROW(parse_agent("minimax"), ParameterError);
  EXPECT_THROW(parse_agent("saz:"), ParameterError);
}

TEST(PlayMatch, ColoursSplitEvenly) {
  Rng rng(1);
  auto r = play_match(AgentSpec::random(), AgentSpec::greedy(), GameKind::othello(), 6, 10, rng);
  EXPECT_EQ(r.games, 10);
  EXPECT_EQ(r.total.games(), 10);
  EXPECT_EQ(r.as_dark.games(), 5);
  EXPECT_EQ(r.as_light.games(), 5);
  EXPECT_DOUBLE_EQ(r.average_outcome(), (r.total.wins + 0.5 * r.total.ties) / 10.0);
}

TEST(PlayMatch, RejectsOddGameCount) {
  Rng rng(1);
  EXPECT_THROW(play_match(AgentSpec::random(), AgentSpec::random(), GameKind::othello(), 6, 3, rng), ParameterError);
}

TEST(PlayMatch, RandomVsRandomIsBalanced) {
  Rng rng(2024);
  auto r = play_match(AgentSpec::random(), AgentSpec::random(), GameKind::gomoku(), 9, 1000, rng);
  EXPECT_NEAR(r.average_outcome(), 0.5, 0.05);
}

TEST(PlayMatch, GreedyBeatsRandomAtOthello) {
  Rng rng(7);
  auto r = play_match(AgentSpec::greedy(), AgentSpec::random(), GameKind::othello(), 8, 100, rng);
  EXPECT_GT(r.average_outcome(), 0.5);
}

TEST(PlayMatch, SwappingAgentsMirrorsOutcome) {
  MatchOptions straight, mirrored;
  mirrored.a_dark_first = false;
  Rng r1(99), r2(99);
  auto ab = play_match(AgentSpec::greedy(), AgentSpec::random(), GameKind::othello(), 6, 40, r1, straight);
  auto ba = play_match(AgentSpec::random(), AgentSpec::greedy(), GameKind::othello(), 6, 40, r2, mirrored);
  EXPECT_DOUBLE_EQ(ab.average_outcome() + ba.average_outcome(), 1.0);
  EXPECT_EQ(ab.total.wins, ba.total.losses);
  EXPECT_EQ(ab.total.ties, ba.total.ties);
}

TEST(PlayMatch, ReproducibleAndIndependentOfWorkers) {
  auto net = small_net(3);
  SearchConfig cfg;
  cfg.n_sim = 8;
  AgentSpec saz = AgentSpec::saz("mem", cfg);
  MatchOptions one, two;
  one.keep_logs = two.keep_logs = true;
  two.workers = 2;
  Rng r1(5), r2(5), r3(5);
  auto a = play_match(saz, net, AgentSpec::random(), nullptr, GameKind::othello(), 6, 6, r1, one);
  auto b = play_match(saz, net, AgentSpec::random(), nullptr, GameKind::othello(), 6, 6, r2, one);
  auto c = play_match(saz, net, AgentSpec::random(), nullptr, GameKind::othello(), 6, 6, r3, two);
  ASSERT_EQ(a.logs.size(), 6u);
  for (int g = 0; g < 6; ++g) {
    EXPECT_EQ(a.logs[g].moves, b.logs[g].moves);
    EXPECT_EQ(a.logs[g].moves, c.logs[g].moves);
    EXPECT_EQ(a.logs[g].dark_outcome, c.logs[g].dark_outcome);
  }
}

TEST(PlayGame, MoveCapAdjudicatesByGreedyScore) {
  RandomAgent a, b;
  Rng rng(4);
  auto log = play_game(a, b, GameKind::go(), 5, rng, 6);
  EXPECT_TRUE(log.adjudicated);
  ASSERT_EQ(log.moves.size(), 6u);
  BoardState s = initial_state(GameKind::go(), 5);
  for (const auto& m : log.moves) s = apply(s, m);
  EXPECT_EQ(log.dark_outcome, adjudicate_for_dark(s));
}

TEST(PlayGame, FinishedGameReportsTerminalValue) {
  GreedyAgent a;
  RandomAgent b;
  Rng rng(8);
  auto log = play_game(a, b, GameKind::othello(), 4, rng);
  EXPECT_FALSE(log.adjudicated);
  BoardState s = initial_state(GameKind::othello(), 4);
  for (const auto& m : log.moves) s = apply(s, m);
  ASSERT_TRUE(is_terminal(s));
  EXPECT_EQ(log.dark_outcome, *terminal_value(s) * s.to_move());
}

TEST(SazAgent, PlaysLegalMovesAndExposesSearch) {
  SearchConfig cfg;
  cfg.n_sim = 10;
  SazAgent agent(small_net(1), cfg);
  Rng rng(2);
  auto s = initial_state(GameKind::othello(), 6);
  Action a = agent.choose(s, rng);
  auto legal = legal_actions(s);
  EXPECT_NE(std::find(legal.begin(), legal.end(), a), legal.end());
  ASSERT_NE(agent.last_search(), nullptr);
  EXPECT_EQ(agent.last_search()->tau, 0.0);
  EXPECT_EQ(agent.last_search()->action, a);
}

TEST(SazAgent, MissingWeightsNameThePath) {
  Rng rng(1);
  try {
    play_match(AgentSpec::saz("/nonexistent/w.sazw"), AgentSpec::random(), GameKind::othello(), 6, 2, rng);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/w.sazw"), std::string::npos);
  }
}

TEST(ExternalAgent, PlaysThroughLineProtocol) {
  Rng rng(6);
  MatchOptions opts;
  opts.keep_logs = true;
  auto r = play_match(AgentSpec::external(kFirstEmpty), AgentSpec::random(), GameKind::gomoku(4), 7, 4, rng, opts);
  EXPECT_EQ(r.total.games(), 4);
  // The external side always takes the lowest empty cell.
  const auto& log = r.logs[0];
  BoardState s = initial_state(GameKind::gomoku(4), 7);
  for (size_t i = 0; i < log.moves.size(); ++i) {
    if (s.to_move() == kDark) {
      int first = 0;
      while (s.at(first) != kEmpty) ++first;
      EXPECT_EQ(log.moves[i].index(), first);
    }
    s = apply(s, log.moves[i]);
  }
}

TEST(ExternalAgent, CrashNamesAgentAndGame) {
  Rng rng(1);
  try {
    play_match(AgentSpec::random(), AgentSpec::external("exit 3"), GameKind::gomoku(), 9, 2, rng);
    FAIL() << "expected MatchError";
  } catch (const MatchError& e) {
    EXPECT_EQ(e.agent(), "external:exit 3");
    EXPECT_EQ(e.game(), 0);
  }
}

TEST(ExternalAgent, MalformedReplyIsAnError) {
  Rng rng(1);
  EXPECT_THROW(play_match(AgentSpec::external("while read l; do echo hello; done"), AgentSpec::random(),
                          GameKind::gomoku(), 9, 2, rng),
               MatchError);
}

TEST(ExternalAgent, IllegalReplyIsAnError) {
  Rng rng(1);
  EXPECT_THROW(play_match(AgentSpec::external("while read l; do echo MOVE pass; done"), AgentSpec::random(),
                          GameKind::othello(), 6, 2, rng),
               MatchError);
}

TEST(ExternalAgent, TimesOut) {
  AgentSpec slow = AgentSpec::external("sleep 5");
  slow.timeout_seconds = 0.2;
  Rng rng(1);
  EXPECT_THROW(play_match(slow, AgentSpec::random(), GameKind::gomoku(), 9, 2, rng), MatchError);
}

TEST(RunSuite, OneRowPerEntryWithStatistics) {
  SuiteManifest m;
  m.seed = 11;
  m.entries.push_back({AgentSpec::greedy(), AgentSpec::random(), GameKind::othello(), {6}, 10, 3});
  m.entries.push_back({AgentSpec::random(), AgentSpec::random(), GameKind::gomoku(), {7}, 4, 1});
  auto rows = run_suite(m);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].runs.size(), 3u);
  ASSERT_TRUE(rows[0].std_error.has_value());
  auto [mean, se] = mean_and_stderr(rows[0].runs);
  EXPECT_DOUBLE_EQ(rows[0].mean, mean);
  EXPECT_DOUBLE_EQ(*rows[0].std_error, *se);
  EXPECT_FALSE(rows[1].std_error.has_value());

  std::ostringstream csv;
  write_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string header, first, second;
  std::getline(lines, header);
  std::getline(lines, first);
  std::getline(lines, second);
  EXPECT_EQ(header, "agent,opponent,game,n,games,repeats,mean,stderr");
  EXPECT_EQ(first.rfind("greedy,random,othello,6,10,3,", 0), 0u);
  EXPECT_EQ(second.back(), ',');  // absent stderr is an empty field

  auto again = run_suite(m);
  EXPECT_EQ(again[0].runs, rows[0].runs);
}

TEST(RunSuite, ExpandsSizes) {
  SuiteManifest m;
  m.entries.push_back({AgentSpec::greedy(), AgentSpec::random(), GameKind::othello(), {4, 6}, 2, 1});
  auto rows = run_suite(m);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].n, 4);
  EXPECT_EQ(rows[1].n, 6);
}
