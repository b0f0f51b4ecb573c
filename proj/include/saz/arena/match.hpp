#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "saz/arena/agents.hpp"

namespace saz {

struct GameLog {
  std::vector<Action> moves;
  int dark_outcome = 0;  // +1 dark won, -1 light won, 0 tie
  bool adjudicated = false;
};

// Plays one game to the end or to `max_plies` (4 n^2 when 0); a stopped game
// is adjudicated by the sign of dark's greedy score.
GameLog play_game(Agent& dark, Agent& light, const GameKind& kind, int n, Rng& rng, int max_plies = 0);

struct Tally {
  int wins = 0;
  int ties = 0;
  int losses = 0;
  int games() const { return wins + ties + losses; }
  double average_outcome() const;
  void add(int outcome);
};

// Counts are from agent A's point of view.
struct MatchReport {
  std::string agent_a, agent_b;
  int games = 0;
  Tally total;
  Tally as_dark;
  Tally as_light;
  int adjudicated = 0;
  std::vector<GameLog> logs;  // filled when requested

  double average_outcome() const { return total.average_outcome(); }
};

struct MatchOptions {
  int workers = 1;
  int max_plies = 0;
  bool keep_logs = false;
  // A is dark in even-numbered games; false flips it to odd-numbered ones.
  bool a_dark_first = true;
};

// Plays `games` (even) games, half with A as dark. Every game
// draws its own RNG seed from `rng` before any game starts, so the report
// does not depend on the worker count. Agents are built fresh per game.
MatchReport play_match(const AgentSpec& a, const AgentSpec& b, const GameKind& kind, int n, int games, Rng& rng,
                       const MatchOptions& options = {});

// Same, with preloaded networks for Saz agents (nullptr loads a.weights / b.weights).
MatchReport play_match(const AgentSpec& a, std::shared_ptr<const nn::Network> net_a, const AgentSpec& b,
                       std::shared_ptr<const nn::Network> net_b, const GameKind& kind, int n, int games, Rng& rng,
                       const MatchOptions& options = {});

struct SuiteEntry {
  AgentSpec agent;
  AgentSpec opponent;
  GameKind kind;
  std::vector<int> sizes;
  int games = 100;
  int repeats = 5;
};

struct SuiteManifest {
  uint64_t seed = 0;
  int workers = 1;
  std::vector<SuiteEntry> entries;
};

struct SuiteRow {
  std::string agent, opponent, game;
  int n = 0;
  int games = 0;
  int repeats = 0;
  double mean = 0;
  std::optional<double> std_error;  // absent for a single run
  std::vector<double> runs;
};

// Mean and standard error of the mean; the error is absent for one value.
std::pair<double, std::optional<double>> mean_and_stderr(const std::vector<double>& values);

// One row per (entry, size). Repeats are independent matches with their own
// seeds drawn from the manifest seed.
std::vector<SuiteRow> run_suite(const SuiteManifest& manifest);

void write_csv(std::ostream& out, const std::vector<SuiteRow>& rows);
void write_table(std::ostream& out, const std::vector<SuiteRow>& rows);

}  // namespace saz
