#include "saz/arena/match.hpp"

#include <cmath>
#include <iomanip>
#include <ostream>

#include "saz/errors.hpp"
#include "saz/nn/weights_io.hpp"
#include "saz/util/parallel.hpp"

namespace saz {

GameLog play_game(Agent& dark, Agent& light, const GameKind& kind, int n, Rng& rng, int max_plies) {
  if (max_plies <= 0) max_plies = 4 * n * n;
  GameLog log;
  BoardState s = initial_state(kind, n);
  while (!is_terminal(s)) {
    if (static_cast<int>(log.moves.size()) >= max_plies) {
      log.adjudicated = true;
      log.dark_outcome = adjudicate_for_dark(s);
      return log;
    }
    Agent& mover = s.to_move() == kDark ? dark : light;
    Action a = mover.choose(s, rng);
    log.moves.push_back(a);
    s = apply(s, a);
  }
  log.dark_outcome = *terminal_value(s) * s.to_move();
  return log;
}

double Tally::average_outcome() const {
  int g = games();
  return g == 0 ? 0.0 : (wins + 0.5 * ties) / g;
}

void Tally::add(int outcome) {
  if (outcome > 0)
    ++wins;
  else if (outcome < 0)
    ++losses;
  else
    ++ties;
}

namespace {

std::shared_ptr<const nn::Network> load_if_needed(const AgentSpec& spec, std::shared_ptr<const nn::Network> net) {
  if (spec.type != AgentType::Saz || net) return net;
  return std::make_shared<nn::Network>(nn::load_weights(spec.weights));
}

}  // namespace

MatchReport play_match(const AgentSpec& a, const AgentSpec& b, const GameKind& kind, int n, int games, Rng& rng,
                       const MatchOptions& options) {
  return play_match(a, nullptr, b, nullptr, kind, n, games, rng, options);
}

MatchReport play_match(const AgentSpec& a, std::shared_ptr<const nn::Network> net_a, const AgentSpec& b,
                       std::shared_ptr<const nn::Network> net_b, const GameKind& kind, int n, int games, Rng& rng,
                       const MatchOptions& options) {
  if (games <= 0 || games % 2 != 0) throw ParameterError("games must be a positive even number");
  validate_size(kind, n);
  net_a = load_if_needed(a, std::move(net_a));
  net_b = load_if_needed(b, std::move(net_b));

  std::vector<uint64_t> seeds(games);
  for (auto& seed : seeds) seed = rng();
  std::vector<GameLog> logs(games);
  parallel_for(games, options.workers, [&](int g) {
    bool a_dark = (g % 2 == 0) == options.a_dark_first;
    std::unique_ptr<Agent> agent_a, agent_b;
    try {
      agent_a = make_agent(a, net_a);
    } catch (const Error& e) {
      throw MatchError(a.label(), g, e.what());
    }
    try {
      agent_b = make_agent(b, net_b);
    } catch (const Error& e) {
      throw MatchError(b.label(), g, e.what());
    }
    Agent& dark = a_dark ? *agent_a : *agent_b;
    Agent& light = a_dark ? *agent_b : *agent_a;
    Rng game_rng(seeds[g]);
    int max_plies = options.max_plies > 0 ? options.max_plies : 4 * n * n;
    BoardState s = initial_state(kind, n);
    GameLog log;
    while (!is_terminal(s)) {
      if (static_cast<int>(log.moves.size()) >= max_plies) {
        log.adjudicated = true;
        break;
      }
      bool dark_turn = s.to_move() == kDark;
      Agent& mover = dark_turn ? dark : light;
      const AgentSpec& spec = (dark_turn == a_dark) ? a : b;
      Action act = Action::pass();
      try {
        act = mover.choose(s, game_rng);
        log.moves.push_back(act);
        s = apply(s, act);
      } catch (const MatchError&) {
        throw;
      } catch (const std::exception& e) {
        throw MatchError(spec.label(), g, e.what());
      }
    }
    log.dark_outcome = log.adjudicated ? adjudicate_for_dark(s) : *terminal_value(s) * s.to_move();
    logs[g] = std::move(log);
  });

  MatchReport report;
  report.agent_a = a.label();
  report.agent_b = b.label();
  report.games = games;
  for (int g = 0; g < games; ++g) {
    bool a_dark = (g % 2 == 0) == options.a_dark_first;
    int outcome = a_dark ? logs[g].dark_outcome : -logs[g].dark_outcome;
    report.total.add(outcome);
    (a_dark ? report.as_dark : report.as_light).add(outcome);
    report.adjudicated += logs[g].adjudicated ? 1 : 0;
  }
  if (options.keep_logs) report.logs = std::move(logs);
  return report;
}

std::pair<double, std::optional<double>> mean_and_stderr(const std::vector<double>& values) {
  if (values.empty()) return {0.0, std::nullopt};
  double mean = 0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  if (values.size() < 2) return {mean, std::nullopt};
  double ss = 0;
  for (double v : values) ss += (v - mean) * (v - mean);
  double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(values.size()))};
}

std::vector<SuiteRow> run_suite(const SuiteManifest& manifest) {
  Rng master(manifest.seed);
  std::vector<SuiteRow> rows;
  for (const auto& entry : manifest.entries) {
    if (entry.repeats < 1) throw ParameterError("repeats must be at least 1");
    std::shared_ptr<const nn::Network> net_a = load_if_needed(entry.agent, nullptr);
    std::shared_ptr<const nn::Network> net_b = load_if_needed(entry.opponent, nullptr);
    for (int n : entry.sizes) {
      SuiteRow row;
      row.agent = entry.agent.label();
      row.opponent = entry.opponent.label();
      row.game = game_name(entry.kind.game);
      row.n = n;
      row.games = entry.games;
      row.repeats = entry.repeats;
      for (int r = 0; r < entry.repeats; ++r) {
        Rng rng(master());
        MatchOptions options;
        options.workers = manifest.workers;
        auto report = play_match(entry.agent, net_a, entry.opponent, net_b, entry.kind, n, entry.games, rng, options);
        row.runs.push_back(report.average_outcome());
      }
      std::tie(row.mean, row.std_error) = mean_and_stderr(row.runs);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

void write_csv(std::ostream& out, const std::vector<SuiteRow>& rows) {
  out << "agent,opponent,game,n,games,repeats,mean,stderr\n";
  out << std::setprecision(6);
  for (const auto& r : rows) {
    out << csv_field(r.agent) << ',' << csv_field(r.opponent) << ',' << r.game << ',' << r.n << ',' << r.games << ','
        << r.repeats << ',' << r.mean << ',';
    if (r.std_error) out << *r.std_error;
    out << '\n';
  }
}

void write_table(std::ostream& out, const std::vector<SuiteRow>& rows) {
  for (const auto& r : rows) {
    out << r.agent << " vs " << r.opponent << "  " << r.game << ' ' << r.n << 'x' << r.n << "  " << std::fixed
        << std::setprecision(3) << r.mean;
    if (r.std_error)
      out << " +/- " << *r.std_error;
    else
      out << " (single run)";
    out << "  [" << r.repeats << " x " << r.games << " games]\n";
    out << std::defaultfloat;
  }
}

}  // namespace saz
