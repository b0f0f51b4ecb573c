#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>

#include "saz/mcts/search.hpp"

namespace saz {

enum class AgentType { Random, Greedy, Saz, External };

struct AgentSpec {
  AgentType type = AgentType::Random;
  std::filesystem::path weights;  // Saz
  SearchConfig search;            // Saz
  // Saz agents sample moves with the search's tau schedule instead of
  // always playing the most visited move.
  bool stochastic = false;
  std::string command;            // External, run through /bin/sh -c
  double timeout_seconds = 30;    // External, per move

  static AgentSpec random() { return {}; }
  static AgentSpec greedy() {
    AgentSpec spec;
    spec.type = AgentType::Greedy;
    return spec;
  }
  static AgentSpec saz(std::filesystem::path weights, SearchConfig search = {});
  static AgentSpec external(std::string command);

  std::string label() const;
};

// "random", "greedy", "saz:<weights>", "external:<command>".
AgentSpec parse_agent(const std::string& text);

class Agent {
 public:
  virtual ~Agent() = default;
  virtual Action choose(const BoardState& s, Rng& rng) = 0;
  virtual std::string name() const = 0;
  // Search summary of the last choose(), for agents that search.
  virtual const SearchResult* last_search() const { return nullptr; }
};

class RandomAgent : public Agent {
 public:
  Action choose(const BoardState& s, Rng& rng) override { return random_player(s, rng); }
  std::string name() const override { return "random"; }
};

class GreedyAgent : public Agent {
 public:
  Action choose(const BoardState& s, Rng& rng) override { return greedy_player(s, rng); }
  std::string name() const override { return "greedy"; }
};

// MCTS over a shared read-only network.
class SazAgent : public Agent {
 public:
  SazAgent(std::shared_ptr<const nn::Network> net, SearchConfig cfg, bool stochastic = false,
           std::string name = "saz");
  Action choose(const BoardState& s, Rng& rng) override;
  std::string name() const override { return name_; }
  const SearchResult* last_search() const override { return last_ ? &*last_ : nullptr; }

 private:
  NetworkEvaluator evaluator_;
  SearchConfig cfg_;
  std::string name_;
  std::optional<SearchResult> last_;
};

// Child process speaking "STATE\n<serialized state>\n" -> "MOVE <action>\n".
class ExternalAgent : public Agent {
 public:
  ExternalAgent(std::string command, double timeout_seconds);
  ~ExternalAgent() override;
  ExternalAgent(const ExternalAgent&) = delete;
  ExternalAgent& operator=(const ExternalAgent&) = delete;

  Action choose(const BoardState& s, Rng& rng) override;
  std::string name() const override { return command_; }

 private:
  std::string read_line();
  void stop();

  std::string command_;
  double timeout_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  std::string buffer_;
};

// Builds an agent. Saz weights are loaded from spec.weights unless `net` is
// given.
std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::shared_ptr<const nn::Network> net = nullptr);

}  // namespace saz
