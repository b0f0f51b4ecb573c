#pragma once

#include <stdexcept>
#include <string>

namespace saz {

// Base of every error the library raises.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Board size not playable for the requested game.
class SizeError : public Error {
 public:
  using Error::Error;
};

// Operation not defined for the state (e.g. moves asked of a finished game).
class StateError : public Error {
 public:
  using Error::Error;
};

enum class Rule { OutOfRange, Occupied, NoFlip, Suicide, Superko, PassNotAllowed };

const char* rule_name(Rule rule);

class RuleViolation : public Error {
 public:
  RuleViolation(Rule rule, const std::string& what)
      : Error(std::string(rule_name(rule)) + ": " + what), rule_(rule) {}
  Rule rule() const { return rule_; }

 private:
  Rule rule_;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

// An agent failed during a match.
class MatchError : public Error {
 public:
  MatchError(const std::string& agent, int game, const std::string& what)
      : Error("agent '" + agent + "' failed in game " + std::to_string(game) + ": " + what),
        agent_(agent), game_(game) {}
  const std::string& agent() const { return agent_; }
  int game() const { return game_; }

 private:
  std::string agent_;
  int game_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace saz
