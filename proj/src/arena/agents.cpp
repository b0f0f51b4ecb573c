#include "saz/arena/agents.hpp"

#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>

#include "saz/errors.hpp"
#include "saz/nn/weights_io.hpp"

namespace saz {

AgentSpec AgentSpec::saz(std::filesystem::path weights, SearchConfig search) {
  AgentSpec spec;
  spec.type = AgentType::Saz;
  spec.weights = std::move(weights);
  spec.search = search;
  return spec;
}

AgentSpec AgentSpec::external(std::string command) {
  AgentSpec spec;
  spec.type = AgentType::External;
  spec.command = std::move(command);
  return spec;
}

std::string AgentSpec::label() const {
  switch (type) {
    case AgentType::Random: return "random";
    case AgentType::Greedy: return "greedy";
    case AgentType::Saz: return "saz:" + weights.string();
    case AgentType::External: return "external:" + command;
  }
  return "unknown";
}

AgentSpec parse_agent(const std::string& text) {
  if (text == "random") return AgentSpec::random();
  if (text == "greedy") return AgentSpec::greedy();
  auto colon = text.find(':');
  if (colon != std::string::npos) {
    std::string head = text.substr(0, colon), rest = text.substr(colon + 1);
    if (head == "saz" && !rest.empty()) return AgentSpec::saz(rest);
    if (head == "external" && !rest.empty()) return AgentSpec::external(rest);
  }
  throw ParameterError("unknown agent '" + text + "' (random, greedy, saz:<weights>, external:<command>)");
}

SazAgent::SazAgent(std::shared_ptr<const nn::Network> net, SearchConfig cfg, bool stochastic, std::string name)
    : evaluator_(std::move(net)), cfg_(cfg), name_(std::move(name)) {
  cfg_.validate();
  cfg_.reuse_tree = false;
  if (!stochastic) cfg_.tau_moves = 0;
}

Action SazAgent::choose(const BoardState& s, Rng& rng) {
  Search search(evaluator_, cfg_, rng);
  last_ = search.best_action(s);
  return last_->action;
}

ExternalAgent::ExternalAgent(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_(timeout_seconds) {
  std::signal(SIGPIPE, SIG_IGN);
  int in[2], out[2];
  if (pipe(in) != 0) throw Error("pipe: " + std::string(std::strerror(errno)));
  if (pipe(out) != 0) {
    close(in[0]);
    close(in[1]);
    throw Error("pipe: " + std::string(std::strerror(errno)));
  }
  pid_ = fork();
  if (pid_ < 0) throw Error("fork: " + std::string(std::strerror(errno)));
  if (pid_ == 0) {
    dup2(in[0], STDIN_FILENO);
    dup2(out[1], STDOUT_FILENO);
    close(in[0]);
    close(in[1]);
    close(out[0]);
    close(out[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    _exit(127);
  }
  close(in[0]);
  close(out[1]);
  to_child_ = in[1];
  from_child_ = out[0];
}

ExternalAgent::~ExternalAgent() { stop(); }

void ExternalAgent::stop() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    kill(pid_, SIGTERM);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }
}

std::string ExternalAgent::read_line() {
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_);
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return line;
    }
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) throw Error("no reply within " + std::to_string(timeout_) + " s");
    pollfd fd{from_child_, POLLIN, 0};
    int ready = poll(&fd, 1, static_cast<int>(left.count()));
    if (ready < 0 && errno == EINTR) continue;
    if (ready <= 0) continue;
    char chunk[512];
    ssize_t got = read(from_child_, chunk, sizeof chunk);
    if (got < 0 && errno == EINTR) continue;
    if (got <= 0) throw Error("process exited");
    buffer_.append(chunk, static_cast<size_t>(got));
  }
}

Action ExternalAgent::choose(const BoardState& s, Rng&) {
  if (to_child_ < 0) throw Error("process not running");
  std::string msg = "STATE\n" + serialize(s);
  if (msg.back() != '\n') msg += '\n';
  size_t sent = 0;
  while (sent < msg.size()) {
    ssize_t w = write(to_child_, msg.data() + sent, msg.size() - sent);
    if (w < 0 && errno == EINTR) continue;
    if (w <= 0) throw Error("write failed: process exited");
    sent += static_cast<size_t>(w);
  }
  std::string line = read_line();
  if (line.rfind("MOVE ", 0) != 0) throw Error("expected 'MOVE <action>', got '" + line + "'");
  Action a = Action::parse(line.substr(5), s.size());
  auto legal = legal_actions(s);
  if (std::find(legal.begin(), legal.end(), a) == legal.end()) throw Error("illegal move " + a.to_string());
  return a;
}

std::unique_ptr<Agent> make_agent(const AgentSpec& spec, std::shared_ptr<const nn::Network> net) {
  switch (spec.type) {
    case AgentType::Random: return std::make_unique<RandomAgent>();
    case AgentType::Greedy: return std::make_unique<GreedyAgent>();
    case AgentType::Saz:
      if (!net) net = std::make_shared<nn::Network>(nn::load_weights(spec.weights));
      return std::make_unique<SazAgent>(std::move(net), spec.search, spec.stochastic, spec.label());
    case AgentType::External: return std::make_unique<ExternalAgent>(spec.command, spec.timeout_seconds);
  }
  throw ParameterError("unknown agent type");
}

}  // namespace saz
