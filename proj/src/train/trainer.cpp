#include "saz/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "saz/arena/match.hpp"
#include "saz/errors.hpp"
#include "saz/nn/weights_io.hpp"
#include "saz/util/parallel.hpp"

namespace saz {

namespace fs = std::filesystem;
using nlohmann::json;

void TrainConfig::validate() const {
  if (n_iter < 0) throw ParameterError("train.n_iter must be >= 0");
  if (games_per_iter < 1) throw ParameterError("train.games_per_iter must be >= 1");
  if (history_window < 1) throw ParameterError("train.history_window must be >= 1");
  if (epochs < 0) throw ParameterError("train.epochs must be >= 0");
  if (batch_size < 1) throw ParameterError("train.batch_size must be >= 1");
  if (!(lr > 0)) throw ParameterError("train.lr must be positive");
  if (keep_checkpoints < 1) throw ParameterError("train.keep_checkpoints must be >= 1");
  if (snapshot_games < 0 || snapshot_games % 2 != 0) throw ParameterError("train.snapshot_games must be even and >= 0");
  if (snapshot_sims < 1) throw ParameterError("train.snapshot_sims must be >= 1");
  if (size_set.size() != size_probs.size())
    throw ParameterError("train.size_set and train.size_probs must have the same length");
  if (!size_probs.empty()) {
    double total = 0;
    for (double p : size_probs) {
      if (!(p >= 0)) throw ParameterError("train.size_probs entries must be >= 0");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-6) throw ParameterError("train.size_probs must sum to 1");
  }
}

SizeDistribution default_size_set(const GameKind& kind, int n) {
  static constexpr double kProbs[] = {0.4, 0.3, 0.2, 0.1};
  SizeDistribution d;
  double total = 0;
  for (int i = 0; i < 4; ++i) {
    try {
      validate_size(kind, n - i);
    } catch (const SizeError&) {
      continue;
    }
    d.sizes.push_back(n - i);
    d.probs.push_back(kProbs[i]);
    total += kProbs[i];
  }
  if (d.sizes.empty()) throw SizeError("no playable selfplay size at or below " + std::to_string(n));
  if (d.sizes.size() < 4)
    for (double& p : d.probs) p /= total;
  return d;
}

SizeSampler::SizeSampler(SizeDistribution dist)
    : dist_(std::move(dist)), pick_(dist_.probs.begin(), dist_.probs.end()) {
  if (dist_.sizes.empty() || dist_.sizes.size() != dist_.probs.size())
    throw ParameterError("size distribution needs one probability per size");
}

int SizeSampler::operator()(Rng& rng) const { return dist_.sizes[pick_(rng)]; }

namespace {

SizeDistribution resolve_sizes(const TrainerOptions& o) {
  if (o.train.size_set.empty()) return default_size_set(o.kind, o.board_size);
  for (int n : o.train.size_set) validate_size(o.kind, n);
  return {o.train.size_set, o.train.size_probs};
}

std::string rng_text(const Rng& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

std::string padded(int iteration) {
  std::string s = std::to_string(iteration);
  return std::string(s.size() < 6 ? 6 - s.size() : 0, '0') + s;
}

fs::path checkpoint_path(const fs::path& dir, int iteration) { return dir / ("ckpt-" + padded(iteration)); }
fs::path examples_path(const fs::path& dir, int iteration) {
  return dir / "examples" / ("iter-" + padded(iteration) + ".saze");
}

std::optional<int> checkpoint_iteration(const fs::path& p) {
  std::string name = p.filename().string();
  if (name.rfind("ckpt-", 0) != 0 || !fs::exists(p / "state.json")) return std::nullopt;
  try {
    return std::stoi(name.substr(5));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

std::vector<int> checkpoint_iterations(const fs::path& dir) {
  std::vector<int> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (auto it = checkpoint_iteration(entry.path())) out.push_back(*it);
  std::sort(out.begin(), out.end());
  return out;
}

json fingerprint(const TrainerOptions& o) {
  return {{"game", game_name(o.kind.game)},
          {"k", o.kind.k},
          {"komi", o.kind.komi},
          {"board_size", o.board_size},
          {"seed", o.seed},
          {"embed_dim", o.arch.embed_dim},
          {"num_layers", o.arch.num_layers},
          {"dropout", o.arch.dropout},
          {"learnable_eps", o.arch.learnable_eps}};
}

}  // namespace

void make_batch(const std::vector<const TrainingExample*>& examples, nn::GraphBatch& batch,
                nn::Targets<float>& targets) {
  std::vector<BoardGraph> graphs;
  graphs.reserve(examples.size());
  for (const auto* ex : examples) graphs.push_back(encode(ex->state));
  batch = nn::GraphBatch::pack(graphs);
  targets.pi.assign(batch.num_nodes(), 0.0f);
  targets.z.resize(examples.size());
  for (size_t g = 0; g < examples.size(); ++g) {
    const auto& graph = graphs[g];
    const auto& ex = *examples[g];
    int pass_slot = ex.state.num_cells();
    for (int v = 0; v < graph.num_nodes; ++v) {
      int slot = graph.pos_of_node[v] >= 0 ? graph.pos_of_node[v] : pass_slot;
      targets.pi[batch.offsets[g] + v] = ex.pi[slot];
    }
    targets.z[g] = static_cast<float>(ex.z);
  }
}

Trainer::Trainer(TrainerOptions options)
    : options_(std::move(options)), sampler_(resolve_sizes(options_)), rng_(options_.seed) {
  options_.train.validate();
  options_.search.validate();
  validate_size(options_.kind, options_.board_size);
  net_ = std::make_unique<nn::Network>(options_.arch, rng_);
  adam_ = nn::Adam<float>(nn::AdamConfig{options_.train.lr});
}

IterationStats Trainer::run_iteration() {
  auto t0 = std::chrono::steady_clock::now();
  IterationStats stats;
  stats.iteration = iteration_ + 1;
  const int games = options_.train.games_per_iter;
  std::vector<uint64_t> seeds(games);
  stats.sizes.resize(games);
  for (int g = 0; g < games; ++g) {
    stats.sizes[g] = sampler_(rng_);
    seeds[g] = rng_();
  }

  NetworkEvaluator evaluator(snapshot());
  std::vector<SelfplayGame> played(games);
  parallel_for(games, options_.workers, [&](int g) {
    Rng game_rng(seeds[g]);
    played[g] = selfplay_game(options_.kind, stats.sizes[g], evaluator, options_.search, game_rng);
  });

  std::vector<TrainingExample> fresh;
  for (auto& game : played) {
    stats.adjudicated += game.adjudicated ? 1 : 0;
    for (auto& ex : game.examples) fresh.push_back(std::move(ex));
  }
  stats.games = games;
  stats.examples = static_cast<int>(fresh.size());

  // The window after this iteration: the newest H - 1 stored blocks plus the
  // fresh one. History, weights and optimizer state change only on success.
  const size_t window = static_cast<size_t>(options_.train.history_window);
  size_t first_kept = history_.size() + 1 > window ? history_.size() + 1 - window : 0;
  std::vector<const TrainingExample*> pool;
  for (size_t b = first_kept; b < history_.size(); ++b)
    for (const auto& ex : history_[b]) pool.push_back(&ex);
  for (const auto& ex : fresh) pool.push_back(&ex);
  stats.pool_examples = static_cast<int>(pool.size());
  nn::Network net_before = *net_;
  nn::Adam<float> adam_before = adam_;
  Rng rng_before = rng_;
  try {
    optimise(pool, stats);
  } catch (...) {
    *net_ = std::move(net_before);
    adam_ = std::move(adam_before);
    rng_ = rng_before;
    throw;
  }
  history_.push_back(std::move(fresh));
  history_iterations_.push_back(stats.iteration);
  while (history_.size() > window) {
    history_.pop_front();
    history_iterations_.pop_front();
  }
  iteration_ = stats.iteration;

  if (options_.train.snapshot_games > 0) {
    SearchConfig cfg = options_.search;
    cfg.n_sim = options_.train.snapshot_sims;
    Rng match_rng(options_.seed ^ (0x9E3779B97F4A7C15ull * static_cast<uint64_t>(iteration_)));
    int n = *std::max_element(sampler_.distribution().sizes.begin(), sampler_.distribution().sizes.end());
    AgentSpec saz = AgentSpec::saz("<training>", cfg);
    MatchOptions mo;
    mo.workers = options_.workers;
    auto report = play_match(saz, snapshot(), AgentSpec::greedy(), nullptr, options_.kind, n,
                             options_.train.snapshot_games, match_rng, mo);
    stats.snapshot_score = report.average_outcome();
    if (*stats.snapshot_score > best_snapshot_) {
      best_snapshot_ = *stats.snapshot_score;
      if (!options_.checkpoint_dir.empty()) nn::save_weights(*net_, options_.checkpoint_dir / "best.sazw");
    }
  }

  if (!options_.checkpoint_dir.empty()) write_checkpoint();
  stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return stats;
}

void Trainer::optimise(const std::vector<const TrainingExample*>& pool, IterationStats& stats) {
  if (pool.empty()) return;
  std::vector<size_t> order(pool.size());
  const size_t batch_size = static_cast<size_t>(options_.train.batch_size);
  double value_sum = 0, policy_sum = 0;
  nn::GraphBatch batch;
  nn::Targets<float> targets;
  std::vector<const TrainingExample*> chunk;
  for (int epoch = 0; epoch < options_.train.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), size_t{0});
    std::shuffle(order.begin(), order.end(), rng_);
    for (size_t start = 0; start < order.size(); start += batch_size) {
      chunk.clear();
      for (size_t i = start; i < std::min(order.size(), start + batch_size); ++i) chunk.push_back(pool[order[i]]);
      make_batch(chunk, batch, targets);
      auto loss = net_->loss_and_grad(batch, targets, &rng_, true);
      if (!std::isfinite(loss.total)) {
        snapshot_failure(chunk, "non-finite loss");
        throw TrainingError("non-finite loss at iteration " + std::to_string(iteration_ + 1) + ", epoch " +
                            std::to_string(epoch));
      }
      try {
        adam_.step(net_->parameters());
      } catch (const TrainingError& e) {
        snapshot_failure(chunk, e.what());
        throw;
      }
      stats.losses.push_back(loss.total);
      value_sum += loss.value;
      policy_sum += loss.policy;
    }
  }
  if (!stats.losses.empty()) {
    stats.value_loss = value_sum / static_cast<double>(stats.losses.size());
    stats.policy_loss = policy_sum / static_cast<double>(stats.losses.size());
  }
}

void Trainer::snapshot_failure(const std::vector<const TrainingExample*>& batch, const std::string& why) const {
  if (options_.checkpoint_dir.empty()) return;
  fs::path dir = options_.checkpoint_dir / ("failure-" + padded(iteration_ + 1));
  fs::create_directories(dir);
  nn::save_weights(*net_, dir / "weights.sazw");
  std::vector<TrainingExample> copy;
  for (const auto* ex : batch) copy.push_back(*ex);
  save_examples(copy, dir / "batch.saze");
  std::ofstream(dir / "reason.txt") << why << '\n';
}

void Trainer::write_checkpoint() const {
  const fs::path& dir = options_.checkpoint_dir;
  try {
    fs::create_directories(dir / "examples");
    fs::path examples = examples_path(dir, iteration_);
    if (!history_iterations_.empty() && history_iterations_.back() == iteration_ && !fs::exists(examples))
      save_examples(history_.back(), examples);

    fs::path final_dir = checkpoint_path(dir, iteration_);
    fs::path tmp = final_dir;
    tmp += ".tmp";
    fs::remove_all(tmp);
    fs::create_directories(tmp);
    nn::save_weights(*net_, tmp / "weights.sazw");
    nn::save_adam(adam_, *net_, tmp / "optimizer.saza");
    json state{{"version", 1},
               {"iteration", iteration_},
               {"rng", rng_text(rng_)},
               {"best_snapshot", best_snapshot_},
               {"run", fingerprint(options_)},
               {"history", json::array()}};
    for (int it : history_iterations_)
      state["history"].push_back(examples_path(fs::path(), it).generic_string());
    std::ofstream(tmp / "state.json") << state.dump(2) << '\n';
    fs::remove_all(final_dir);
    fs::rename(tmp, final_dir);

    auto kept = checkpoint_iterations(dir);
    while (static_cast<int>(kept.size()) > options_.train.keep_checkpoints) {
      fs::remove_all(checkpoint_path(dir, kept.front()));
      kept.erase(kept.begin());
    }
    int oldest_needed = kept.front() - options_.train.history_window + 1;
    for (const auto& entry : fs::directory_iterator(dir / "examples")) {
      std::string name = entry.path().filename().string();
      if (name.rfind("iter-", 0) != 0) continue;
      int it = std::atoi(name.c_str() + 5);
      if (it < oldest_needed) fs::remove(entry.path());
    }
  } catch (const fs::filesystem_error& e) {
    throw Error("checkpoint " + dir.string() + ": " + e.what());
  }
}

fs::path Trainer::latest_checkpoint(const fs::path& dir) {
  auto its = checkpoint_iterations(dir);
  if (its.empty()) throw Error("no checkpoint in " + dir.string());
  return checkpoint_path(dir, its.back());
}

bool Trainer::has_checkpoint(const fs::path& dir) { return !checkpoint_iterations(dir).empty(); }

Trainer Trainer::resume(TrainerOptions options) {
  fs::path ckpt = latest_checkpoint(options.checkpoint_dir);
  std::ifstream in(ckpt / "state.json");
  if (!in) throw Error("cannot read " + (ckpt / "state.json").string());
  json state;
  try {
    state = json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError((ckpt / "state.json").string() + ": " + e.what());
  }
  Trainer t(options);
  if (state.value("run", json()) != fingerprint(t.options_))
    throw FormatError(ckpt.string() + " was written by a run with different settings: " + state["run"].dump());
  t.net_ = std::make_unique<nn::Network>(nn::load_weights(ckpt / "weights.sazw", t.options_.arch));
  nn::load_adam(t.adam_, *t.net_, ckpt / "optimizer.saza");
  std::istringstream rng_in(state.at("rng").get<std::string>());
  rng_in >> t.rng_;
  if (!rng_in) throw FormatError(ckpt.string() + ": bad rng state");
  t.iteration_ = state.at("iteration").get<int>();
  t.best_snapshot_ = state.value("best_snapshot", -1.0);
  for (const auto& rel : state.at("history")) {
    std::string name = rel.get<std::string>();
    int it = std::atoi(fs::path(name).filename().string().c_str() + 5);
    t.history_.push_back(load_examples(t.options_.checkpoint_dir / name));
    t.history_iterations_.push_back(it);
  }
  return t;
}

void Trainer::run(const std::function<void(const IterationStats&)>& on_iteration) {
  while (iteration_ < options_.train.n_iter) {
    auto stats = run_iteration();
    if (on_iteration) on_iteration(stats);
  }
}

}  // namespace saz
