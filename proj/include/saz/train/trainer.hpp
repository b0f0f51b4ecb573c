#pragma once

#include <deque>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <vector>

#include "saz/nn/adam.hpp"
#include "saz/train/selfplay.hpp"

namespace saz {

struct TrainConfig {
  int n_iter = 10;
  int games_per_iter = 20;
  int history_window = 20;  // iterations of examples kept for optimisation
  // Board sizes for selfplay; empty means default_size_set().
  std::vector<int> size_set;
  std::vector<double> size_probs;
  int epochs = 10;
  int batch_size = 64;
  double lr = 1e-3;
  int keep_checkpoints = 3;
  // After every iteration the net plays this many games against Greedy on
  // the largest training size; the best scorer is kept as best.sazw. 0 = off.
  int snapshot_games = 10;
  int snapshot_sims = 25;

  void validate() const;
};

struct SizeDistribution {
  std::vector<int> sizes;
  std::vector<double> probs;
};

// {n, n-1, n-2, n-3} with (0.4, 0.3, 0.2, 0.1), restricted to sizes playable
// for the game and renormalised.
SizeDistribution default_size_set(const GameKind& kind, int n);

class SizeSampler {
 public:
  explicit SizeSampler(SizeDistribution dist);
  int operator()(Rng& rng) const;
  const SizeDistribution& distribution() const { return dist_; }

 private:
  SizeDistribution dist_;
  mutable std::discrete_distribution<int> pick_;
};

// Everything needed to start or resume a run.
struct TrainerOptions {
  GameKind kind;
  int board_size = 9;
  nn::ArchConfig arch;
  SearchConfig search;
  TrainConfig train;
  uint64_t seed = 0;
  int workers = 1;
  std::filesystem::path checkpoint_dir;  // empty: no checkpoints
};

struct IterationStats {
  int iteration = 0;  // 1-based
  int games = 0;
  int examples = 0;
  int pool_examples = 0;
  int adjudicated = 0;
  std::vector<int> sizes;       // n0 of every game, in game order
  std::vector<double> losses;   // total loss per optimisation step
  double value_loss = 0;        // means over the iteration's steps
  double policy_loss = 0;
  std::optional<double> snapshot_score;
  double seconds = 0;
};

// Selfplay / optimisation loop. Every iteration draws each game's board size
// and RNG seed from the master RNG, plays the games against a frozen copy of
// the network, adds them to the history window, and trains on the shuffled
// pool. With a single worker a run is bit-for-bit reproducible, and so is a
// resumed run.
class Trainer {
 public:
  explicit Trainer(TrainerOptions options);
  // Restores the latest checkpoint in options.checkpoint_dir. Throws
  // FormatError when the checkpoint was written with another game, size,
  // seed or architecture.
  static Trainer resume(TrainerOptions options);
  static bool has_checkpoint(const std::filesystem::path& dir);

  IterationStats run_iteration();
  // Runs until `iteration() == options.train.n_iter`.
  void run(const std::function<void(const IterationStats&)>& on_iteration = {});

  int iteration() const { return iteration_; }
  const TrainerOptions& options() const { return options_; }
  nn::Network& network() { return *net_; }
  std::shared_ptr<const nn::Network> snapshot() const { return std::make_shared<nn::Network>(*net_); }
  const std::deque<std::vector<TrainingExample>>& history() const { return history_; }
  const SizeSampler& size_sampler() const { return sampler_; }

  // Optimises on `pool` for the configured epochs; exposed for tests.
  void optimise(const std::vector<const TrainingExample*>& pool, IterationStats& stats);

  void write_checkpoint() const;
  static std::filesystem::path latest_checkpoint(const std::filesystem::path& dir);

 private:
  void snapshot_failure(const std::vector<const TrainingExample*>& batch, const std::string& why) const;

  TrainerOptions options_;
  SizeSampler sampler_;
  Rng rng_;
  std::unique_ptr<nn::Network> net_;
  nn::Adam<float> adam_;
  std::deque<std::vector<TrainingExample>> history_;
  std::deque<int> history_iterations_;
  int iteration_ = 0;
  double best_snapshot_ = -1;
};

// Packs examples into one batch with per-node policy targets.
void make_batch(const std::vector<const TrainingExample*>& examples, nn::GraphBatch& batch,
                nn::Targets<float>& targets);

}  // namespace saz
