#pragma once

#include <filesystem>
#include <vector>

#include "saz/mcts/search.hpp"

namespace saz {

// One recorded selfplay position. `state` is canonical (mover is +1), `pi`
// covers its n*n + 1 slots and `z` is the final result for that mover.
struct TrainingExample {
  BoardState state;
  std::vector<float> pi;
  int z = 0;

  bool operator==(const TrainingExample&) const = default;
};

struct SelfplayGame {
  std::vector<TrainingExample> examples;
  std::vector<Action> moves;
  int dark_outcome = 0;
  bool adjudicated = false;
};

// Both sides play best_action with the tau schedule; one example per ply.
// Games longer than `max_plies` (4 n^2 when 0) are adjudicated by the sign
// of dark's greedy score.
SelfplayGame selfplay_game(const GameKind& kind, int n, const Evaluator& evaluator, const SearchConfig& cfg, Rng& rng,
                           int max_plies = 0);

// Example file: "SAZE" | u32 version | u32 count | records | u64 FNV-1a of
// every preceding byte. A record is u32 byte length, then u32 state text
// length, the state text, u32 pi length, f32 pi values, i8 z.
constexpr uint32_t kExamplesVersion = 1;

void save_examples(const std::vector<TrainingExample>& examples, const std::filesystem::path& path);
std::vector<TrainingExample> load_examples(const std::filesystem::path& path);

}  // namespace saz
