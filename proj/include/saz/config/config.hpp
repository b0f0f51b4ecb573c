#pragma once

#include <filesystem>
#include <string>

#include "saz/arena/match.hpp"
#include "saz/train/trainer.hpp"

namespace saz {

struct PathsConfig {
  std::filesystem::path checkpoint_dir = "runs/default";
  std::filesystem::path weights;  // default network for eval, play and serve
  std::filesystem::path results = "results";
};

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  int n_sim = 100;  // agent budget per reply
  int max_sessions = 1000;
};

struct RootConfig {
  uint64_t seed = 0;
  int workers = 1;
  GameKind game = GameKind::gomoku();
  int board_size = 9;
  nn::ArchConfig net;
  SearchConfig search;
  TrainConfig train;
  PathsConfig paths;
  ServiceConfig service;

  // Cross-field checks on top of every section's own validation.
  void validate() const;
  TrainerOptions trainer_options() const;
};

// YAML loading. Missing keys keep their defaults; unknown keys, wrong types
// and failed checks raise ConfigError naming the key and line. Path values
// expand $VAR and ${VAR} from the environment.
RootConfig load_config(const std::filesystem::path& path);
RootConfig parse_config(const std::string& text, const std::string& origin = "<string>");
// Writes every key, so the file round-trips through load_config.
std::string dump_config(const RootConfig& cfg);
void save_config(const RootConfig& cfg, const std::filesystem::path& path);

// Evaluation manifest:
//   seed: 1
//   workers: 1
//   rows:
//     - {agent: "saz:run/best.sazw", opponent: random, game: othello,
//        sizes: [6, 8], games: 100, repeats: 5, search: {n_sim: 50}}
// Row search settings start from `base_search`.
SuiteManifest load_manifest(const std::filesystem::path& path, const SearchConfig& base_search = {});
SuiteManifest parse_manifest(const std::string& text, const SearchConfig& base_search = {},
                             const std::string& origin = "<string>");

}  // namespace saz
