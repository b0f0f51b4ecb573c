#include "saz/train/selfplay.hpp"

#include "saz/errors.hpp"
#include "saz/util/binary_io.hpp"

namespace saz {

SelfplayGame selfplay_game(const GameKind& kind, int n, const Evaluator& evaluator, const SearchConfig& cfg, Rng& rng,
                           int max_plies) {
  if (max_plies <= 0) max_plies = 4 * n * n;
  SelfplayGame game;
  std::vector<int> movers;
  Search search(evaluator, cfg, rng);
  BoardState s = initial_state(kind, n);
  while (!is_terminal(s)) {
    if (static_cast<int>(game.examples.size()) >= max_plies) {
      game.adjudicated = true;
      break;
    }
    SearchResult r = search.best_action(s);
    BoardState c = canonical(s);
    TrainingExample ex{BoardState(c.kind(), n, c.cells(), kDark, s.ply(), {}), {}, 0};
    ex.pi.assign(r.pi.begin(), r.pi.end());
    game.examples.push_back(std::move(ex));
    movers.push_back(s.to_move());
    game.moves.push_back(r.action);
    s = apply(s, r.action);
  }
  game.dark_outcome = game.adjudicated ? adjudicate_for_dark(s) : *terminal_value(s) * s.to_move();
  for (size_t i = 0; i < game.examples.size(); ++i) game.examples[i].z = game.dark_outcome * movers[i];
  return game;
}

void save_examples(const std::vector<TrainingExample>& examples, const std::filesystem::path& path) {
  io::BinaryWriter w;
  w.put_bytes("SAZE");
  w.put<uint32_t>(kExamplesVersion);
  w.put<uint32_t>(static_cast<uint32_t>(examples.size()));
  for (const auto& ex : examples) {
    size_t len_at = w.size();
    w.put<uint32_t>(0);
    w.put_string(serialize(ex.state));
    w.put<double>(ex.state.kind().komi);
    w.put<uint32_t>(static_cast<uint32_t>(ex.pi.size()));
    w.put_raw(ex.pi.data(), sizeof(float) * ex.pi.size());
    w.put<int8_t>(static_cast<int8_t>(ex.z));
    w.patch_u32(len_at, static_cast<uint32_t>(w.size() - len_at - sizeof(uint32_t)));
  }
  w.finish(path);
}

std::vector<TrainingExample> load_examples(const std::filesystem::path& path) {
  io::BinaryReader r(path, "SAZE");
  auto version = r.get<uint32_t>();
  if (version != kExamplesVersion) throw FormatError(r.path() + ": unsupported examples version " + std::to_string(version));
  auto count = r.get<uint32_t>();
  std::vector<TrainingExample> out;
  out.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    auto len = r.get<uint32_t>();
    size_t start = r.position();
    std::string text = r.get_string();
    double komi = r.get<double>();
    BoardState state = deserialize(text, komi);
    std::vector<float> pi(r.get<uint32_t>());
    r.get_raw(pi.data(), sizeof(float) * pi.size());
    int z = r.get<int8_t>();
    if (r.position() - start != len) throw FormatError(r.path() + ": record " + std::to_string(i) + " length mismatch");
    if (static_cast<int>(pi.size()) != state.num_slots())
      throw FormatError(r.path() + ": record " + std::to_string(i) + " has a pi of the wrong length");
    out.push_back({std::move(state), std::move(pi), z});
  }
  r.expect_end();
  return out;
}

}  // namespace saz
