#pragma once

#include <filesystem>
#include <optional>

#include "saz/nn/adam.hpp"
#include "saz/nn/gin_network.hpp"

namespace saz::nn {

// Weights container, little-endian throughout:
//   "SAZW" | u32 version | u32 embed_dim | u32 num_layers | f64 dropout |
//   u8 learnable_eps | f64 bn_momentum | u32 record count |
//   records { u32 name length | name | u32 rank | u32 dims[rank] | f32 data } |
//   u64 FNV-1a checksum of every preceding byte.
// Records cover all parameters followed by the batch-norm running statistics.
constexpr uint32_t kWeightsVersion = 1;

void save_weights(const Network& net, const std::filesystem::path& path);
// Throws FormatError on corruption, and when `expected` is given and the
// stored architecture differs from it.
Network load_weights(const std::filesystem::path& path, const std::optional<ArchConfig>& expected = std::nullopt);
ArchConfig read_arch(const std::filesystem::path& path);

// Optimizer state: "SAZA" | u32 version | u64 steps | u32 count | records
// "m.<param>" and "v.<param>" | u64 checksum.
void save_adam(const Adam<float>& opt, const Network& net, const std::filesystem::path& path);
void load_adam(Adam<float>& opt, const Network& net, const std::filesystem::path& path);

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ull);

}  // namespace saz::nn
