#include "saz/nn/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <map>

#include "saz/errors.hpp"
#include "saz/util/binary_io.hpp"

namespace saz::nn {

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed) { return io::fnv1a64(data, size, seed); }

namespace {

class Writer : public io::BinaryWriter {
 public:
  void put_record(const std::string& name, const Matrix<float>& m) {
    put_string(name);
    put<uint32_t>(2);
    put<uint32_t>(static_cast<uint32_t>(m.rows()));
    put<uint32_t>(static_cast<uint32_t>(m.cols()));
    put_raw(m.data(), sizeof(float) * m.size());
  }
};

class Reader : public io::BinaryReader {
 public:
  using io::BinaryReader::BinaryReader;
  std::map<std::string, Matrix<float>> records(uint32_t count) {
    std::map<std::string, Matrix<float>> out;
    for (uint32_t i = 0; i < count; ++i) {
      std::string name = get_string();
      auto rank = get<uint32_t>();
      if (rank != 2) throw FormatError(path() + ": record '" + name + "' has unsupported rank");
      auto rows = get<uint32_t>(), cols = get<uint32_t>();
      size_t bytes = sizeof(float) * static_cast<size_t>(rows) * cols;
      need(bytes);
      Matrix<float> m(rows, cols);
      get_raw(m.data(), bytes);
      out.emplace(std::move(name), std::move(m));
    }
    expect_end();
    return out;
  }
};

ArchConfig read_arch_header(Reader& r) {
  auto version = r.get<uint32_t>();
  if (version != kWeightsVersion) throw FormatError(r.path() + ": unsupported weights version " + std::to_string(version));
  ArchConfig arch;
  arch.embed_dim = static_cast<int>(r.get<uint32_t>());
  arch.num_layers = static_cast<int>(r.get<uint32_t>());
  arch.dropout = r.get<double>();
  arch.learnable_eps = r.get<uint8_t>() != 0;
  arch.bn_momentum = r.get<double>();
  return arch;
}

Matrix<float> take(std::map<std::string, Matrix<float>>& records, const std::string& name, const Matrix<float>& like,
                   const std::string& path) {
  auto it = records.find(name);
  if (it == records.end()) throw FormatError(path + ": missing record '" + name + "'");
  if (it->second.rows() != like.rows() || it->second.cols() != like.cols())
    throw FormatError(path + ": record '" + name + "' has the wrong shape");
  Matrix<float> m = std::move(it->second);
  records.erase(it);
  return m;
}

}  // namespace

void save_weights(const Network& net, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes("SAZW");
  w.put<uint32_t>(kWeightsVersion);
  const auto& a = net.arch();
  w.put<uint32_t>(static_cast<uint32_t>(a.embed_dim));
  w.put<uint32_t>(static_cast<uint32_t>(a.num_layers));
  w.put<double>(a.dropout);
  w.put<uint8_t>(a.learnable_eps ? 1 : 0);
  w.put<double>(a.bn_momentum);
  auto params = net.parameters();
  auto bufs = net.buffers();
  w.put<uint32_t>(static_cast<uint32_t>(params.size() + bufs.size()));
  for (const auto* p : params) w.put_record(p->name, p->value);
  for (const auto& [name, m] : bufs) w.put_record(name, *m);
  w.finish(path);
}

ArchConfig read_arch(const std::filesystem::path& path) {
  Reader r(path, "SAZW");
  return read_arch_header(r);
}

Network load_weights(const std::filesystem::path& path, const std::optional<ArchConfig>& expected) {
  Reader r(path, "SAZW");
  ArchConfig arch = read_arch_header(r);
  if (expected && arch != *expected)
    throw FormatError(path.string() + ": architecture mismatch (file embed_dim=" + std::to_string(arch.embed_dim) +
                      ", layers=" + std::to_string(arch.num_layers) + "; expected embed_dim=" +
                      std::to_string(expected->embed_dim) + ", layers=" + std::to_string(expected->num_layers) + ")");
  auto count = r.get<uint32_t>();
  auto records = r.records(count);
  Rng unused(0);
  Network net(arch, unused);
  for (auto* p : net.parameters()) p->value = take(records, p->name, p->value, r.path());
  for (auto& [name, m] : net.buffers()) *m = take(records, name, *m, r.path());
  if (!records.empty()) throw FormatError(r.path() + ": unexpected record '" + records.begin()->first + "'");
  return net;
}

void save_adam(const Adam<float>& opt, const Network& net, const std::filesystem::path& path) {
  Writer w;
  w.put_bytes("SAZA");
  w.put<uint32_t>(kWeightsVersion);
  w.put<uint64_t>(static_cast<uint64_t>(opt.steps()));
  auto params = net.parameters();
  const bool has_state = opt.first_moments().size() == params.size();
  w.put<uint32_t>(has_state ? static_cast<uint32_t>(2 * params.size()) : 0u);
  if (has_state) {
    for (size_t i = 0; i < params.size(); ++i) w.put_record("m." + params[i]->name, opt.first_moments()[i]);
    for (size_t i = 0; i < params.size(); ++i) w.put_record("v." + params[i]->name, opt.second_moments()[i]);
  }
  w.finish(path);
}

void load_adam(Adam<float>& opt, const Network& net, const std::filesystem::path& path) {
  Reader r(path, "SAZA");
  auto version = r.get<uint32_t>();
  if (version != kWeightsVersion) throw FormatError(path.string() + ": unsupported optimizer version");
  auto steps = r.get<uint64_t>();
  auto count = r.get<uint32_t>();
  auto records = r.records(count);
  opt.first_moments().clear();
  opt.second_moments().clear();
  if (count > 0) {
    for (const auto* p : net.parameters()) {
      opt.first_moments().push_back(take(records, "m." + p->name, p->value, r.path()));
      opt.second_moments().push_back(take(records, "v." + p->name, p->value, r.path()));
    }
  }
  opt.set_steps(static_cast<int64_t>(steps));
}

}  // namespace saz::nn
