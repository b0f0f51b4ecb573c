#include "saz/util/binary_io.hpp"

#include <bit>
#include <fstream>
#include <iterator>

#include "saz/errors.hpp"

namespace saz::io {

static_assert(std::endian::native == std::endian::little, "binary files assume a little-endian host");

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  uint64_t h = seed;
  for (size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

void BinaryWriter::finish(const std::filesystem::path& path) {
  uint64_t sum = fnv1a64(buf_.data(), buf_.size());
  put<uint64_t>(sum);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

BinaryReader::BinaryReader(const std::filesystem::path& path, const char* magic) : path_(path.string()) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path_);
  buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
  if (buf_.size() < 12 || std::memcmp(buf_.data(), magic, 4) != 0)
    throw FormatError(path_ + ": missing " + std::string(magic, 4) + " magic");
  uint64_t stored;
  std::memcpy(&stored, buf_.data() + buf_.size() - 8, 8);
  if (stored != fnv1a64(buf_.data(), buf_.size() - 8)) throw FormatError(path_ + ": checksum mismatch");
  end_ = buf_.size() - 8;
  at_ = 4;
}

void BinaryReader::need(size_t n) const {
  if (at_ + n > end_) throw FormatError(path_ + ": truncated");
}

void BinaryReader::expect_end() const {
  if (at_ != end_) throw FormatError(path_ + ": trailing bytes");
}

}  // namespace saz::io
