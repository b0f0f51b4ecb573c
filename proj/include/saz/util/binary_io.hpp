#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

namespace saz::io {

uint64_t fnv1a64(const void* data, size_t size, uint64_t seed = 0xcbf29ce484222325ull);

// Little-endian record buffer, written atomically with a trailing FNV-1a
// checksum of every preceding byte.
class BinaryWriter {
 public:
  template <typename V>
  void put(V v) {
    buf_.append(reinterpret_cast<const char*>(&v), sizeof(V));
  }
  void put_bytes(const std::string& s) { buf_.append(s); }
  void put_raw(const void* data, size_t size) { buf_.append(static_cast<const char*>(data), size); }
  void put_string(const std::string& s) {
    put<uint32_t>(static_cast<uint32_t>(s.size()));
    buf_.append(s);
  }
  size_t size() const { return buf_.size(); }
  // Overwrites a u32 previously written at `offset`.
  void patch_u32(size_t offset, uint32_t v) { std::memcpy(buf_.data() + offset, &v, sizeof v); }
  void finish(const std::filesystem::path& path);

 private:
  std::string buf_;
};

// Reads a whole file, checks the 4-byte magic and the checksum. Reads past
// the payload raise FormatError naming the file.
class BinaryReader {
 public:
  BinaryReader(const std::filesystem::path& path, const char* magic);

  template <typename V>
  V get() {
    need(sizeof(V));
    V v;
    std::memcpy(&v, buf_.data() + at_, sizeof(V));
    at_ += sizeof(V);
    return v;
  }
  std::string get_bytes(size_t n) {
    need(n);
    std::string s(buf_.data() + at_, n);
    at_ += n;
    return s;
  }
  std::string get_string() { return get_bytes(get<uint32_t>()); }
  void get_raw(void* out, size_t n) {
    need(n);
    std::memcpy(out, buf_.data() + at_, n);
    at_ += n;
  }
  size_t position() const { return at_; }
  bool at_end() const { return at_ == end_; }
  void expect_end() const;
  const std::string& path() const { return path_; }
  void need(size_t n) const;

 private:
  std::string path_;
  std::string buf_;
  size_t at_ = 0, end_ = 0;
};

}  // namespace saz::io
