#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "aroc/common.hpp"

namespace aroc::io {

// Little-endian encoding regardless of host byte order.

inline void put_magic(std::vector<char>& out, const char (&magic)[5]) {
  for (int i = 0; i < 4; ++i) out.push_back(magic[i]);
}

inline void put_u64(std::vector<char>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::vector<char>& out, float f) {
  const auto bits = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xffu));
}

inline std::uint64_t get_u64(const char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t{static_cast<unsigned char>(p[i])} << (8 * i);
  return v;
}

inline float get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= std::uint32_t{static_cast<unsigned char>(p[i])} << (8 * i);
  return std::bit_cast<float>(bits);
}

inline std::vector<char> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw ValidationError("cannot open '" + path + "' for reading");
  const auto size = static_cast<std::size_t>(in.tellg());
  std::vector<char> bytes(size);
  in.seekg(0);
  if (size > 0 && !in.read(bytes.data(), static_cast<std::streamsize>(size)))
    throw FormatError("short read on '" + path + "'", 0);
  return bytes;
}

inline void write_file(const std::string& path, const std::vector<char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw ValidationError("write failed for '" + path + "'");
}

inline void write_text(const std::string& path, const std::string& text) {
  write_file(path, std::vector<char>(text.begin(), text.end()));
}

/// Bounds-checked cursor over a byte buffer; errors carry the failing offset.
class Reader {
 public:
  explicit Reader(const std::vector<char>& bytes) : bytes_(bytes) {}

  void expect_magic(const char (&magic)[5]) {
    require(4, "missing magic");
    if (std::memcmp(bytes_.data() + pos_, magic, 4) != 0)
      throw FormatError(std::string("bad magic, expected '") + magic + "'", pos_);
    pos_ += 4;
  }
  std::uint64_t u64(const char* what) {
    require(8, what);
    const auto v = get_u64(bytes_.data() + pos_);
    pos_ += 8;
    return v;
  }
  float f32(const char* what) {
    require(4, what);
    const float v = get_f32(bytes_.data() + pos_);
    pos_ += 4;
    return v;
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void require(std::size_t count, const char* what) const {
    if (bytes_.size() - pos_ < count)
      throw FormatError(std::string("truncated file: ") + what, pos_);
  }

  const std::vector<char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace aroc::io
