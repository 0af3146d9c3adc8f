// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "respira/error.hpp"

namespace respira {

// Little-endian serialization independent of host byte order.
class ByteWriter {
 public:
  void U8(std::uint8_t v) { buf_.push_back(static_cast<char>(v)); }
  void U32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void U64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void F32(float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    U32(bits);
  }
  void F64(double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    U64(bits);
  }
  void Bytes(std::string_view s) { buf_.append(s.data(), s.size()); }
  void Str(std::string_view s) {
    U32(static_cast<std::uint32_t>(s.size()));
    Bytes(s);
  }

  const std::string& data() const { return buf_; }
  void WriteFile(const std::filesystem::path& path) const;

 private:
  std::string buf_;
};

class ByteReader {
 public:
  // `code` is raised when the buffer runs out.
  ByteReader(std::string data, ErrorCode code) : buf_(std::move(data)), code_(code) {}

  static ByteReader FromFile(const std::filesystem::path& path, ErrorCode code);

  std::uint8_t U8() { return static_cast<std::uint8_t>(Take(1)[0]); }
  std::uint32_t U32() {
    const char* p = Take(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  std::uint64_t U64() {
    const char* p = Take(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    return v;
  }
  float F32() {
    const std::uint32_t bits = U32();
    float v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  double F64() {
    const std::uint64_t bits = U64();
    double v;
    std::memcpy(&v, &bits, sizeof(v));
    return v;
  }
  std::string Bytes(std::size_t n) { return std::string(Take(n), n); }
  std::string Str() { return Bytes(U32()); }

  std::size_t remaining() const { return buf_.size() - pos_; }
  std::size_t position() const { return pos_; }
  const std::string& data() const { return buf_; }

 private:
  const char* Take(std::size_t n) {
    if (n > remaining()) throw Error(code_, "unexpected end of data");
    const char* p = buf_.data() + pos_;
    pos_ += n;
    return p;
  }

  std::string buf_;
  std::size_t pos_ = 0;
  ErrorCode code_;
};

// 64-bit FNV-1a, used for checksums and config fingerprints.
inline std::uint64_t Fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace respira
