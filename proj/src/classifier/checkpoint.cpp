// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/checkpoint.hpp"

#include "respira/binary_io.hpp"
#include "respira/error.hpp"

namespace respira {
namespace {

constexpr char kMagic[] = "RSPK";

}  // namespace

std::string SerializeCheckpoint(const Checkpoint& ckpt) {
  ByteWriter w;
  w.Bytes(kMagic);
  w.U32(kCheckpointVersion);
  w.Str(ckpt.tag);
  w.U32(static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    w.Str(k);
    w.Str(v);
  }
  w.U32(static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& [name, p] : ckpt.params) {
    w.Str(name);
    w.U8(0);
    w.U8(p.trainable ? 1 : 0);
    w.U32(static_cast<std::uint32_t>(p.value.rows()));
    w.U32(static_cast<std::uint32_t>(p.value.cols()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) w.F32(p.value.data()[i]);
  }
  w.U64(Fnv1a64(w.data()));
  return w.data();
}

Checkpoint ParseCheckpoint(std::string bytes) {
  if (bytes.size() < 16) throw Error(ErrorCode::kCorruptCheckpoint, "file too small");
  ByteReader r(bytes, ErrorCode::kCorruptCheckpoint);
  if (r.Bytes(4) != kMagic) throw Error(ErrorCode::kCorruptCheckpoint, "bad magic");
  const std::uint32_t version = r.U32();
  if (version != kCheckpointVersion) {
    throw Error(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) + ", expected " +
                                                 std::to_string(kCheckpointVersion));
  }
  const std::string body = bytes.substr(0, bytes.size() - 8);
  ByteReader tail(bytes.substr(bytes.size() - 8), ErrorCode::kCorruptCheckpoint);
  if (tail.U64() != Fnv1a64(body)) throw Error(ErrorCode::kCorruptCheckpoint, "checksum mismatch");

  ByteReader b(body, ErrorCode::kCorruptCheckpoint);
  b.Bytes(8);
  Checkpoint ckpt;
  ckpt.tag = b.Str();
  const std::uint32_t n_meta = b.U32();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    std::string k = b.Str();
    ckpt.meta[k] = b.Str();
  }
  const std::uint32_t n_tensors = b.U32();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    const std::string name = b.Str();
    const std::uint8_t dtype = b.U8();
    const bool trainable = b.U8() != 0;
    const std::uint32_t rows = b.U32();
    const std::uint32_t cols = b.U32();
    if (dtype > 1) throw Error(ErrorCode::kCorruptCheckpoint, "unknown dtype for " + name);
    const std::size_t width = dtype == 0 ? 4 : 8;
    if (static_cast<std::size_t>(rows) * cols * width > b.remaining()) {
      throw Error(ErrorCode::kCorruptCheckpoint, "tensor " + name + " runs past the end");
    }
    if (ckpt.params.contains(name)) throw Error(ErrorCode::kCorruptCheckpoint, "duplicate tensor " + name);
    auto& p = ckpt.params.Add(name, rows, cols, trainable);
    for (Eigen::Index j = 0; j < p.value.size(); ++j) {
      p.value.data()[j] = dtype == 0 ? b.F32() : static_cast<float>(b.F64());
    }
  }
  if (b.remaining() != 0) throw Error(ErrorCode::kCorruptCheckpoint, "trailing bytes");
  return ckpt;
}

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  ByteWriter w;
  w.Bytes(SerializeCheckpoint(ckpt));
  w.WriteFile(path);
}

Checkpoint LoadCheckpoint(const std::filesystem::path& path) {
  ByteReader r = ByteReader::FromFile(path, ErrorCode::kCorruptCheckpoint);
  return ParseCheckpoint(r.data());
}

}  // namespace respira
