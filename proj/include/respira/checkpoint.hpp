// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// Container: "RSPK", u32 version, str tag, u32 n_meta, n_meta x (str key,
// str value), u32 n_tensors, n_tensors x (str name, u8 dtype, u8 trainable,
// u32 rows, u32 cols, row-major data), u64 FNV-1a of all preceding bytes.
// Strings are u32 length + bytes; everything little-endian. dtype 0 = f32,
// 1 = f64.

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "respira/nn/tape.hpp"

namespace respira {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::string tag;
  std::map<std::string, std::string> meta;
  nn::ParamSet<float> params;
};

void SaveCheckpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
// Throws kVersionMismatch for other versions and kCorruptCheckpoint for bad
// magic, truncation, trailing bytes or checksum failures.
Checkpoint LoadCheckpoint(const std::filesystem::path& path);

std::string SerializeCheckpoint(const Checkpoint& ckpt);
Checkpoint ParseCheckpoint(std::string bytes);

}  // namespace respira
