// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/binary_io.hpp"

#include <fstream>
#include <iterator>

namespace respira {

void ByteWriter::WriteFile(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string() + " for writing");
  f.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!f) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ByteReader ByteReader::FromFile(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(data), code);
}

}  // namespace respira
