// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include "respira/binary_io.hpp"
#include "respira/error.hpp"
#include "respira/features.hpp"

namespace respira {
namespace {

constexpr char kCacheMagic[] = "RSPF";
constexpr std::uint32_t kCacheVersion = 1;

}  // namespace

std::vector<std::vector<unsigned char>> SpectrogramPixels(const FeatureMatrix& spec, double dynamic_range_db) {
  const Eigen::Index frames = spec.frames();
  const Eigen::Index bins = spec.dims();
  std::vector<std::vector<unsigned char>> px(static_cast<std::size_t>(bins),
                                             std::vector<unsigned char>(static_cast<std::size_t>(frames), 0));
  const double peak = spec.data.size() ? spec.data.maxCoeff() : 0.0;
  if (!(peak > 0.0)) return px;

  const double top = 10.0 * std::log10(peak);
  const double floor_db = top - dynamic_range_db;
  RowMatrixXd db(frames, bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (Eigen::Index k = 0; k < bins; ++k) {
      const double p = spec.data(t, k);
      db(t, k) = p > 0.0 ? std::max(10.0 * std::log10(p), floor_db) : floor_db;
    }
  }
  const double lo = db.minCoeff();
  const double span = top - lo;
  if (!(span > 0.0)) return px;
  for (Eigen::Index k = 0; k < bins; ++k) {
    auto& row = px[static_cast<std::size_t>(bins - 1 - k)];
    for (Eigen::Index t = 0; t < frames; ++t) {
      row[static_cast<std::size_t>(t)] = static_cast<unsigned char>(std::lround(255.0 * (db(t, k) - lo) / span));
    }
  }
  return px;
}

void ExportSpectrogramImage(const FeatureMatrix& spec, const std::filesystem::path& path,
                            const std::filesystem::path& svg_path, double dynamic_range_db) {
  if (spec.kind != FeatureKind::kSpectrogram) {
    throw Error(ErrorCode::kInvalidConfig, std::string("expected a spectrogram, got ") + ToString(spec.kind));
  }
  const auto px = SpectrogramPixels(spec, dynamic_range_db);
  const std::size_t height = px.size();
  const std::size_t width = height ? px.front().size() : 0;

  std::ofstream pgm(path, std::ios::binary | std::ios::trunc);
  if (!pgm) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  pgm << "P5\n" << width << ' ' << height << "\n255\n";
  for (const auto& row : px) pgm.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  if (!pgm) throw Error(ErrorCode::kIoError, "write failed for " + path.string());

  if (svg_path.empty()) return;
  std::ofstream svg(svg_path, std::ios::trunc);
  if (!svg) throw Error(ErrorCode::kIoError, "cannot open " + svg_path.string());
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\" shape-rendering=\"crispEdges\">\n";
  // One rect per horizontal run of equal intensity.
  for (std::size_t y = 0; y < height; ++y) {
    std::size_t x = 0;
    while (x < width) {
      std::size_t end = x + 1;
      while (end < width && px[y][end] == px[y][x]) ++end;
      const int v = px[y][x];
      svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << end - x << "\" height=\"1\" fill=\"rgb(" << v
          << ',' << v << ',' << v << ")\"/>\n";
      x = end;
    }
  }
  svg << "</svg>\n";
  if (!svg) throw Error(ErrorCode::kIoError, "write failed for " + svg_path.string());
}

void WriteFeatureCache(const std::filesystem::path& path, const FeatureMatrix& feat) {
  ByteWriter w;
  w.Bytes(kCacheMagic);
  w.U32(kCacheVersion);
  w.U32(static_cast<std::uint32_t>(feat.kind));
  w.U32(static_cast<std::uint32_t>(feat.frames()));
  w.U32(static_cast<std::uint32_t>(feat.dims()));
  w.F32(static_cast<float>(feat.frame_hop_ms));
  for (Eigen::Index t = 0; t < feat.frames(); ++t) {
    for (Eigen::Index f = 0; f < feat.dims(); ++f) w.F32(static_cast<float>(feat.data(t, f)));
  }
  w.WriteFile(path);
}

FeatureMatrix ReadFeatureCache(const std::filesystem::path& path) {
  ByteReader r = ByteReader::FromFile(path, ErrorCode::kCorruptHeader);
  if (r.Bytes(4) != kCacheMagic) throw Error(ErrorCode::kCorruptHeader, path.string() + ": not a feature cache");
  const std::uint32_t version = r.U32();
  if (version != kCacheVersion) {
    throw Error(ErrorCode::kVersionMismatch, path.string() + ": feature cache version " + std::to_string(version));
  }
  const std::uint32_t kind = r.U32();
  if (kind > static_cast<std::uint32_t>(FeatureKind::kSpectrogram)) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": unknown feature kind");
  }
  FeatureMatrix feat;
  feat.kind = static_cast<FeatureKind>(kind);
  const std::uint32_t frames = r.U32();
  const std::uint32_t dims = r.U32();
  feat.frame_hop_ms = r.F32();
  if (r.remaining() != static_cast<std::size_t>(frames) * dims * 4) {
    throw Error(ErrorCode::kCorruptHeader, path.string() + ": payload size does not match T x F");
  }
  feat.data.resize(frames, dims);
  for (std::uint32_t t = 0; t < frames; ++t) {
    for (std::uint32_t f = 0; f < dims; ++f) feat.data(t, f) = r.F32();
  }
  return feat;
}

}  // namespace respira
