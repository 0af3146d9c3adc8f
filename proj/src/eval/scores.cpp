// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/scores.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "respira/error.hpp"

namespace respira {

std::map<std::string, double> ScoreSet::AsMap() const {
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!out.emplace(ids[i], scores[i]).second) throw Error(ErrorCode::kIdSetMismatch, "duplicate id " + ids[i]);
  }
  return out;
}

void WriteScores(const std::filesystem::path& path, const ScoreSet& set) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  char buf[64];
  for (std::size_t i = 0; i < set.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.6f", set.scores[i]);
    out << set.ids[i] << ' ' << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

ScoreSet ReadScores(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  ScoreSet set;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    std::istringstream ss(line);
    std::string id, extra;
    double score;
    if (!(ss >> id >> score) || (ss >> extra) || !std::isfinite(score)) {
      throw Error(ErrorCode::kInvalidScoreFile, path.string() + ":" + std::to_string(lineno) + ": expected `id score`");
    }
    set.Add(id, score);
  }
  set.AsMap();
  return set;
}

}  // namespace respira
