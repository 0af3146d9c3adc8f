// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace respira {

// Per-recording detection probabilities, kept in insertion order.
struct ScoreSet {
  std::vector<std::string> ids;
  std::vector<double> scores;

  std::size_t size() const { return ids.size(); }
  void Add(const std::string& id, double score) {
    ids.push_back(id);
    scores.push_back(score);
  }
  // id -> score; throws kIdSetMismatch on duplicate ids.
  std::map<std::string, double> AsMap() const;
};

// One `id score` line per entry, score with 6 decimals.
void WriteScores(const std::filesystem::path& path, const ScoreSet& set);
ScoreSet ReadScores(const std::filesystem::path& path);

}  // namespace respira
