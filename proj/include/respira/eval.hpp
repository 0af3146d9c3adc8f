// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "respira/audio.hpp"
#include "respira/scores.hpp"

namespace respira {

// Area under the ROC curve by trapezoidal integration over distinct
// thresholds. Tied scores form one diagonal segment, which gives the same
// value as P(pos > neg) + P(tie) / 2. Labels are 0/1.
double RocAuc(const std::vector<double>& scores, const std::vector<int>& labels);
double RocAuc(const ScoreSet& scores, const std::map<std::string, int>& labels);

struct RocPoint {
  double fpr;
  double tpr;
};
// Curve vertices from (0,0) to (1,1), one per distinct threshold.
std::vector<RocPoint> RocCurve(const std::vector<double>& scores, const std::vector<int>& labels);

// Labels keyed by id from a manifest.
std::map<std::string, int> LabelMap(const DatasetManifest& manifest);

// mu * sup + (1 - mu) * ssl per id, in the order of `sup`.
ScoreSet EnsembleScores(const ScoreSet& sup, const ScoreSet& ssl, double mu);

struct FusionWeights {
  double theta = 1.0 / 3.0;
  double gamma = 1.0 / 3.0;
  double phi = 1.0 / 3.0;
  // Throws kInvalidWeights unless all >= 0 and the sum is 1 within 1e-9.
  void Validate() const;
};

// theta * breath + gamma * cough + phi * speech per id.
ScoreSet FuseScores(const ScoreSet& breath, const ScoreSet& cough, const ScoreSet& speech, const FusionWeights& w);

struct MuSearchResult {
  double mu = 0.5;
  double auc = 0.0;
  std::vector<std::pair<double, double>> grid;  // (mu, auc)
};
// Evaluates mu in {0, 0.1, ..., 1} and keeps the first best AUC.
MuSearchResult SearchMu(const ScoreSet& sup, const ScoreSet& ssl, const std::map<std::string, int>& labels);

struct FoldSpec {
  int k = 5;
  std::uint64_t seed = 0;
  std::vector<int> assignment;  // fold index per manifest entry

  std::vector<std::size_t> Members(int fold) const;
  std::vector<std::size_t> Complement(int fold) const;
};

// Stratified assignment: each class is shuffled and dealt round-robin, the
// negatives continuing where the positives stopped so fold sizes also differ
// by at most one. Throws kTooFewSamples if a class has fewer than k members.
FoldSpec MakeFolds(const std::vector<int>& labels, int k, std::uint64_t seed);
FoldSpec MakeFolds(const DatasetManifest& manifest, int k, std::uint64_t seed);

// SVG line plot of one or more ROC curves, axes FPR/TPR on [0, 1].
void WriteRocSvg(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves);

}  // namespace respira
