// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "respira/classifier.hpp"
#include "respira/eval.hpp"

namespace respira {

struct CvConfig {
  int k = 5;
  std::uint64_t seed = 0;
  int jobs = 1;
  ModelSignature signature;
  TrainConfig train;
};

struct FoldReport {
  int fold = 0;
  std::size_t n_train = 0;
  std::size_t n_val = 0;
  double val_auc = 0.0;   // NaN when the fold holds a single class
  double test_auc = 0.0;  // NaN without a labeled test set
  std::vector<EpochLog> log;
};

struct CvReport {
  int k = 0;
  std::uint64_t seed = 0;
  std::string fingerprint;
  std::vector<FoldReport> folds;
  double pooled_val_auc = 0.0;
  double mean_val_auc = 0.0;
  double mean_test_auc = 0.0;      // mean of per-fold test AUCs, NaN without one
  double averaged_test_auc = 0.0;  // AUC of fold-averaged probabilities, NaN without one
  ScoreSet val_scores;             // out-of-fold probabilities in data order
  ScoreSet test_scores;            // fold-averaged probabilities
  std::vector<std::string> score_files;
  std::vector<ModelParams> models;
};

// Stratified k-fold training and scoring. Each fold trains on the other
// k - 1 folds (from `init` when given) and scores its held-out fold; with a
// test set every fold model scores it and the probabilities are averaged.
// Results do not depend on cfg.jobs.
CvReport CrossValidate(const LabeledFeatures& data, const LabeledFeatures* test, const CvConfig& cfg,
                       const ModelParams* init = nullptr);

// 64-bit FNV-1a as 16 hex digits.
std::string Fingerprint(const std::string& text);

// report.json and folds.csv (fold,n_train,n_val,val_auc,test_auc) in `dir`.
void WriteCvReport(const std::filesystem::path& dir, const CvReport& report);

}  // namespace respira
