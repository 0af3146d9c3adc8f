// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <functional>
#include <string>
#include <vector>

#include "respira/audio.hpp"
#include "respira/features.hpp"

namespace respira {

// Feature sequences with binary labels, aligned by index.
struct LabeledFeatures {
  std::vector<std::string> ids;
  std::vector<FeatureMatrix> feats;
  std::vector<int> labels;

  std::size_t size() const { return ids.size(); }
  std::size_t CountPositive() const;
  LabeledFeatures Subset(const std::vector<std::size_t>& indices) const;
  void Add(std::string id, FeatureMatrix feat, int label);
};

struct FeaturePipeline {
  SadConfig sad;
  FrameConfig frame;
};

struct SkippedEntry {
  std::string id;
  std::string reason;
};

using ClipFeaturizer = std::function<FeatureMatrix(const AudioClip&)>;

// Reads, preprocesses and featurizes every manifest entry. Entries whose
// audio or features fail are reported in `skipped` (or rethrown when
// `skipped` is null).
LabeledFeatures ExtractDataset(const DatasetManifest& manifest, const FeaturePipeline& pipeline,
                               const ClipFeaturizer& featurize, std::vector<SkippedEntry>* skipped = nullptr);

// The default featurizer: MFCC with delta-delta.
LabeledFeatures ExtractMfccDataset(const DatasetManifest& manifest, const FeaturePipeline& pipeline,
                                   std::vector<SkippedEntry>* skipped = nullptr);

}  // namespace respira
