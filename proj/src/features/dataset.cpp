// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/dataset.hpp"

#include "respira/error.hpp"

namespace respira {

std::size_t LabeledFeatures::CountPositive() const {
  std::size_t n = 0;
  for (int y : labels) n += y == 1;
  return n;
}

LabeledFeatures LabeledFeatures::Subset(const std::vector<std::size_t>& indices) const {
  LabeledFeatures out;
  for (std::size_t i : indices) out.Add(ids.at(i), feats.at(i), labels.at(i));
  return out;
}

void LabeledFeatures::Add(std::string id, FeatureMatrix feat, int label) {
  ids.push_back(std::move(id));
  feats.push_back(std::move(feat));
  labels.push_back(label);
}

LabeledFeatures ExtractDataset(const DatasetManifest& manifest, const FeaturePipeline& pipeline,
                               const ClipFeaturizer& featurize, std::vector<SkippedEntry>* skipped) {
  LabeledFeatures out;
  for (const auto& e : manifest.entries) {
    try {
      const AudioClip clip = Preprocess(ReadWav(e.path), pipeline.sad);
      out.Add(e.id, featurize(clip), e.label == Label::kPositive ? 1 : 0);
    } catch (const Error& err) {
      if (!skipped) throw;
      skipped->push_back({e.id, err.what()});
    }
  }
  return out;
}

LabeledFeatures ExtractMfccDataset(const DatasetManifest& manifest, const FeaturePipeline& pipeline,
                                   std::vector<SkippedEntry>* skipped) {
  const FrameConfig frame = pipeline.frame;
  return ExtractDataset(
      manifest, pipeline, [frame](const AudioClip& clip) { return MfccDeltaDelta(clip, frame); }, skipped);
}

}  // namespace respira
