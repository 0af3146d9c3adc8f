// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "respira/audio.hpp"
#include "respira/classifier.hpp"
#include "respira/eval.hpp"
#include "respira/features.hpp"
#include "respira/ssl.hpp"

namespace respira {

inline constexpr char kConfigEnvVar[] = "COVIDSCREEN_CONFIG";

// Every setting of the pipeline. Serialized as YAML; values without a
// published counterpart carry a `# non-paper default` comment.
struct PipelineConfig {
  std::uint64_t seed = 0;
  SadConfig sad;
  FrameConfig frame;
  MaskConfig mask;
  ModelSignature model;  // input_dim follows the feature settings
  TrainConfig train;
  bool distinct_task_seeds = false;
  SslPreset ssl_preset = SslPreset::kMini;
  SslConfig ssl;
  int cv_k = 5;
  int jobs = 1;
  double mu = 0.5;
  FusionWeights fusion{0.4, 0.2, 0.4};
  int synth_n = 200;
  double synth_cutoff_hz = 1000.0;

  PipelineConfig();
  // Copies shared settings (seed, masks, feature width) into the nested configs.
  void Resolve();
  void Validate() const;
  std::string ToYaml() const;
  // Throws kInvalidConfig on unknown keys, wrong types or invalid values.
  static PipelineConfig FromYaml(const std::string& text);
  static PipelineConfig Load(const std::filesystem::path& path);
  void Save(const std::filesystem::path& path) const;
};

}  // namespace respira
