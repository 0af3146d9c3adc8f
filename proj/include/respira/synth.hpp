// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cstdint>
#include <filesystem>

#include "respira/audio.hpp"

namespace respira {

struct SynthConfig {
  int n = 200;
  std::uint64_t seed = 0;
  int sample_rate = kTargetSampleRate;
  double cutoff_hz = 1000.0;
  // Mean voiced duration per task (breath, cough, speech) before jitter.
  double breath_ms = 1000.0;
  double cough_ms = 700.0;
  double speech_ms = 1200.0;
};

// One clip. Positives are low-pass noise (below cutoff_hz) under a slow
// amplitude envelope, negatives broadband noise; both carry a task-specific
// envelope and short near-silent edges.
AudioClip SynthesizeClip(Label label, Task task, const SynthConfig& cfg, std::uint64_t clip_seed);

// Writes `n` WAV files under out_dir/audio and out_dir/manifest.csv. Labels
// alternate and tasks cycle, so classes are balanced within every task.
DatasetManifest SynthesizeDataset(const SynthConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace respira
