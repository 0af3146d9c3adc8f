// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace respira {

inline constexpr int kTargetSampleRate = 16000;

struct AudioClip {
  std::vector<double> samples;
  int sample_rate = kTargetSampleRate;
  // Set by NormalizeAmplitude when the clip had no energy to scale.
  bool warning = false;

  double duration_ms() const {
    return sample_rate > 0 ? 1000.0 * static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Frame-energy silence detector settings.
struct SadConfig {
  double frame_ms = 25.0;
  double hop_ms = 10.0;
  double threshold_db = -40.0;
  double min_voiced_ms = 100.0;

  void Validate() const;
};

// Reads a RIFF/WAVE file holding PCM 16-bit or IEEE float 32-bit samples.
// Stereo (or wider) input is downmixed by averaging the channels.
AudioClip ReadWav(const std::filesystem::path& path);

// Writes 16-bit PCM mono. Samples are clipped to [-1, 1) before quantizing.
void WriteWav(const std::filesystem::path& path, const AudioClip& clip);

// Writes IEEE float 32-bit mono.
void WriteWavFloat(const std::filesystem::path& path, const AudioClip& clip);

// Band-limited windowed-sinc resampler (64-tap Kaiser window). The output
// holds round(n * target / source) samples; equal rates return a copy.
AudioClip Resample(const AudioClip& clip, int target_rate);

// Scales samples by 1 / max|x|. An all-zero clip is returned unchanged with
// `warning` set.
AudioClip NormalizeAmplitude(const AudioClip& clip);

// Drops frames whose log-energy falls more than |threshold_db| below the
// loudest frame. Throws kAllSilent when less than min_voiced_ms remains.
AudioClip RemoveSilence(const AudioClip& clip, const SadConfig& cfg);

// Per-frame keep decisions on the SAD frame grid; exposed for tests.
std::vector<bool> VoicedFrames(const AudioClip& clip, const SadConfig& cfg);

// resample -> normalize -> silence removal, the order used throughout.
AudioClip Preprocess(const AudioClip& clip, const SadConfig& sad, int target_rate = kTargetSampleRate);

enum class Label { kNegative = 0, kPositive = 1 };
enum class Task { kBreath, kCough, kSpeech };

std::string ToString(Task task);
Task ParseTask(const std::string& text);

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;
  Label label = Label::kNegative;
  Task task = Task::kBreath;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;

  std::size_t size() const { return entries.size(); }
  std::size_t CountLabel(Label label) const;
  DatasetManifest FilterTask(Task task) const;
  DatasetManifest Subset(const std::vector<std::size_t>& indices) const;
};

// CSV with header `id,path,label,task`; label in {p,n}. Relative paths are
// resolved against the manifest's directory. With check_paths, every path
// must exist.
DatasetManifest LoadManifest(const std::filesystem::path& path, bool check_paths = true);

// Paths are written relative to the manifest directory when possible.
void SaveManifest(const std::filesystem::path& path, const DatasetManifest& manifest);

}  // namespace respira
