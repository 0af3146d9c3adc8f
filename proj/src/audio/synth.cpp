// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/synth.hpp"

#include <cmath>
#include <cstdio>

#include "respira/error.hpp"
#include "respira/rng.hpp"

namespace respira {
namespace {

constexpr int kLowPassTaps = 255;

std::vector<double> LowPassKernel(double cutoff_hz, int rate) {
  const double fc = cutoff_hz / rate;
  const int half = kLowPassTaps / 2;
  std::vector<double> h(kLowPassTaps);
  double sum = 0.0;
  for (int i = 0; i < kLowPassTaps; ++i) {
    const int m = i - half;
    const double sinc = m == 0 ? 2.0 * fc : std::sin(2.0 * M_PI * fc * m) / (M_PI * m);
    const double blackman =
        0.42 - 0.5 * std::cos(2.0 * M_PI * i / (kLowPassTaps - 1)) + 0.08 * std::cos(4.0 * M_PI * i / (kLowPassTaps - 1));
    h[static_cast<std::size_t>(i)] = sinc * blackman;
    sum += h[static_cast<std::size_t>(i)];
  }
  for (double& v : h) v /= sum;
  return h;
}

double TaskEnvelope(Task task, double t, double dur, const std::vector<double>& params) {
  switch (task) {
    case Task::kBreath:
      // Inhale/exhale swell.
      return 0.55 - 0.45 * std::cos(2.0 * M_PI * t * params[0] / dur);
    case Task::kCough: {
      double env = 0.0;
      for (std::size_t b = 1; b < params.size(); ++b) {
        const double dt = t - params[b];
        if (dt >= 0.0) env += std::exp(-dt / 0.06) * (1.0 - std::exp(-dt / 0.005));
      }
      return std::min(1.0, env + 0.02);
    }
    case Task::kSpeech:
      return 0.5 + 0.5 * std::pow(std::sin(M_PI * params[0] * t + params[1]), 2);
  }
  return 1.0;
}

}  // namespace

AudioClip SynthesizeClip(Label label, Task task, const SynthConfig& cfg, std::uint64_t clip_seed) {
  Rng rng(clip_seed);
  const double base_ms = task == Task::kBreath ? cfg.breath_ms : task == Task::kCough ? cfg.cough_ms : cfg.speech_ms;
  const double dur = base_ms / 1000.0 * rng.Uniform(0.8, 1.2);
  const int rate = cfg.sample_rate;
  const auto n = static_cast<std::size_t>(std::lround(dur * rate));

  std::vector<double> params;
  switch (task) {
    case Task::kBreath:
      params = {static_cast<double>(1 + rng.Below(2))};
      break;
    case Task::kCough: {
      params = {0.0};
      const int bursts = 1 + static_cast<int>(rng.Below(3));
      for (int b = 0; b < bursts; ++b) params.push_back(dur * (b + rng.Uniform(0.0, 0.5)) / bursts);
      break;
    }
    case Task::kSpeech:
      params = {rng.Uniform(3.0, 5.0), rng.Uniform(0.0, M_PI)};
      break;
  }

  std::vector<double> noise(n + kLowPassTaps);
  for (double& v : noise) v = rng.Normal();
  std::vector<double> body(n);
  if (label == Label::kPositive) {
    const std::vector<double> h = LowPassKernel(cfg.cutoff_hz, rate);
    const double slow_hz = rng.Uniform(1.0, 2.0);
    const double slow_phase = rng.Uniform(0.0, 2.0 * M_PI);
    for (std::size_t i = 0; i < n; ++i) {
      double acc = 0.0;
      for (int k = 0; k < kLowPassTaps; ++k) acc += h[static_cast<std::size_t>(k)] * noise[i + static_cast<std::size_t>(k)];
      const double t = static_cast<double>(i) / rate;
      body[i] = acc * (0.6 + 0.4 * std::sin(2.0 * M_PI * slow_hz * t + slow_phase));
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) body[i] = noise[i];
  }
  double peak = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    body[i] *= TaskEnvelope(task, static_cast<double>(i) / rate, dur, params);
    peak = std::max(peak, std::abs(body[i]));
  }
  const double gain = rng.Uniform(0.3, 0.9) / peak;

  AudioClip clip;
  clip.sample_rate = rate;
  const auto lead = static_cast<std::size_t>(rng.Uniform(0.05, 0.15) * rate);
  const auto trail = static_cast<std::size_t>(rng.Uniform(0.05, 0.15) * rate);
  for (std::size_t i = 0; i < lead; ++i) clip.samples.push_back(1e-4 * rng.Uniform(-1.0, 1.0));
  for (std::size_t i = 0; i < n; ++i) clip.samples.push_back(gain * body[i]);
  for (std::size_t i = 0; i < trail; ++i) clip.samples.push_back(1e-4 * rng.Uniform(-1.0, 1.0));
  return clip;
}

DatasetManifest SynthesizeDataset(const SynthConfig& cfg, const std::filesystem::path& out_dir) {
  if (cfg.n < 10) throw Error(ErrorCode::kInvalidConfig, "synthetic datasets need n >= 10");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) throw Error(ErrorCode::kIoError, "cannot create " + (out_dir / "audio").string());
  DatasetManifest manifest;
  constexpr Task kTasks[] = {Task::kBreath, Task::kCough, Task::kSpeech};
  for (int i = 0; i < cfg.n; ++i) {
    ManifestEntry e;
    e.label = i % 2 == 0 ? Label::kPositive : Label::kNegative;
    e.task = kTasks[(i / 2) % 3];
    char id[32];
    std::snprintf(id, sizeof(id), "syn%04d", i);
    e.id = id;
    e.path = out_dir / "audio" / (e.id + ".wav");
    WriteWav(e.path, SynthesizeClip(e.label, e.task, cfg, MixSeed(cfg.seed, static_cast<std::uint64_t>(i))));
    manifest.entries.push_back(std::move(e));
  }
  SaveManifest(out_dir / "manifest.csv", manifest);
  return manifest;
}

}  // namespace respira
