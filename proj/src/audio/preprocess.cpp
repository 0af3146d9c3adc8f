// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>

#include "respira/audio.hpp"
#include "respira/error.hpp"

namespace respira {
namespace {

constexpr int kHalfTaps = 32;  // 64-tap kernel
constexpr double kKaiserBeta = 8.6;
constexpr double kRolloff = 0.95;
constexpr std::int64_t kMaxCachedPhases = 4096;

double Sinc(double x) {
  if (std::abs(x) < 1e-12) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

double KaiserWindow(double x) {
  // x in [-1, 1]
  const double r = 1.0 - x * x;
  if (r <= 0.0) return 0.0;
  static const double norm = std::cyl_bessel_i(0.0, kKaiserBeta);
  return std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(r)) / norm;
}

// Taps for fractional offset `frac` in [0, 1): weight for input sample
// floor(t) + k - kHalfTaps + 1, k = 0..63.
std::vector<double> KernelTaps(double frac, double cutoff) {
  std::vector<double> taps(2 * kHalfTaps);
  for (int k = 0; k < 2 * kHalfTaps; ++k) {
    const double x = static_cast<double>(k - kHalfTaps + 1) - frac;
    taps[k] = cutoff * Sinc(cutoff * x) * KaiserWindow(x / kHalfTaps);
  }
  return taps;
}

int FrameSamples(double ms, int rate) {
  return std::max(1, static_cast<int>(std::lround(ms * rate / 1000.0)));
}

}  // namespace

void SadConfig::Validate() const {
  if (!(hop_ms > 0.0) || frame_ms < hop_ms) {
    throw Error(ErrorCode::kInvalidConfig, "SAD requires frame_ms >= hop_ms > 0");
  }
  if (!(threshold_db < 0.0)) throw Error(ErrorCode::kInvalidConfig, "SAD threshold_db must be negative");
}

AudioClip Resample(const AudioClip& clip, int target_rate) {
  if (target_rate <= 0) throw Error(ErrorCode::kInvalidConfig, "target rate must be positive");
  if (clip.sample_rate <= 0) throw Error(ErrorCode::kInvalidConfig, "clip has no sample rate");
  if (clip.sample_rate == target_rate) return clip;

  const std::int64_t src = clip.sample_rate;
  const std::int64_t dst = target_rate;
  const std::int64_t n_in = static_cast<std::int64_t>(clip.samples.size());
  const auto n_out = static_cast<std::int64_t>(
      std::llround(static_cast<double>(n_in) * static_cast<double>(dst) / static_cast<double>(src)));
  const double cutoff = kRolloff * std::min(1.0, static_cast<double>(dst) / static_cast<double>(src));

  // Output n sits at input position n * src / dst; the fractional part cycles
  // through dst / gcd distinct phases.
  const std::int64_t g = std::gcd(src, dst);
  const std::int64_t phases = dst / g;
  std::unordered_map<std::int64_t, std::vector<double>> cache;

  AudioClip out;
  out.sample_rate = target_rate;
  out.samples.assign(static_cast<std::size_t>(n_out), 0.0);
  for (std::int64_t n = 0; n < n_out; ++n) {
    const std::int64_t num = n * src;
    const std::int64_t base = num / dst;
    const std::int64_t rem = num % dst;
    const double frac = static_cast<double>(rem) / static_cast<double>(dst);
    std::vector<double> local;
    const std::vector<double>* taps;
    if (phases <= kMaxCachedPhases) {
      auto it = cache.find(rem);
      if (it == cache.end()) it = cache.emplace(rem, KernelTaps(frac, cutoff)).first;
      taps = &it->second;
    } else {
      local = KernelTaps(frac, cutoff);
      taps = &local;
    }
    double acc = 0.0;
    for (int k = 0; k < 2 * kHalfTaps; ++k) {
      const std::int64_t idx = base + k - kHalfTaps + 1;
      if (idx < 0 || idx >= n_in) continue;
      acc += (*taps)[k] * clip.samples[static_cast<std::size_t>(idx)];
    }
    out.samples[static_cast<std::size_t>(n)] = acc;
  }
  return out;
}

AudioClip NormalizeAmplitude(const AudioClip& clip) {
  double peak = 0.0;
  for (double s : clip.samples) peak = std::max(peak, std::abs(s));
  AudioClip out = clip;
  if (peak == 0.0) {
    out.warning = true;
    return out;
  }
  if (peak == 1.0) return out;
  for (double& s : out.samples) s /= peak;
  return out;
}

std::vector<bool> VoicedFrames(const AudioClip& clip, const SadConfig& cfg) {
  cfg.Validate();
  const int frame = FrameSamples(cfg.frame_ms, clip.sample_rate);
  const int hop = FrameSamples(cfg.hop_ms, clip.sample_rate);
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  if (n < frame) {
    throw Error(ErrorCode::kTooShort, "clip shorter than one SAD frame (" + std::to_string(n) + " samples)");
  }
  const std::int64_t n_frames = 1 + (n - frame) / hop;
  std::vector<double> energy(static_cast<std::size_t>(n_frames));
  for (std::int64_t i = 0; i < n_frames; ++i) {
    double e = 0.0;
    for (int j = 0; j < frame; ++j) {
      const double s = clip.samples[static_cast<std::size_t>(i * hop + j)];
      e += s * s;
    }
    energy[static_cast<std::size_t>(i)] = e;
  }
  const double max_e = *std::max_element(energy.begin(), energy.end());
  std::vector<bool> voiced(energy.size(), false);
  if (max_e <= 0.0) return voiced;
  const double floor_db = 10.0 * std::log10(max_e) + cfg.threshold_db;
  for (std::size_t i = 0; i < energy.size(); ++i) {
    voiced[i] = energy[i] > 0.0 && 10.0 * std::log10(energy[i]) >= floor_db;
  }
  return voiced;
}

AudioClip RemoveSilence(const AudioClip& clip, const SadConfig& cfg) {
  const std::vector<bool> voiced = VoicedFrames(clip, cfg);
  const int frame = FrameSamples(cfg.frame_ms, clip.sample_rate);
  const int hop = FrameSamples(cfg.hop_ms, clip.sample_rate);
  const auto n = static_cast<std::int64_t>(clip.samples.size());
  const auto n_frames = static_cast<std::int64_t>(voiced.size());

  // A sample survives only if every frame covering it is voiced. Samples past
  // the last full frame belong to the last frame.
  AudioClip out;
  out.sample_rate = clip.sample_rate;
  out.warning = clip.warning;
  for (std::int64_t s = 0; s < n; ++s) {
    std::int64_t first = s >= frame ? (s - frame) / hop + 1 : 0;
    std::int64_t last = std::min(s / hop, n_frames - 1);
    if (first > last) first = last;
    bool keep = true;
    for (std::int64_t i = first; i <= last && keep; ++i) keep = voiced[static_cast<std::size_t>(i)];
    if (keep) out.samples.push_back(clip.samples[static_cast<std::size_t>(s)]);
  }
  if (out.duration_ms() < cfg.min_voiced_ms) {
    throw Error(ErrorCode::kAllSilent, "only " + std::to_string(out.duration_ms()) +
                                           " ms above the activity threshold");
  }
  return out;
}

AudioClip Preprocess(const AudioClip& clip, const SadConfig& sad, int target_rate) {
  return RemoveSilence(NormalizeAmplitude(Resample(clip, target_rate)), sad);
}

}  // namespace respira
