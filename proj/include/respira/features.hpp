// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "respira/audio.hpp"
#include "respira/rng.hpp"

namespace respira {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct FrameConfig {
  double window_ms = 25.0;
  double hop_ms = 10.0;
  int n_fft = 512;
  int n_mels = 64;
  int n_mfcc = 40;
  int delta_window = 2;
  double log_floor = 1e-10;
  // Static + delta-delta (80 dims) by default; true gives static + delta +
  // delta-delta (120 dims).
  bool include_delta = false;

  int WindowSamples(int sample_rate) const;
  int HopSamples(int sample_rate) const;
  void Validate(int sample_rate) const;
  int FeatureDim() const { return include_delta ? 3 * n_mfcc : 2 * n_mfcc; }
};

enum class FeatureKind : std::uint32_t { kMfcc = 0, kMfccDeltaDelta = 1, kSsl = 2, kSpectrogram = 3 };

const char* ToString(FeatureKind kind);

/// T x F frame sequence. Rows are frames.
struct FeatureMatrix {
  RowMatrixXd data;
  double frame_hop_ms = 10.0;
  FeatureKind kind = FeatureKind::kMfccDeltaDelta;

  Eigen::Index frames() const { return data.rows(); }
  Eigen::Index dims() const { return data.cols(); }
};

struct MaskConfig {
  int time_mask_len = 20;
  int freq_mask_len = 50;
  int n_time_masks = 1;
  int n_freq_masks = 1;
  double fill = 0.0;
};

inline Eigen::Index NumFrames(Eigen::Index n_samples, int window, int hop) {
  return n_samples < window ? 0 : 1 + (n_samples - window) / hop;
}

// |DFT|^2 of Hann-windowed frames, n_fft/2 + 1 bins per row.
FeatureMatrix PowerSpectrogram(const AudioClip& clip, const FrameConfig& cfg);

// Triangular HTK-mel filters spanning 0 Hz to Nyquist; n_mels x (n_fft/2 + 1).
RowMatrixXd MelFilterbank(const FrameConfig& cfg, int sample_rate);

// log(mel energies + log_floor) followed by orthonormal DCT-II.
FeatureMatrix Mfcc(const AudioClip& clip, const FrameConfig& cfg);

// Regression deltas with edge replication.
RowMatrixXd Deltas(const RowMatrixXd& x, int window);

// Appends delta-delta (and optionally delta) columns. The input occupies the
// first F output columns unchanged.
FeatureMatrix AppendDeltaDelta(const FeatureMatrix& feat, int window, bool include_delta = false);

// Mfcc followed by AppendDeltaDelta.
FeatureMatrix MfccDeltaDelta(const AudioClip& clip, const FrameConfig& cfg);

struct MaskRect {
  bool time;  // true: rows [start, start+width); false: columns
  Eigen::Index start;
  Eigen::Index width;
};

// Time and frequency masking. Widths are drawn from [0, min(len, dim)].
// Applied rectangles are appended to `applied` when non-null.
FeatureMatrix SpecAugment(const FeatureMatrix& feat, const MaskConfig& cfg, Rng& rng,
                          std::vector<MaskRect>* applied = nullptr);

// Per-dimension standardization fitted on a training split.
struct Standardizer {
  Eigen::RowVectorXd mean;
  Eigen::RowVectorXd scale;  // 1 / stddev

  static Standardizer Fit(const std::vector<const FeatureMatrix*>& feats);
  FeatureMatrix Apply(const FeatureMatrix& feat) const;
};

// Grayscale P5 PGM of a spectrogram: width T, height F, low bins at the
// bottom, dB scale clipped to `dynamic_range_db` below the peak, min-max
// normalized. An all-zero input gives a black image. When `svg_path` is not
// empty, an SVG rendering of the same pixels is also written.
void ExportSpectrogramImage(const FeatureMatrix& spec, const std::filesystem::path& path,
                            const std::filesystem::path& svg_path = {}, double dynamic_range_db = 80.0);

// Pixel intensities (0..255) used by ExportSpectrogramImage, row 0 = top.
std::vector<std::vector<unsigned char>> SpectrogramPixels(const FeatureMatrix& spec,
                                                          double dynamic_range_db = 80.0);

// Binary feature cache: "RSPF", u32 version, u32 kind, u32 T, u32 F,
// f32 frame_hop_ms, then T*F row-major f32, all little-endian.
void WriteFeatureCache(const std::filesystem::path& path, const FeatureMatrix& feat);
FeatureMatrix ReadFeatureCache(const std::filesystem::path& path);

}  // namespace respira
