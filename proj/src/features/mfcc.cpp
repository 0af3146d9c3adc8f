// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cmath>
#include <complex>
#include <unsupported/Eigen/FFT>

#include "respira/error.hpp"
#include "respira/features.hpp"

namespace respira {
namespace {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double MelToHz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

std::vector<double> HannWindow(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  if (n == 1) {
    w[0] = 1.0;
    return w;
  }
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / (n - 1));
  return w;
}

// Orthonormal DCT-II basis, n_out x n_in.
RowMatrixXd DctMatrix(int n_out, int n_in) {
  RowMatrixXd d(n_out, n_in);
  for (int k = 0; k < n_out; ++k) {
    const double s = k == 0 ? std::sqrt(1.0 / n_in) : std::sqrt(2.0 / n_in);
    for (int m = 0; m < n_in; ++m) d(k, m) = s * std::cos(M_PI * k * (m + 0.5) / n_in);
  }
  return d;
}

}  // namespace

const char* ToString(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::kMfcc: return "mfcc";
    case FeatureKind::kMfccDeltaDelta: return "mfcc_dd";
    case FeatureKind::kSsl: return "ssl";
    case FeatureKind::kSpectrogram: return "spectrogram";
  }
  return "unknown";
}

int FrameConfig::WindowSamples(int sample_rate) const {
  return static_cast<int>(std::lround(window_ms * sample_rate / 1000.0));
}

int FrameConfig::HopSamples(int sample_rate) const {
  return static_cast<int>(std::lround(hop_ms * sample_rate / 1000.0));
}

void FrameConfig::Validate(int sample_rate) const {
  if (WindowSamples(sample_rate) < 1 || HopSamples(sample_rate) < 1) {
    throw Error(ErrorCode::kInvalidConfig, "window and hop must span at least one sample");
  }
  if (n_fft < WindowSamples(sample_rate)) throw Error(ErrorCode::kInvalidConfig, "n_fft smaller than window");
  if (n_mfcc > n_mels || n_mfcc < 1) throw Error(ErrorCode::kInvalidConfig, "need 1 <= n_mfcc <= n_mels");
  if (!(log_floor > 0.0)) throw Error(ErrorCode::kInvalidConfig, "log_floor must be positive");
  if (delta_window < 1) throw Error(ErrorCode::kInvalidConfig, "delta_window must be >= 1");
}

FeatureMatrix PowerSpectrogram(const AudioClip& clip, const FrameConfig& cfg) {
  cfg.Validate(clip.sample_rate);
  const int window = cfg.WindowSamples(clip.sample_rate);
  const int hop = cfg.HopSamples(clip.sample_rate);
  const auto n = static_cast<Eigen::Index>(clip.samples.size());
  const Eigen::Index frames = NumFrames(n, window, hop);
  if (frames < 1) {
    throw Error(ErrorCode::kTooShort, std::to_string(n) + " samples < window of " + std::to_string(window));
  }
  const int bins = cfg.n_fft / 2 + 1;
  const std::vector<double> hann = HannWindow(window);

  Eigen::FFT<double> fft;
  std::vector<double> buf(static_cast<std::size_t>(cfg.n_fft));
  std::vector<std::complex<double>> spec;
  FeatureMatrix out;
  out.kind = FeatureKind::kSpectrogram;
  out.frame_hop_ms = cfg.hop_ms;
  out.data.resize(frames, bins);
  for (Eigen::Index t = 0; t < frames; ++t) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < window; ++i) {
      buf[static_cast<std::size_t>(i)] = clip.samples[static_cast<std::size_t>(t * hop + i)] * hann[static_cast<std::size_t>(i)];
    }
    fft.fwd(spec, buf);
    for (int k = 0; k < bins; ++k) out.data(t, k) = std::norm(spec[static_cast<std::size_t>(k)]);
  }
  return out;
}

RowMatrixXd MelFilterbank(const FrameConfig& cfg, int sample_rate) {
  const int bins = cfg.n_fft / 2 + 1;
  const double mel_lo = HzToMel(0.0);
  const double mel_hi = HzToMel(sample_rate / 2.0);
  std::vector<double> edges(static_cast<std::size_t>(cfg.n_mels + 2));
  for (int m = 0; m < cfg.n_mels + 2; ++m) {
    edges[static_cast<std::size_t>(m)] = MelToHz(mel_lo + (mel_hi - mel_lo) * m / (cfg.n_mels + 1));
  }
  RowMatrixXd fb = RowMatrixXd::Zero(cfg.n_mels, bins);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = edges[static_cast<std::size_t>(m)];
    const double center = edges[static_cast<std::size_t>(m + 1)];
    const double hi = edges[static_cast<std::size_t>(m + 2)];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / cfg.n_fft;
      if (f > lo && f <= center) {
        fb(m, k) = (f - lo) / (center - lo);
      } else if (f > center && f < hi) {
        fb(m, k) = (hi - f) / (hi - center);
      }
    }
  }
  return fb;
}

FeatureMatrix Mfcc(const AudioClip& clip, const FrameConfig& cfg) {
  const FeatureMatrix power = PowerSpectrogram(clip, cfg);
  const RowMatrixXd fb = MelFilterbank(cfg, clip.sample_rate);
  const RowMatrixXd dct = DctMatrix(cfg.n_mfcc, cfg.n_mels);
  FeatureMatrix out;
  out.kind = FeatureKind::kMfcc;
  out.frame_hop_ms = cfg.hop_ms;
  out.data.resize(power.frames(), cfg.n_mfcc);
  // Row by row so identical frames give bit-identical coefficients.
  for (Eigen::Index t = 0; t < power.frames(); ++t) {
    const Eigen::VectorXd logmel = ((fb * power.data.row(t).transpose()).array() + cfg.log_floor).log().matrix();
    out.data.row(t).noalias() = (dct * logmel).transpose();
  }
  return out;
}

RowMatrixXd Deltas(const RowMatrixXd& x, int window) {
  const Eigen::Index frames = x.rows();
  double denom = 0.0;
  for (int n = 1; n <= window; ++n) denom += 2.0 * n * n;
  RowMatrixXd d = RowMatrixXd::Zero(frames, x.cols());
  for (Eigen::Index t = 0; t < frames; ++t) {
    for (int n = 1; n <= window; ++n) {
      const Eigen::Index ahead = std::min<Eigen::Index>(t + n, frames - 1);
      const Eigen::Index behind = std::max<Eigen::Index>(t - n, 0);
      d.row(t) += n * (x.row(ahead) - x.row(behind));
    }
  }
  return d / denom;
}

FeatureMatrix AppendDeltaDelta(const FeatureMatrix& feat, int window, bool include_delta) {
  if (feat.frames() < 1) throw Error(ErrorCode::kTooShort, "no frames");
  const RowMatrixXd delta = Deltas(feat.data, window);
  const RowMatrixXd delta2 = Deltas(delta, window);
  const Eigen::Index f = feat.dims();
  FeatureMatrix out;
  out.kind = FeatureKind::kMfccDeltaDelta;
  out.frame_hop_ms = feat.frame_hop_ms;
  out.data.resize(feat.frames(), include_delta ? 3 * f : 2 * f);
  out.data.leftCols(f) = feat.data;
  if (include_delta) {
    out.data.middleCols(f, f) = delta;
    out.data.rightCols(f) = delta2;
  } else {
    out.data.rightCols(f) = delta2;
  }
  return out;
}

FeatureMatrix MfccDeltaDelta(const AudioClip& clip, const FrameConfig& cfg) {
  return AppendDeltaDelta(Mfcc(clip, cfg), cfg.delta_window, cfg.include_delta);
}

FeatureMatrix SpecAugment(const FeatureMatrix& feat, const MaskConfig& cfg, Rng& rng,
                          std::vector<MaskRect>* applied) {
  FeatureMatrix out = feat;
  const Eigen::Index frames = feat.frames();
  const Eigen::Index dims = feat.dims();
  for (int i = 0; i < cfg.n_time_masks; ++i) {
    const Eigen::Index max_w = std::min<Eigen::Index>(std::max(cfg.time_mask_len, 0), frames);
    const Eigen::Index w = rng.Between(0, max_w);
    const Eigen::Index start = rng.Between(0, frames - w);
    out.data.middleRows(start, w).setConstant(cfg.fill);
    if (applied) applied->push_back({true, start, w});
  }
  for (int i = 0; i < cfg.n_freq_masks; ++i) {
    const Eigen::Index max_w = std::min<Eigen::Index>(std::max(cfg.freq_mask_len, 0), dims);
    const Eigen::Index w = rng.Between(0, max_w);
    const Eigen::Index start = rng.Between(0, dims - w);
    out.data.middleCols(start, w).setConstant(cfg.fill);
    if (applied) applied->push_back({false, start, w});
  }
  return out;
}

Standardizer Standardizer::Fit(const std::vector<const FeatureMatrix*>& feats) {
  if (feats.empty()) throw Error(ErrorCode::kDegenerateDataset, "no features to standardize");
  const Eigen::Index dims = feats.front()->dims();
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(dims);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(dims);
  double count = 0.0;
  for (const FeatureMatrix* f : feats) {
    if (f->dims() != dims) throw Error(ErrorCode::kShapeMismatch, "feature dims differ across clips");
    sum += f->data.colwise().sum();
    count += static_cast<double>(f->frames());
  }
  Standardizer s;
  s.mean = sum / count;
  for (const FeatureMatrix* f : feats) {
    sq += (f->data.rowwise() - s.mean).array().square().matrix().colwise().sum();
  }
  s.scale.resize(dims);
  for (Eigen::Index j = 0; j < dims; ++j) {
    const double sd = std::sqrt(sq(j) / count);
    s.scale(j) = sd > 1e-8 ? 1.0 / sd : 1.0;
  }
  return s;
}

FeatureMatrix Standardizer::Apply(const FeatureMatrix& feat) const {
  if (feat.dims() != mean.size()) throw Error(ErrorCode::kShapeMismatch, "standardizer dimension mismatch");
  FeatureMatrix out = feat;
  out.data = ((feat.data.rowwise() - mean).array().rowwise() * scale.array()).matrix();
  return out;
}

}  // namespace respira
