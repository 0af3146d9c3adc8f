// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <gtest/gtest.h>

#include <cmath>

#include "../common/dsp_oracle.hpp"
#include "../common/temp_dir.hpp"
#include "respira/error.hpp"
#include "respira/features.hpp"

namespace respira {
namespace {

using testing::TempDir;

AudioClip Sine(double freq, int n, double amp = 0.5) {
  AudioClip c;
  for (int i = 0; i < n; ++i) c.samples.push_back(amp * std::sin(2.0 * M_PI * freq * i / 16000.0));
  return c;
}

AudioClip Noise(int n, Rng& rng) {
  AudioClip c;
  for (int i = 0; i < n; ++i) c.samples.push_back(rng.Uniform(-1.0, 1.0));
  return c;
}

TEST(PowerSpectrogram, FrameCount) {
  AudioClip c;
  c.samples.assign(16000, 0.0);
  const FeatureMatrix p = PowerSpectrogram(c, FrameConfig{});
  EXPECT_EQ(p.frames(), 98);
  EXPECT_EQ(p.dims(), 257);
  EXPECT_EQ(p.data.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(p.kind, FeatureKind::kSpectrogram);
}

TEST(PowerSpectrogram, SinePeakBin) {
  const FeatureMatrix p = PowerSpectrogram(Sine(1000.0, 4000), FrameConfig{});
  for (Eigen::Index t = 0; t < p.frames(); ++t) {
    Eigen::Index k;
    p.data.row(t).maxCoeff(&k);
    EXPECT_EQ(k, 32);
  }
}

TEST(PowerSpectrogram, TooShort) {
  AudioClip c;
  c.samples.assign(399, 0.1);
  try {
    PowerSpectrogram(c, FrameConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooShort);
  }
}

TEST(PowerSpectrogram, MatchesDirectDft) {
  Rng rng(1);
  const AudioClip c = Noise(1200, rng);
  const FeatureMatrix p = PowerSpectrogram(c, FrameConfig{});
  const auto oracle = testing::OraclePower(c.samples, testing::OracleConfig{});
  ASSERT_EQ(static_cast<std::size_t>(p.frames()), oracle.size());
  for (Eigen::Index t = 0; t < p.frames(); ++t) {
    for (Eigen::Index k = 0; k < p.dims(); ++k) {
      const double o = oracle[static_cast<std::size_t>(t)][static_cast<std::size_t>(k)];
      EXPECT_NEAR(p.data(t, k), o, 1e-9 * std::max(1.0, o));
    }
  }
}

TEST(Mfcc, ZeroClipHasConstantFrames) {
  AudioClip c;
  c.samples.assign(3200, 0.0);
  const FeatureMatrix m = Mfcc(c, FrameConfig{});
  EXPECT_EQ(m.dims(), 40);
  for (Eigen::Index t = 1; t < m.frames(); ++t) EXPECT_EQ((m.data.row(t) - m.data.row(0)).cwiseAbs().maxCoeff(), 0.0);
  // Every log energy equals log(floor); the DCT of a constant is c0 only.
  EXPECT_NEAR(m.data(0, 0), std::log(1e-10) * std::sqrt(64.0), 1e-9);
  EXPECT_LT(m.data.row(0).tail(39).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Mfcc, SineFilterbankArgmaxContainsOneKilohertz) {
  const FrameConfig cfg;
  const FeatureMatrix p = PowerSpectrogram(Sine(1000.0, 4000), cfg);
  const RowMatrixXd fb = MelFilterbank(cfg, 16000);
  const RowMatrixXd mel = p.data * fb.transpose();
  Eigen::Index best;
  mel.row(3).maxCoeff(&best);
  EXPECT_GT(fb(best, 32), 0.0);
  EXPECT_GE(fb(best, 32), fb.col(32).maxCoeff() - 1e-12);
}

TEST(Mfcc, MatchesBruteForceOracle) {
  Rng rng(2);
  const FrameConfig cfg;
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    AudioClip c = Noise(800 + 160 * trial, rng);
    const AudioClip tone = Sine(300.0 + 700.0 * trial, static_cast<int>(c.samples.size()), 0.3);
    for (std::size_t i = 0; i < c.samples.size(); ++i) c.samples[i] = 0.2 * c.samples[i] + tone.samples[i];
    const FeatureMatrix m = Mfcc(c, cfg);
    const auto oracle = testing::OracleMfcc(c.samples, testing::OracleConfig{});
    ASSERT_EQ(static_cast<std::size_t>(m.frames()), oracle.size());
    for (Eigen::Index t = 0; t < m.frames(); ++t) {
      for (Eigen::Index q = 0; q < m.dims(); ++q) {
        const double o = oracle[static_cast<std::size_t>(t)][static_cast<std::size_t>(q)];
        worst = std::max(worst, std::abs(m.data(t, q) - o) / std::max(std::abs(o), 1e-6));
      }
    }
  }
  EXPECT_LT(worst, 1e-6);
}

TEST(Mfcc, FrameCountSharedWithSpectrogram) {
  Rng rng(3);
  const AudioClip c = Noise(7777, rng);
  EXPECT_EQ(Mfcc(c, FrameConfig{}).frames(), PowerSpectrogram(c, FrameConfig{}).frames());
  EXPECT_EQ(MfccDeltaDelta(c, FrameConfig{}).frames(), PowerSpectrogram(c, FrameConfig{}).frames());
}

TEST(FrameConfig, Validation) {
  FrameConfig cfg;
  cfg.n_mfcc = 80;
  EXPECT_THROW(cfg.Validate(16000), Error);
  FrameConfig fft;
  fft.n_fft = 256;
  EXPECT_THROW(fft.Validate(16000), Error);
  FrameConfig floor;
  floor.log_floor = 0.0;
  EXPECT_THROW(floor.Validate(16000), Error);
}

TEST(DeltaDelta, ConstantInputGivesZeroBlock) {
  FeatureMatrix f;
  f.kind = FeatureKind::kMfcc;
  f.data = RowMatrixXd::Constant(9, 4, 3.0);
  const FeatureMatrix out = AppendDeltaDelta(f, 2);
  EXPECT_EQ(out.dims(), 8);
  EXPECT_EQ(out.data.rightCols(4).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.kind, FeatureKind::kMfccDeltaDelta);
}

TEST(DeltaDelta, SingleFrame) {
  FeatureMatrix f;
  f.data = RowMatrixXd::Constant(1, 40, -2.0);
  const FeatureMatrix out = AppendDeltaDelta(f, 2);
  EXPECT_EQ(out.data.rightCols(40).cwiseAbs().maxCoeff(), 0.0);
  EXPECT_EQ(out.data.leftCols(40), f.data);
}

TEST(DeltaDelta, LinearRampByHand) {
  RowMatrixXd x(10, 1);
  for (int t = 0; t < 10; ++t) x(t, 0) = t;
  const RowMatrixXd d = Deltas(x, 2);
  // Interior: sum_n n((t+n)-(t-n)) / (2 sum n^2) = sum 2n^2 / sum 2n^2 = 1.
  for (int t = 2; t < 8; ++t) EXPECT_NEAR(d(t, 0), 1.0, 1e-15);
  // Edge t=0: (1*(1-0) + 2*(2-0)) / 10 = 0.5.
  EXPECT_NEAR(d(0, 0), 0.5, 1e-15);
  const RowMatrixXd dd = Deltas(d, 2);
  for (int t = 4; t < 6; ++t) EXPECT_NEAR(dd(t, 0), 0.0, 1e-15);
}

TEST(DeltaDelta, InputIsPrefixAndOptionalDeltaBlock) {
  Rng rng(4);
  FeatureMatrix f;
  f.data = RowMatrixXd::Random(12, 5);
  const FeatureMatrix two = AppendDeltaDelta(f, 2, false);
  const FeatureMatrix three = AppendDeltaDelta(f, 2, true);
  EXPECT_EQ(two.data.leftCols(5), f.data);
  EXPECT_EQ(three.data.leftCols(5), f.data);
  EXPECT_EQ(three.dims(), 15);
  EXPECT_EQ(three.data.rightCols(5), two.data.rightCols(5));
  EXPECT_EQ(three.data.middleCols(5, 5), Deltas(f.data, 2));
}

TEST(DeltaDelta, DefaultFeatureDim) {
  Rng rng(5);
  EXPECT_EQ(MfccDeltaDelta(Noise(4000, rng), FrameConfig{}).dims(), 80);
  FrameConfig cfg;
  cfg.include_delta = true;
  EXPECT_EQ(MfccDeltaDelta(Noise(4000, rng), cfg).dims(), 120);
}

FeatureMatrix RandomFeatures(Eigen::Index t, Eigen::Index f, Rng& rng) {
  FeatureMatrix m;
  m.data.resize(t, f);
  for (Eigen::Index i = 0; i < m.data.size(); ++i) m.data.data()[i] = rng.Uniform(1.0, 2.0);
  return m;
}

TEST(SpecAugment, NoMasksIsIdentity) {
  Rng rng(6);
  const FeatureMatrix f = RandomFeatures(30, 80, rng);
  MaskConfig cfg;
  cfg.n_time_masks = 0;
  cfg.n_freq_masks = 0;
  EXPECT_EQ(SpecAugment(f, cfg, rng).data, f.data);
}

TEST(SpecAugment, FrequencyWidthClamped) {
  Rng rng(7);
  MaskConfig cfg;
  cfg.n_time_masks = 0;
  for (int f : {80, 40}) {
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<MaskRect> rects;
      SpecAugment(RandomFeatures(10, f, rng), cfg, rng, &rects);
      ASSERT_EQ(rects.size(), 1u);
      EXPECT_LE(rects[0].width, std::min(50, f));
      EXPECT_LE(rects[0].start + rects[0].width, f);
    }
  }
}

TEST(SpecAugment, DeterministicForSeed) {
  Rng data(8);
  const FeatureMatrix f = RandomFeatures(50, 80, data);
  Rng a(42), b(42);
  EXPECT_EQ(SpecAugment(f, MaskConfig{}, a).data, SpecAugment(f, MaskConfig{}, b).data);
}

TEST(SpecAugment, OnlyMaskRectanglesChange) {
  Rng rng(9);
  MaskConfig cfg;
  cfg.n_time_masks = 2;
  cfg.n_freq_masks = 2;
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureMatrix f = RandomFeatures(1 + static_cast<Eigen::Index>(rng.Below(60)), 80, rng);
    std::vector<MaskRect> rects;
    const FeatureMatrix out = SpecAugment(f, cfg, rng, &rects);
    Eigen::Index masked = 0;
    for (Eigen::Index t = 0; t < f.frames(); ++t) {
      for (Eigen::Index k = 0; k < f.dims(); ++k) {
        bool inside = false;
        for (const auto& r : rects) {
          const Eigen::Index pos = r.time ? t : k;
          inside = inside || (pos >= r.start && pos < r.start + r.width);
        }
        if (inside) {
          EXPECT_EQ(out.data(t, k), 0.0);
          ++masked;
        } else {
          EXPECT_EQ(out.data(t, k), f.data(t, k));
        }
      }
    }
    EXPECT_LE(masked, 2 * 20 * f.dims() + 2 * 50 * f.frames());
  }
}

TEST(Standardizer, ZeroMeanUnitVariance) {
  Rng rng(10);
  FeatureMatrix a = RandomFeatures(40, 6, rng), b = RandomFeatures(25, 6, rng);
  b.data *= 3.0;
  const Standardizer s = Standardizer::Fit({&a, &b});
  RowMatrixXd all(65, 6);
  all << s.Apply(a).data, s.Apply(b).data;
  EXPECT_LT(all.colwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  const Eigen::RowVectorXd var = all.array().square().colwise().mean();
  EXPECT_LT((var.array() - 1.0).abs().maxCoeff(), 1e-12);
}

TEST(SpectrogramImage, ShapeAndBlackForZero) {
  TempDir dir("img");
  FeatureMatrix spec;
  spec.kind = FeatureKind::kSpectrogram;
  spec.data = RowMatrixXd::Zero(12, 257);
  ExportSpectrogramImage(spec, dir / "z.pgm", dir / "z.svg");
  const std::string pgm = testing::ReadAll(dir / "z.pgm");
  const std::string header = "P5\n12 257\n255\n";
  ASSERT_EQ(pgm.substr(0, header.size()), header);
  EXPECT_EQ(pgm.size(), header.size() + 12 * 257);
  for (std::size_t i = header.size(); i < pgm.size(); ++i) EXPECT_EQ(pgm[i], '\0');
  EXPECT_NE(testing::ReadAll(dir / "z.svg").find("<svg"), std::string::npos);
}

TEST(SpectrogramImage, LowPassEnergyAtBottom) {
  // Sum of sines below 1 kHz (the bottom eighth of 0..8 kHz).
  AudioClip c;
  for (int i = 0; i < 8000; ++i) {
    double v = 0.0;
    for (double f : {150.0, 320.0, 610.0, 870.0}) v += std::sin(2.0 * M_PI * f * i / 16000.0 + f);
    c.samples.push_back(0.2 * v);
  }
  const auto px = SpectrogramPixels(PowerSpectrogram(c, FrameConfig{}));
  double bottom = 0.0, total = 0.0;
  for (std::size_t y = 0; y < px.size(); ++y) {
    double row = 0.0;
    for (unsigned char v : px[y]) row += static_cast<double>(v) * v;
    total += row;
    if (y >= px.size() * 3 / 4) bottom += row;
  }
  EXPECT_GT(bottom / total, 0.8);
}

TEST(SpectrogramImage, RejectsOtherKinds) {
  TempDir dir("img");
  FeatureMatrix f;
  f.data = RowMatrixXd::Zero(2, 2);
  EXPECT_THROW(ExportSpectrogramImage(f, dir / "x.pgm"), Error);
  FeatureMatrix spec;
  spec.kind = FeatureKind::kSpectrogram;
  spec.data = RowMatrixXd::Zero(2, 2);
  EXPECT_THROW(ExportSpectrogramImage(spec, dir / "missing/x.pgm"), Error);
}

TEST(FeatureCache, RoundTripAndErrors) {
  TempDir dir("cache");
  Rng rng(11);
  FeatureMatrix f = RandomFeatures(7, 80, rng);
  f.kind = FeatureKind::kSsl;
  f.frame_hop_ms = 5.0;
  WriteFeatureCache(dir / "f.bin", f);
  const FeatureMatrix back = ReadFeatureCache(dir / "f.bin");
  EXPECT_EQ(back.kind, FeatureKind::kSsl);
  EXPECT_EQ(back.frame_hop_ms, 5.0);
  EXPECT_EQ(back.data, f.data.cast<float>().cast<double>());

  std::string bytes = testing::ReadAll(dir / "f.bin");
  bytes[4] = 9;
  testing::WriteAll(dir / "v.bin", bytes);
  try {
    ReadFeatureCache(dir / "v.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVersionMismatch);
  }
  testing::WriteAll(dir / "t.bin", testing::ReadAll(dir / "f.bin").substr(0, 100));
  try {
    ReadFeatureCache(dir / "t.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kCorruptHeader);
  }
}

}  // namespace
}  // namespace respira
