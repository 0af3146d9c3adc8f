// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "../common/gradcheck.hpp"
#include "../common/temp_dir.hpp"
#include "respira/classifier.hpp"
#include "respira/ssl.hpp"
#include "respira/synth.hpp"

namespace respira {
namespace {

using nn::Matrix;
using nn::Tape;
using nn::Var;
using testing::MatD;
using testing::RandomMatrix;

constexpr double kTol = 1e-6;

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kUsage;
}

// Small enough for exhaustive finite differences.
SslArch Tiny() {
  SslArch a;
  a.kernels = {4, 3};
  a.strides = {2, 2};
  a.channels = 3;
  a.dim = 4;
  a.ffn_dim = 6;
  a.heads = 2;
  a.blocks = 1;
  a.pos_kernel = 3;
  a.final_dim = 3;
  a.groups = 2;
  a.entries = 3;
  a.entry_dim = 2;
  return a;
}

Eigen::Index LengthOracle(Eigen::Index n, const std::vector<int>& k, const std::vector<int>& s) {
  for (std::size_t i = 0; i < k.size(); ++i) n = static_cast<Eigen::Index>(std::floor((n - k[i]) / double(s[i]))) + 1;
  return n;
}

TEST(SslArch, PaperPresetGeometry) {
  const SslArch a = SslArch::Preset(SslPreset::kPaper);
  EXPECT_EQ(a.TotalStride(), 320);
  EXPECT_EQ(a.ReceptiveField(), 400);  // 25 ms at 16 kHz
  EXPECT_EQ(a.NumFrames(16000), LengthOracle(16000, a.kernels, a.strides));
  EXPECT_EQ(a.NumFrames(16000), 49);
  EXPECT_EQ(a.NumFrames(399), 0);
  EXPECT_EQ(a.NumFrames(400), 1);
  EXPECT_EQ(a.groups * a.entry_dim, 256);
  EXPECT_EQ(a.entries, 320);
}

TEST(SslArch, MiniPresetGeometry) {
  const SslArch a = SslArch::Preset(SslPreset::kMini);
  EXPECT_EQ(a.TotalStride(), 80);
  for (Eigen::Index n : {225, 226, 1000, 16000, 12345}) {
    EXPECT_EQ(a.NumFrames(n), LengthOracle(n, a.kernels, a.strides)) << n;
  }
  EXPECT_EQ(a.NumFrames(a.ReceptiveField()), 1);
  EXPECT_EQ(a.NumFrames(a.ReceptiveField() - 1), 0);
  EXPECT_EQ(SslArch::FromMeta(a.ToMeta()), a);
}

TEST(SslEncoder, ShapeAndZeroInput) {
  SslModel m = InitSsl(SslArch::Preset(SslPreset::kMini), 1);
  for (auto& [name, p] : m.params) {
    if (name.rfind("fe.", 0) == 0 && name.back() == 'b') p.value.setZero();
  }
  Tape<float> tape;
  const auto z = EncodeWaveform<float>(tape, m.params, m.arch, Matrix<float>::Zero(4000, 1));
  EXPECT_EQ(z.rows(), m.arch.NumFrames(4000));
  EXPECT_EQ(z.cols(), m.arch.channels);
  EXPECT_TRUE((z.value().array() == 0.0f).all());
  EXPECT_EQ(CodeOf([&] { EncodeWaveform<float>(tape, m.params, m.arch, Matrix<float>::Zero(100, 1)); }),
            ErrorCode::kTooShort);
}

TEST(SslQuantizer, ProbabilitiesNormalizedAndLowTemperatureLimit) {
  const SslArch arch = SslArch::Preset(SslPreset::kMini);
  nn::ParamSet<double> ps = InitSsl(arch, 2).params.Cast<double>();
  Rng rng(3);
  const MatD zv = RandomMatrix(12, arch.channels, rng);
  const MatD noise = GumbelNoise<double>(12, arch.groups * arch.entries, rng);
  Tape<double> tape;
  const auto z = tape.Constant(zv);
  const Quantized<double> soft = Quantize(tape, ps, arch, z, 2.0, noise, false);
  ASSERT_EQ(soft.probs.size(), 2u);
  for (const auto& p : soft.probs) {
    for (Eigen::Index t = 0; t < p.rows(); ++t) EXPECT_NEAR(p.value().row(t).sum(), 1.0, 1e-6);
  }
  EXPECT_EQ(soft.q.cols(), arch.final_dim);

  // At tau = 0.01 a top-two gap of 0.11 already leaves < 1e-3 for the rest.
  const Quantized<double> cold = Quantize(tape, ps, arch, z, 0.01, noise, false);
  const Quantized<double> frozen = Quantize(tape, ps, arch, z, 1e-6, noise, false);
  const MatD logits = (zv * ps.at("quant.W").value).rowwise() + ps.at("quant.b").value.row(0);
  int resolved = 0;
  for (int g = 0; g < arch.groups; ++g) {
    for (Eigen::Index t = 0; t < 12; ++t) {
      Eigen::RowVectorXd noisy =
          logits.row(t).segment(g * arch.entries, arch.entries) + noise.row(t).segment(g * arch.entries, arch.entries);
      Eigen::Index best;
      const double top = noisy.maxCoeff(&best);
      noisy(best) = -1e300;
      const auto gi = static_cast<std::size_t>(g);
      if (top - noisy.maxCoeff() >= 0.11) {
        EXPECT_GT(cold.probs[gi].value()(t, best), 0.999);
        ++resolved;
      }
      EXPECT_GT(frozen.probs[gi].value()(t, best), 0.999);
      EXPECT_EQ(cold.hard_index[static_cast<std::size_t>(t * arch.groups + g)], best);
    }
  }
  EXPECT_GT(resolved, 12);
}

TEST(SslQuantizer, HardModeEmitsCodebookImages) {
  const SslArch arch = SslArch::Preset(SslPreset::kMini);
  nn::ParamSet<double> ps = InitSsl(arch, 4).params.Cast<double>();
  Rng rng(5);
  Tape<double> tape;
  const Quantized<double> hard = Quantize(tape, ps, arch, tape.Constant(RandomMatrix(6, arch.channels, rng)), 1.0,
                                          GumbelNoise<double>(6, arch.groups * arch.entries, rng), true);
  const MatD& cb = ps.at("quant.codebook").value;
  for (Eigen::Index t = 0; t < 6; ++t) {
    Eigen::RowVectorXd cat(arch.groups * arch.entry_dim);
    for (int g = 0; g < arch.groups; ++g) {
      const Eigen::Index idx = hard.hard_index[static_cast<std::size_t>(t * arch.groups + g)];
      cat.segment(g * arch.entry_dim, arch.entry_dim) = cb.row(g * arch.entries + idx);
    }
    const Eigen::RowVectorXd expect = cat * ps.at("quant.out.W").value + ps.at("quant.out.b").value.row(0);
    EXPECT_LT((hard.q.value().row(t) - expect).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(SslTau, Schedule) {
  const SslConfig cfg;
  EXPECT_EQ(AnnealTau(0, cfg), 2.0);
  EXPECT_EQ(AnnealTau(1'000'000'000, cfg), 0.5);
  EXPECT_NEAR(AnnealTau(138629, cfg), std::exp(std::log(2.0) + 138629 * std::log(0.999995)), 1e-12);
  EXPECT_NEAR(AnnealTau(138629, cfg), 1.0, 1e-5);
  EXPECT_EQ(AnnealTau(200, cfg), 2.0 * std::pow(0.999995, 200));
  double prev = AnnealTau(0, cfg);
  for (std::int64_t it = 1; it < 2'000'000; it += 997) {
    const double tau = AnnealTau(it, cfg);
    EXPECT_LE(tau, prev);
    EXPECT_GE(tau, 0.5);
    prev = tau;
  }
}

TEST(SslMask, EdgeCasesAndDeterminism) {
  Rng rng(6);
  EXPECT_TRUE(MaskTimeSteps(50, 0.0, 3, rng).empty());
  EXPECT_EQ(MaskTimeSteps(7, 1.0, 7, rng).size(), 7u);
  Rng a(7), b(7);
  EXPECT_EQ(MaskTimeSteps(100, 0.15, 3, a), MaskTimeSteps(100, 0.15, 3, b));
  EXPECT_EQ(CodeOf([&] { MaskTimeSteps(2, 0.5, 3, rng); }), ErrorCode::kTooShort);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = MaskTimeSteps(40, 0.05, 4, rng);
    ASSERT_FALSE(m.empty());
    EXPECT_TRUE(std::is_sorted(m.begin(), m.end()));
    EXPECT_EQ(std::set<Eigen::Index>(m.begin(), m.end()).size(), m.size());
    EXPECT_GE(m.size(), 4u);
    EXPECT_GE(m.front(), 0);
    EXPECT_LT(m.back(), 40);
  }
}

TEST(SslMask, DistractorsComeFromOtherMaskedSteps) {
  Rng rng(8);
  const std::vector<Eigen::Index> masked = {1, 4, 5, 9, 12, 13};
  const auto d = SampleDistractors(masked, 3, rng);
  ASSERT_EQ(d.size(), masked.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    ASSERT_EQ(d[i].size(), 3u);
    EXPECT_EQ(std::set<Eigen::Index>(d[i].begin(), d[i].end()).size(), 3u);
    for (Eigen::Index x : d[i]) {
      EXPECT_NE(x, masked[i]);
      EXPECT_NE(std::find(masked.begin(), masked.end(), x), masked.end());
    }
  }
  for (const auto& row : SampleDistractors(masked, 100, rng)) EXPECT_EQ(row.size(), 5u);
}

double Contrastive(const MatD& c, const MatD& q, const std::vector<Eigen::Index>& masked, int k, double kappa) {
  Rng rng(9);
  Tape<double> tape;
  return ContrastiveLoss(tape.Constant(c), tape.Constant(q), masked, SampleDistractors(masked, k, rng), kappa)
      .value()(0, 0);
}

TEST(SslLoss, ContrastiveClosedForms) {
  std::vector<Eigen::Index> all(101);
  std::iota(all.begin(), all.end(), 0);
  // Orthonormal targets with c = q: one similarity of 1, K of 0.
  const MatD eye = MatD::Identity(101, 101);
  EXPECT_NEAR(Contrastive(eye, eye, all, 100, 0.1), std::log(1.0 + 100.0 * std::exp(-10.0)), 1e-9);
  // Identical targets: every similarity equal.
  Rng rng(10);
  const MatD same = RandomMatrix(1, 8, rng).replicate(101, 1);
  EXPECT_NEAR(Contrastive(RandomMatrix(101, 8, rng), same, all, 100, 0.1), std::log(101.0), 1e-9);
  EXPECT_EQ(Contrastive(RandomMatrix(101, 8, rng), RandomMatrix(101, 8, rng), all, 0, 0.1), 0.0);
  EXPECT_EQ(CodeOf([&] { Contrastive(eye, eye, {}, 10, 0.1); }), ErrorCode::kNoMaskedFrames);
  for (int trial = 0; trial < 20; ++trial) {
    EXPECT_GE(Contrastive(RandomMatrix(30, 5, rng), RandomMatrix(30, 5, rng), {2, 3, 7, 8, 20, 29}, 4, 0.1), 0.0);
  }
}

double Diversity(const MatD& p) {
  Tape<double> tape;
  return DiversityLoss(tape.Constant(p)).value()(0, 0);
}

TEST(SslLoss, DiversityClosedForms) {
  EXPECT_NEAR(Diversity(MatD::Constant(2, 320, 1.0 / 320)), -std::log(320.0) / 320.0, 1e-12);
  MatD onehot = MatD::Zero(2, 320);
  onehot(0, 5) = 1.0;
  onehot(1, 100) = 1.0;
  EXPECT_EQ(Diversity(onehot), 0.0);
  EXPECT_NEAR(Diversity(MatD::Constant(1, 2, 0.5)), -std::log(2.0) / 2.0, 1e-15);
  EXPECT_EQ(CodeOf([] { Diversity(MatD::Constant(1, 4, 0.3)); }), ErrorCode::kNotNormalized);
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    MatD p = RandomMatrix(2, 16, rng).array().exp();
    p = (p.array().colwise() / p.rowwise().sum().array()).matrix();
    const double ld = Diversity(p);
    EXPECT_GE(ld, -std::log(16.0) / 16.0 - 1e-15);
    EXPECT_LE(ld, 0.0);
  }
}

TEST(SslLoss, TotalArithmetic) {
  EXPECT_NEAR(TotalLoss(1.0, -0.018, 0.002, 0.1, 10.0), 1.0182, 1e-12);
  EXPECT_EQ(TotalLoss(0.7, -0.3, 5.0, 0.0, 0.0), 0.7);
  EXPECT_EQ(CodeOf([] { TotalLoss(std::nan(""), 0.0, 0.0, 0.1, 10.0); }), ErrorCode::kNonFinite);
}

TEST(SslGrad, LossFunctions) {
  Rng rng(12);
  const std::vector<Eigen::Index> masked = {0, 2, 3, 5};
  Rng drng(1);
  const auto distractors = SampleDistractors(masked, 2, drng);
  auto contrastive = testing::GradCheck(
      [&](Tape<double>&, const std::vector<Var<double>>& v) {
        return ContrastiveLoss(v[0], v[1], masked, distractors, 0.1);
      },
      {RandomMatrix(6, 4, rng), RandomMatrix(6, 4, rng)}, 1);
  EXPECT_LT(contrastive.max_rel_error, kTol);

  auto diversity = testing::GradCheck(
      [&](Tape<double>&, const std::vector<Var<double>>& v) {
        return DiversityLoss(nn::ConcatRows<double>({nn::MeanRows(nn::SoftmaxRows(v[0])),
                                                     nn::MeanRows(nn::SoftmaxRows(v[1]))}));
      },
      {RandomMatrix(5, 4, rng), RandomMatrix(5, 4, rng)}, 2);
  EXPECT_LT(diversity.max_rel_error, kTol);

  auto total = testing::GradCheck(
      [&](Tape<double>&, const std::vector<Var<double>>& v) { return TotalLoss(v[0], v[1], v[2], 0.1, 10.0); },
      {RandomMatrix(1, 1, rng), RandomMatrix(1, 1, rng), RandomMatrix(1, 1, rng)}, 3);
  EXPECT_LT(total.max_rel_error, kTol);
}

TEST(SslGrad, SoftQuantizerPathWithFixedNoise) {
  const SslArch arch = Tiny();
  nn::ParamSet<double> ps = InitSsl(arch, 13).params.Cast<double>();
  Rng rng(14);
  const MatD noise = GumbelNoise<double>(5, arch.groups * arch.entries, rng);
  const auto res = testing::GradCheck(
      [&](Tape<double>& tape, const std::vector<Var<double>>& v) {
        return Quantize(tape, ps, arch, v[0], 0.7, noise, false).q;
      },
      {RandomMatrix(5, arch.channels, rng)}, 4);
  EXPECT_LT(res.max_rel_error, kTol);
  nn::ParamSet<double> only_quant;
  for (const auto& [name, p] : ps) {
    if (name.rfind("quant.", 0) == 0) only_quant.Add(name, p.value.rows(), p.value.cols()).value = p.value;
  }
  const MatD z = RandomMatrix(5, arch.channels, rng);
  const MatD proj = RandomMatrix(5, arch.final_dim, rng);
  const auto pres = testing::ParamGradCheck(only_quant, [&](Tape<double>& tape) {
    const auto q = Quantize(tape, only_quant, arch, tape.Constant(z), 0.7, noise, false).q;
    return nn::Sum(nn::Mul(q, tape.Constant(proj)));
  });
  EXPECT_LT(pres.max_rel_error, kTol);
}

TEST(SslGrad, FullBatchLossAllParameters) {
  SslConfig cfg;
  cfg.arch = Tiny();
  cfg.hard = false;
  cfg.distractors = 3;
  cfg.mask_prob = 0.3;
  cfg.mask_span = 2;
  cfg.crop_samples = 64;
  nn::ParamSet<double> ps = InitSsl(cfg.arch, 15).params.Cast<double>();
  Rng rng(16);
  const std::vector<Matrix<double>> wavs = {RandomMatrix(40, 1, rng), RandomMatrix(33, 1, rng)};
  const auto res = testing::ParamGradCheck(ps, [&](Tape<double>& tape) {
    Rng fixed(17);
    return SslBatchLoss(tape, ps, cfg, wavs, 1.3, fixed, nullptr);
  });
  EXPECT_GT(res.checked, 250u);
  EXPECT_LT(res.max_rel_error, kTol);
}

std::vector<AudioClip> SynthClips(int n, std::uint64_t seed) {
  SynthConfig sc;
  std::vector<AudioClip> clips;
  for (int i = 0; i < n; ++i) {
    clips.push_back(SynthesizeClip(i % 2 ? Label::kNegative : Label::kPositive, static_cast<Task>(i % 3), sc,
                                   MixSeed(seed, static_cast<std::uint64_t>(i))));
  }
  return clips;
}

SslConfig QuickSsl(int steps) {
  SslConfig cfg;
  cfg.max_steps = steps;
  cfg.batch_size = 2;
  cfg.crop_samples = 4000;
  cfg.seed = 3;
  return cfg;
}

TEST(SslTrain, DeterministicAndLogged) {
  const auto clips = SynthClips(4, 1);
  const SslTrainResult a = SslPretrain(clips, QuickSsl(3));
  const SslTrainResult b = SslPretrain(clips, QuickSsl(3));
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_EQ(a.model.iterations, 3);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(a.log[i].loss.total, b.log[i].loss.total);
    EXPECT_EQ(a.log[i].tau, AnnealTau(static_cast<std::int64_t>(i), QuickSsl(3)));
    EXPECT_NEAR(a.log[i].loss.total,
                TotalLoss(a.log[i].loss.contrastive, a.log[i].loss.diversity, a.log[i].loss.feature_penalty, 0.1, 10.0),
                1e-5);
  }
  for (const auto& [name, p] : a.model.params) {
    EXPECT_TRUE((p.value.array() == b.model.params.at(name).value.array()).all()) << name;
  }
  AudioClip tiny;
  tiny.samples.assign(100, 0.1);
  EXPECT_EQ(CodeOf([&] { SslPretrain({tiny}, QuickSsl(1)); }), ErrorCode::kTooShort);
}

TEST(SslExtract, FrozenFeaturesFeedClassifier) {
  const auto clips = SynthClips(4, 2);
  const SslModel m = InitSsl(SslArch::Preset(SslPreset::kMini), 5);
  const FeatureMatrix f1 = ExtractSslFeatures(m, clips[0]);
  const FeatureMatrix f2 = ExtractSslFeatures(m, clips[0]);
  EXPECT_EQ(f1.kind, FeatureKind::kSsl);
  EXPECT_EQ(f1.dims(), m.arch.dim);
  EXPECT_EQ(f1.frames(), m.arch.NumFrames(static_cast<Eigen::Index>(clips[0].samples.size())));
  EXPECT_TRUE((f1.data.array() == f2.data.array()).all());
  EXPECT_EQ(f1.frame_hop_ms, 5.0);

  ModelSignature sig;
  sig.input_dim = m.arch.dim;
  sig.hidden = 8;
  sig.ffn_dim = 8;
  const double p = ModelForward(InitModel(sig, 1), f1);
  EXPECT_GT(p, 0.0);
  EXPECT_LT(p, 1.0);

  const FeatureMatrix chunked = ExtractSslFeatures(m, clips[0], 4000);
  EXPECT_EQ(chunked.dims(), m.arch.dim);
  EXPECT_GT(chunked.frames(), 0);
}

TEST(SslCheckpoint, RoundTrip) {
  testing::TempDir dir("ssl");
  SslModel m = InitSsl(SslArch::Preset(SslPreset::kMini), 6);
  m.iterations = 77;
  SaveSslModel(dir / "ssl.ckpt", m);
  const SslModel back = LoadSslModel(dir / "ssl.ckpt");
  EXPECT_EQ(back.arch, m.arch);
  EXPECT_EQ(back.iterations, 77);
  for (const auto& [name, p] : m.params) {
    EXPECT_TRUE((p.value.array() == back.params.at(name).value.array()).all()) << name;
  }
  SaveModel(dir / "clf.ckpt", InitModel(ModelSignature{}, 1));
  EXPECT_EQ(CodeOf([&] { LoadSslModel(dir / "clf.ckpt"); }), ErrorCode::kSignatureMismatch);
  EXPECT_EQ(CodeOf([&] { LoadModel(dir / "ssl.ckpt"); }), ErrorCode::kSignatureMismatch);
}

}  // namespace
}  // namespace respira
