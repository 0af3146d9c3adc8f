// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// Self-supervised waveform encoder in the style of wav2vec 2.0:
//   waveform -> conv feature encoder -> Z
//   Z -> LN -> proj -> mask -> +posconv -> LN -> transformer blocks -> C
//   LN(Z) -> Gumbel-softmax product quantizer -> q
// trained with contrastive, diversity and feature-penalty losses.

#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "respira/audio.hpp"
#include "respira/features.hpp"
#include "respira/nn/attention.hpp"
#include "respira/nn/ops.hpp"
#include "respira/rng.hpp"

namespace respira {

enum class SslPreset { kMini, kPaper };
const char* ToString(SslPreset preset);
SslPreset ParseSslPreset(const std::string& text);

// Everything that fixes parameter names and shapes.
struct SslArch {
  std::vector<int> kernels;
  std::vector<int> strides;
  int channels = 64;
  int dim = 64;
  int ffn_dim = 128;
  int heads = 2;
  int blocks = 2;
  int pos_kernel = 15;  // odd
  int final_dim = 32;
  int groups = 2;
  int entries = 32;
  int entry_dim = 16;

  static SslArch Preset(SslPreset preset);
  void Validate() const;
  int TotalStride() const;
  int ReceptiveField() const;
  // Latent frames for a clip of `samples`; 0 when shorter than one
  // receptive field.
  Eigen::Index NumFrames(Eigen::Index samples) const;
  std::map<std::string, std::string> ToMeta() const;
  static SslArch FromMeta(const std::map<std::string, std::string>& meta);
  bool operator==(const SslArch&) const = default;
};

struct SslConfig {
  SslArch arch = SslArch::Preset(SslPreset::kMini);
  double kappa = 0.1;
  double tau_start = 2.0;
  double tau_floor = 0.5;
  double tau_factor = 0.999995;
  double alpha = 0.1;
  double beta = 10.0;
  int distractors = 10;
  int epochs = 200;
  int max_steps = 0;  // 0: run all epochs
  double mask_prob = 0.15;
  int mask_span = 3;
  double lr = 5e-4;
  int batch_size = 4;
  int crop_samples = 16000;
  bool hard = true;
  std::uint64_t seed = 0;

  static SslConfig Preset(SslPreset preset);
  void Validate() const;
};

struct SslModel {
  SslArch arch;
  nn::ParamSet<float> params;
  std::int64_t iterations = 0;
};

SslModel InitSsl(const SslArch& arch, std::uint64_t seed);

// max(tau_floor, tau_start * tau_factor^iteration).
double AnnealTau(std::int64_t iteration, const SslConfig& cfg);

// Sorted masked frame indices. Every start in [0, T - span] is drawn with
// probability `prob` and covers `span` frames; when prob > 0 and no start
// was drawn, one is forced. Throws kTooShort when T < span.
std::vector<Eigen::Index> MaskTimeSteps(Eigen::Index frames, double prob, int span, Rng& rng);

// For each masked position, min(K, M - 1) other masked positions drawn
// without replacement.
std::vector<std::vector<Eigen::Index>> SampleDistractors(const std::vector<Eigen::Index>& masked, int k, Rng& rng);

// -log(-log u) with u uniform on (0, 1).
template <typename T>
nn::Matrix<T> GumbelNoise(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  nn::Matrix<T> n(rows, cols);
  for (Eigen::Index i = 0; i < n.size(); ++i) n.data()[i] = static_cast<T>(-std::log(-std::log(rng.UniformOpen())));
  return n;
}

// Mean contrastive loss over masked frames: cosine similarity between c_t
// and its own q_t plus the distractor rows of q, divided by kappa, scored
// with softmax cross-entropy against the true target.
template <typename T>
nn::Var<T> ContrastiveLoss(const nn::Var<T>& c, const nn::Var<T>& q, const std::vector<Eigen::Index>& masked,
                           const std::vector<std::vector<Eigen::Index>>& distractors, double kappa) {
  if (masked.empty()) throw Error(ErrorCode::kNoMaskedFrames, "contrastive loss needs at least one masked frame");
  if (c.rows() != q.rows() || c.cols() != q.cols() || distractors.size() != masked.size()) {
    throw Error(ErrorCode::kShapeMismatch, "contrastive loss: c " + nn::detail::Shape(c.rows(), c.cols()) + ", q " +
                                               nn::detail::Shape(q.rows(), q.cols()));
  }
  const std::size_t k = distractors.front().size();
  for (const auto& d : distractors) {
    if (d.size() != k) throw Error(ErrorCode::kShapeMismatch, "distractor counts differ");
  }
  nn::Tape<T>* tape = c.tape();
  const nn::Var<T> cn = nn::L2NormalizeRows(nn::GatherRows(c, masked));
  const nn::Var<T> qn = nn::L2NormalizeRows(q);
  const nn::Var<T> ones = tape->Constant(nn::Matrix<T>::Ones(c.cols(), 1));
  std::vector<nn::Var<T>> sims;
  for (std::size_t j = 0; j <= k; ++j) {
    std::vector<Eigen::Index> rows;
    for (std::size_t i = 0; i < masked.size(); ++i) rows.push_back(j == 0 ? masked[i] : distractors[i][j - 1]);
    sims.push_back(nn::MatMul(nn::Mul(cn, nn::GatherRows(qn, rows)), ones));
  }
  const nn::Var<T> logits = nn::Scale(sims.size() == 1 ? sims.front() : nn::ConcatCols(sims), T(1.0 / kappa));
  return nn::CrossEntropyRows(logits, std::vector<Eigen::Index>(masked.size(), 0));
}

// (1 / (G V)) sum_g sum_v p log p over G x V batch-averaged probabilities,
// with 0 log 0 = 0. Throws kNotNormalized when a row sum is off by > 1e-4.
template <typename T>
nn::Var<T> DiversityLoss(const nn::Var<T>& pbar) {
  const auto& p = pbar.value();
  for (Eigen::Index g = 0; g < p.rows(); ++g) {
    const double s = static_cast<double>(p.row(g).sum());
    if (std::abs(s - 1.0) > 1e-4 || (p.row(g).array() < T(0)).any()) {
      throw Error(ErrorCode::kNotNormalized, "codebook probabilities of group " + std::to_string(g) +
                                                 " sum to " + std::to_string(s));
    }
  }
  const T inv = T(1) / static_cast<T>(p.size());
  T total = T(0);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    const T v = p.data()[i];
    if (v > T(0)) total += v * std::log(v);
  }
  nn::Matrix<T> out(1, 1);
  out(0, 0) = total * inv;
  nn::Tape<T>* tape = pbar.tape();
  return tape->Record(std::move(out), {pbar}, [tape, pbar, inv](const nn::Matrix<T>& g) {
    const auto& v = pbar.value();
    nn::Matrix<T> d(v.rows(), v.cols());
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      d.data()[i] = v.data()[i] > T(0) ? (std::log(v.data()[i]) + T(1)) * inv * g(0, 0) : T(0);
    }
    tape->Accumulate(pbar, d);
  });
}

// L_m + alpha L_d + beta L_f.
template <typename T>
nn::Var<T> TotalLoss(const nn::Var<T>& lm, const nn::Var<T>& ld, const nn::Var<T>& lf, double alpha, double beta) {
  return nn::Add(lm, nn::Add(nn::Scale(ld, T(alpha)), nn::Scale(lf, T(beta))));
}
double TotalLoss(double lm, double ld, double lf, double alpha, double beta);

template <typename T>
struct Quantized {
  nn::Var<T> q;                          // T x final_dim
  std::vector<nn::Var<T>> probs;         // per group, T x V soft probabilities
  std::vector<Eigen::Index> hard_index;  // argmax entry, frame-major then group
};

// Gumbel-softmax product quantizer on T x C latents. `noise` is T x (G V).
template <typename T>
Quantized<T> Quantize(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const SslArch& arch, const nn::Var<T>& z, double tau,
                      const nn::Matrix<T>& noise, bool hard) {
  if (!(tau > 0.0)) throw Error(ErrorCode::kInvalidConfig, "tau must be positive");
  const Eigen::Index v = arch.entries;
  if (noise.rows() != z.rows() || noise.cols() != arch.groups * v) {
    throw Error(ErrorCode::kShapeMismatch, "Gumbel noise must be " + nn::detail::Shape(z.rows(), arch.groups * v));
  }
  const nn::Var<T> logits = nn::Linear(z, tape.Param(ps.at("quant.W")), tape.Param(ps.at("quant.b")));
  const nn::Var<T> codebook = tape.Param(ps.at("quant.codebook"));
  Quantized<T> out;
  out.hard_index.assign(static_cast<std::size_t>(z.rows() * arch.groups), 0);
  std::vector<nn::Var<T>> picked;
  for (int g = 0; g < arch.groups; ++g) {
    const nn::Var<T> noisy = nn::Add(nn::SliceCols(logits, g * v, v), tape.Constant(noise.middleCols(g * v, v)));
    const nn::Var<T> p = nn::SoftmaxRows(nn::Scale(noisy, T(1.0 / tau)));
    out.probs.push_back(p);
    for (Eigen::Index t = 0; t < z.rows(); ++t) {
      Eigen::Index j;
      p.value().row(t).maxCoeff(&j);
      out.hard_index[static_cast<std::size_t>(t * arch.groups + g)] = j;
    }
    const nn::Var<T> weights = hard ? nn::StraightThroughOneHot(p) : p;
    picked.push_back(nn::MatMul(weights, nn::SliceRows(codebook, g * v, v)));
  }
  const nn::Var<T> concat = picked.size() == 1 ? picked.front() : nn::ConcatCols(picked);
  out.q = nn::Linear(concat, tape.Param(ps.at("quant.out.W")), tape.Param(ps.at("quant.out.b")));
  return out;
}

// Batch-averaged probabilities, G x V, pooled over every frame of every
// quantizer output given.
template <typename T>
nn::Var<T> AverageCodebookProbs(const std::vector<const Quantized<T>*>& outs) {
  std::vector<nn::Var<T>> rows;
  const std::size_t groups = outs.front()->probs.size();
  for (std::size_t g = 0; g < groups; ++g) {
    std::vector<nn::Var<T>> parts;
    for (const auto* o : outs) parts.push_back(o->probs[g]);
    rows.push_back(nn::MeanRows(parts.size() == 1 ? parts.front() : nn::ConcatRows(parts)));
  }
  return rows.size() == 1 ? rows.front() : nn::ConcatRows(rows);
}

// Conv feature encoder: N x 1 waveform -> T x channels. Each block is a
// strided convolution, layer norm and GELU.
template <typename T>
nn::Var<T> EncodeWaveform(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const SslArch& arch, const nn::Matrix<T>& wav) {
  const Eigen::Index frames = arch.NumFrames(wav.rows());
  if (frames < 1) {
    throw Error(ErrorCode::kTooShort, std::to_string(wav.rows()) + " samples, encoder needs at least " +
                                          std::to_string(arch.ReceptiveField()));
  }
  nn::Var<T> h = tape.Constant(wav);
  for (std::size_t l = 0; l < arch.kernels.size(); ++l) {
    const std::string p = "fe." + std::to_string(l) + ".";
    h = nn::Linear(nn::Im2Col(h, arch.kernels[l], arch.strides[l]), tape.Param(ps.at(p + "W")),
                   tape.Param(ps.at(p + "b")));
    h = nn::Gelu(nn::LayerNormRows(h, tape.Param(ps.at(p + "ln_g")), tape.Param(ps.at(p + "ln_b"))));
  }
  return h;
}

// Layer-normalized latents, shared by the quantizer and the context path.
template <typename T>
nn::Var<T> NormalizeLatents(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const nn::Var<T>& z) {
  return nn::LayerNormRows(z, tape.Param(ps.at("proj.ln_g")), tape.Param(ps.at("proj.ln_b")));
}

// Transformer context network on normalized latents; masked rows are
// replaced by the learned mask embedding. Returns T x dim.
template <typename T>
nn::Var<T> ContextNetwork(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const SslArch& arch, const nn::Var<T>& zn,
                          const std::vector<Eigen::Index>& masked) {
  auto P = [&](const std::string& name) { return tape.Param(ps.at(name)); };
  nn::Var<T> x = nn::Linear(zn, P("proj.W"), P("proj.b"));
  if (!masked.empty()) x = nn::ReplaceRows(x, masked, P("mask_emb"));
  x = nn::Add(x, nn::Gelu(nn::DepthwiseConvSame(x, P("pos.W"), P("pos.b"))));
  x = nn::LayerNormRows(x, P("ctx.ln_g"), P("ctx.ln_b"));
  for (int b = 0; b < arch.blocks; ++b) {
    const std::string p = "tf." + std::to_string(b) + ".";
    nn::TransformerBlockWeights<T> w;
    w.attn = {P(p + "q.W"), P(p + "q.b"), P(p + "k.W"), P(p + "k.b"),
              P(p + "v.W"), P(p + "v.b"), P(p + "o.W"), P(p + "o.b")};
    w.ln1_g = P(p + "ln1_g");
    w.ln1_b = P(p + "ln1_b");
    w.ffn = {P(p + "ffn.1.W"), P(p + "ffn.1.b"), P(p + "ffn.2.W"), P(p + "ffn.2.b")};
    w.ln2_g = P(p + "ln2_g");
    w.ln2_b = P(p + "ln2_b");
    x = nn::TransformerBlock(x, w, arch.heads);
  }
  return x;
}

template <typename T>
nn::Var<T> FinalProjection(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const nn::Var<T>& x) {
  return nn::Linear(x, tape.Param(ps.at("final.W")), tape.Param(ps.at("final.b")));
}

struct SslLossTerms {
  double total = 0.0;
  double contrastive = 0.0;
  double diversity = 0.0;
  double feature_penalty = 0.0;
};

// One masked-prediction loss over a batch of waveforms. Masks, distractors
// and Gumbel noise are drawn from `rng`.
template <typename T>
nn::Var<T> SslBatchLoss(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const SslConfig& cfg,
                        const std::vector<nn::Matrix<T>>& wavs, double tau, Rng& rng, SslLossTerms* terms) {
  const SslArch& arch = cfg.arch;
  std::vector<Quantized<T>> quant;
  quant.reserve(wavs.size());
  std::vector<nn::Var<T>> lm_parts, lf_parts;
  Eigen::Index masked_total = 0, latent_total = 0;
  std::vector<Eigen::Index> masked_counts;
  for (const auto& wav : wavs) {
    const nn::Var<T> z = EncodeWaveform(tape, ps, arch, wav);
    lf_parts.push_back(nn::Sum(nn::Square(z)));
    latent_total += z.value().size();
    const nn::Var<T> zn = NormalizeLatents(tape, ps, z);
    const std::vector<Eigen::Index> masked = MaskTimeSteps(z.rows(), cfg.mask_prob, cfg.mask_span, rng);
    const nn::Var<T> c = FinalProjection(tape, ps, ContextNetwork(tape, ps, arch, zn, masked));
    quant.push_back(Quantize(tape, ps, arch, zn, tau, GumbelNoise<T>(z.rows(), arch.groups * arch.entries, rng),
                             cfg.hard));
    const auto distractors = SampleDistractors(masked, cfg.distractors, rng);
    // Weighted by masked count so the batch loss is a mean over masked frames.
    lm_parts.push_back(nn::Scale(ContrastiveLoss(c, quant.back().q, masked, distractors, cfg.kappa),
                                 static_cast<T>(masked.size())));
    masked_total += static_cast<Eigen::Index>(masked.size());
  }
  auto sum = [](std::vector<nn::Var<T>> parts) {
    nn::Var<T> acc = parts.front();
    for (std::size_t i = 1; i < parts.size(); ++i) acc = nn::Add(acc, parts[i]);
    return acc;
  };
  const nn::Var<T> lm = nn::Scale(sum(lm_parts), T(1) / static_cast<T>(masked_total));
  const nn::Var<T> lf = nn::Scale(sum(lf_parts), T(1) / static_cast<T>(latent_total));
  std::vector<const Quantized<T>*> ptrs;
  for (const auto& q : quant) ptrs.push_back(&q);
  const nn::Var<T> ld = DiversityLoss(AverageCodebookProbs(ptrs));
  const nn::Var<T> total = TotalLoss(lm, ld, lf, cfg.alpha, cfg.beta);
  if (terms) {
    terms->total = static_cast<double>(total.value()(0, 0));
    terms->contrastive = static_cast<double>(lm.value()(0, 0));
    terms->diversity = static_cast<double>(ld.value()(0, 0));
    terms->feature_penalty = static_cast<double>(lf.value()(0, 0));
  }
  return total;
}

struct SslStepLog {
  std::int64_t step = 0;
  double tau = 0.0;
  SslLossTerms loss;
};

struct SslTrainResult {
  SslModel model;
  std::vector<SslStepLog> log;
  std::size_t skipped_clips = 0;  // shorter than one receptive field plus a mask span
};

// Adam on the batch loss over preprocessed 16 kHz clips, tau annealed per
// step. Clips longer than crop_samples are randomly cropped each time they
// are drawn. Throws kTooShort when no clip is long enough.
SslTrainResult SslPretrain(const std::vector<AudioClip>& clips, const SslConfig& cfg,
                           const SslModel* init = nullptr);

// CSV `step,tau,total,contrastive,diversity,feature_penalty`.
void WriteSslLog(const std::filesystem::path& path, const std::vector<SslStepLog>& log);

// Frozen context-network output (T x dim), no masking. Clips longer than
// `chunk_samples` are encoded chunk by chunk and the frames concatenated.
FeatureMatrix ExtractSslFeatures(const SslModel& model, const AudioClip& clip, int chunk_samples = 160000);

inline constexpr char kSslTag[] = "respira.ssl_encoder";
void SaveSslModel(const std::filesystem::path& path, const SslModel& model);
SslModel LoadSslModel(const std::filesystem::path& path);

}  // namespace respira
