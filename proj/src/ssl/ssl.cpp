// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/ssl.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "respira/checkpoint.hpp"
#include "respira/nn/adam.hpp"

namespace respira {
namespace {

constexpr std::uint64_t kInitStream = 0x551;
constexpr std::uint64_t kTrainStream = 0x55a;

std::string JoinInts(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> SplitInts(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stoi(item));
  return out;
}

const std::string& MetaField(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error(ErrorCode::kCorruptCheckpoint, "missing ssl field " + key);
  return it->second;
}

void Fill(nn::Matrix<float>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.Uniform(-bound, bound));
}

void AddLinear(nn::ParamSet<float>& ps, const std::string& prefix, int in, int out) {
  ps.Add(prefix + "W", in, out);
  ps.Add(prefix + "b", 1, out);
}

void AddNorm(nn::ParamSet<float>& ps, const std::string& gain, const std::string& bias, int dim) {
  ps.Add(gain, 1, dim).value.setOnes();
  ps.Add(bias, 1, dim);
}

void AddShapes(nn::ParamSet<float>& ps, const SslArch& a) {
  int in = 1;
  for (std::size_t l = 0; l < a.kernels.size(); ++l) {
    const std::string p = "fe." + std::to_string(l) + ".";
    AddLinear(ps, p, a.kernels[l] * in, a.channels);
    AddNorm(ps, p + "ln_g", p + "ln_b", a.channels);
    in = a.channels;
  }
  AddNorm(ps, "proj.ln_g", "proj.ln_b", a.channels);
  AddLinear(ps, "proj.", a.channels, a.dim);
  ps.Add("mask_emb", 1, a.dim);
  ps.Add("pos.W", a.pos_kernel, a.dim);
  ps.Add("pos.b", 1, a.dim);
  AddNorm(ps, "ctx.ln_g", "ctx.ln_b", a.dim);
  for (int b = 0; b < a.blocks; ++b) {
    const std::string p = "tf." + std::to_string(b) + ".";
    for (const char* m : {"q.", "k.", "v.", "o."}) AddLinear(ps, p + m, a.dim, a.dim);
    AddNorm(ps, p + "ln1_g", p + "ln1_b", a.dim);
    AddLinear(ps, p + "ffn.1.", a.dim, a.ffn_dim);
    AddLinear(ps, p + "ffn.2.", a.ffn_dim, a.dim);
    AddNorm(ps, p + "ln2_g", p + "ln2_b", a.dim);
  }
  AddLinear(ps, "final.", a.dim, a.final_dim);
  AddLinear(ps, "quant.", a.channels, a.groups * a.entries);
  ps.Add("quant.codebook", a.groups * a.entries, a.entry_dim);
  AddLinear(ps, "quant.out.", a.groups * a.entry_dim, a.final_dim);
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

const char* ToString(SslPreset preset) { return preset == SslPreset::kMini ? "mini" : "paper"; }

SslPreset ParseSslPreset(const std::string& text) {
  if (text == "mini") return SslPreset::kMini;
  if (text == "paper") return SslPreset::kPaper;
  throw Error(ErrorCode::kInvalidConfig, "ssl preset must be mini or paper, got " + text);
}

SslArch SslArch::Preset(SslPreset preset) {
  SslArch a;
  if (preset == SslPreset::kMini) {
    a.kernels = {10, 8, 4, 4};
    a.strides = {5, 4, 2, 2};
    return a;
  }
  a.kernels = {10, 3, 3, 3, 3, 2, 2};
  a.strides = {5, 2, 2, 2, 2, 2, 2};
  a.channels = 512;
  a.dim = 512;
  a.ffn_dim = 2048;
  a.heads = 8;
  a.blocks = 12;
  a.pos_kernel = 129;
  a.final_dim = 256;
  a.groups = 2;
  a.entries = 320;
  a.entry_dim = 128;
  return a;
}

void SslArch::Validate() const {
  if (kernels.empty() || kernels.size() != strides.size()) {
    throw Error(ErrorCode::kInvalidConfig, "conv kernels and strides must be non-empty and equally long");
  }
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (kernels[i] < 1 || strides[i] < 1) throw Error(ErrorCode::kInvalidConfig, "conv kernel/stride must be >= 1");
  }
  if (channels < 1 || dim < 1 || ffn_dim < 1 || blocks < 0 || final_dim < 1 || entry_dim < 1) {
    throw Error(ErrorCode::kInvalidConfig, "ssl dimensions must be positive");
  }
  if (heads < 1 || dim % heads != 0) throw Error(ErrorCode::kInvalidConfig, "dim must be divisible by heads");
  if (pos_kernel < 1 || pos_kernel % 2 == 0) throw Error(ErrorCode::kInvalidConfig, "pos_kernel must be odd");
  if (groups < 1 || entries < 1) throw Error(ErrorCode::kInvalidConfig, "G and V must be >= 1");
}

int SslArch::TotalStride() const {
  int s = 1;
  for (int v : strides) s *= v;
  return s;
}

int SslArch::ReceptiveField() const {
  int r = 1;
  for (std::size_t i = kernels.size(); i-- > 0;) r = (r - 1) * strides[i] + kernels[i];
  return r;
}

Eigen::Index SslArch::NumFrames(Eigen::Index samples) const {
  Eigen::Index n = samples;
  for (std::size_t i = 0; i < kernels.size(); ++i) {
    if (n < kernels[i]) return 0;
    n = (n - kernels[i]) / strides[i] + 1;
  }
  return n;
}

std::map<std::string, std::string> SslArch::ToMeta() const {
  return {{"kernels", JoinInts(kernels)},
          {"strides", JoinInts(strides)},
          {"channels", std::to_string(channels)},
          {"dim", std::to_string(dim)},
          {"ffn_dim", std::to_string(ffn_dim)},
          {"heads", std::to_string(heads)},
          {"blocks", std::to_string(blocks)},
          {"pos_kernel", std::to_string(pos_kernel)},
          {"final_dim", std::to_string(final_dim)},
          {"groups", std::to_string(groups)},
          {"entries", std::to_string(entries)},
          {"entry_dim", std::to_string(entry_dim)}};
}

SslArch SslArch::FromMeta(const std::map<std::string, std::string>& meta) {
  SslArch a;
  try {
    a.kernels = SplitInts(MetaField(meta, "kernels"));
    a.strides = SplitInts(MetaField(meta, "strides"));
    a.channels = std::stoi(MetaField(meta, "channels"));
    a.dim = std::stoi(MetaField(meta, "dim"));
    a.ffn_dim = std::stoi(MetaField(meta, "ffn_dim"));
    a.heads = std::stoi(MetaField(meta, "heads"));
    a.blocks = std::stoi(MetaField(meta, "blocks"));
    a.pos_kernel = std::stoi(MetaField(meta, "pos_kernel"));
    a.final_dim = std::stoi(MetaField(meta, "final_dim"));
    a.groups = std::stoi(MetaField(meta, "groups"));
    a.entries = std::stoi(MetaField(meta, "entries"));
    a.entry_dim = std::stoi(MetaField(meta, "entry_dim"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kCorruptCheckpoint, "malformed ssl architecture fields");
  }
  a.Validate();
  return a;
}

SslConfig SslConfig::Preset(SslPreset preset) {
  SslConfig c;
  c.arch = SslArch::Preset(preset);
  if (preset == SslPreset::kPaper) {
    c.distractors = 100;
    c.mask_span = 10;
  }
  return c;
}

void SslConfig::Validate() const {
  arch.Validate();
  if (!(kappa > 0.0)) throw Error(ErrorCode::kInvalidConfig, "kappa must be positive");
  if (!(tau_floor > 0.0) || tau_floor > tau_start) throw Error(ErrorCode::kInvalidConfig, "need 0 < tau_floor <= tau_start");
  if (!(tau_factor > 0.0 && tau_factor <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "tau_factor must be in (0, 1]");
  if (distractors < 0) throw Error(ErrorCode::kInvalidConfig, "distractors must be >= 0");
  if (epochs < 0 || max_steps < 0) throw Error(ErrorCode::kInvalidConfig, "epochs and max_steps must be >= 0");
  if (!(mask_prob >= 0.0 && mask_prob <= 1.0)) throw Error(ErrorCode::kInvalidConfig, "mask_prob must be in [0, 1]");
  if (mask_span < 1) throw Error(ErrorCode::kInvalidConfig, "mask_span must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidConfig, "lr must be positive");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (crop_samples < arch.ReceptiveField()) {
    throw Error(ErrorCode::kInvalidConfig, "crop_samples below the encoder receptive field");
  }
}

SslModel InitSsl(const SslArch& arch, std::uint64_t seed) {
  arch.Validate();
  SslModel m;
  m.arch = arch;
  AddShapes(m.params, arch);
  Rng rng(MixSeed(seed, kInitStream));
  for (auto& [name, p] : m.params) {
    if (EndsWith(name, "_g") || EndsWith(name, "_b")) continue;
    if (name == "quant.codebook") {
      for (Eigen::Index i = 0; i < p.value.size(); ++i) p.value.data()[i] = static_cast<float>(rng.Normal());
    } else if (name == "mask_emb") {
      Fill(p.value, 1.0, rng);
    } else if (name == "pos.W" || name == "pos.b") {
      Fill(p.value, 1.0 / std::sqrt(static_cast<double>(arch.pos_kernel)), rng);
    } else if (EndsWith(name, ".W")) {
      Fill(p.value, 1.0 / std::sqrt(static_cast<double>(p.value.rows())), rng);
    } else {
      // Bias of the linear map stored just before it in name order.
      const std::string w = name.substr(0, name.size() - 1) + "W";
      Fill(p.value, 1.0 / std::sqrt(static_cast<double>(m.params.at(w).value.rows())), rng);
    }
  }
  return m;
}

double AnnealTau(std::int64_t iteration, const SslConfig& cfg) {
  if (iteration < 0) throw Error(ErrorCode::kInvalidConfig, "iteration must be >= 0");
  return std::max(cfg.tau_floor, cfg.tau_start * std::pow(cfg.tau_factor, static_cast<double>(iteration)));
}

std::vector<Eigen::Index> MaskTimeSteps(Eigen::Index frames, double prob, int span, Rng& rng) {
  if (span < 1) throw Error(ErrorCode::kInvalidConfig, "mask span must be >= 1");
  if (frames < span) {
    throw Error(ErrorCode::kTooShort, std::to_string(frames) + " frames, mask span " + std::to_string(span));
  }
  std::vector<char> hit(static_cast<std::size_t>(frames), 0);
  const Eigen::Index starts = frames - span + 1;
  bool any = false;
  for (Eigen::Index s = 0; s < starts; ++s) {
    if (rng.Uniform() < prob) {
      std::fill_n(hit.begin() + s, span, 1);
      any = true;
    }
  }
  if (!any && prob > 0.0) std::fill_n(hit.begin() + static_cast<Eigen::Index>(rng.Below(starts)), span, 1);
  std::vector<Eigen::Index> out;
  for (Eigen::Index t = 0; t < frames; ++t) {
    if (hit[static_cast<std::size_t>(t)]) out.push_back(t);
  }
  return out;
}

std::vector<std::vector<Eigen::Index>> SampleDistractors(const std::vector<Eigen::Index>& masked, int k, Rng& rng) {
  const std::size_t m = masked.size();
  const std::size_t n = m == 0 ? 0 : std::min<std::size_t>(static_cast<std::size_t>(std::max(k, 0)), m - 1);
  std::vector<std::vector<Eigen::Index>> out(m);
  std::vector<std::size_t> pool(m);
  for (std::size_t i = 0; i < m; ++i) {
    std::iota(pool.begin(), pool.end(), 0);
    std::swap(pool[i], pool[m - 1]);
    // Partial Fisher-Yates over the m - 1 other positions.
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t r = j + static_cast<std::size_t>(rng.Below(m - 1 - j));
      std::swap(pool[j], pool[r]);
      out[i].push_back(masked[pool[j]]);
    }
  }
  return out;
}

double TotalLoss(double lm, double ld, double lf, double alpha, double beta) {
  const double total = lm + alpha * ld + beta * lf;
  if (!std::isfinite(total)) throw Error(ErrorCode::kNonFinite, "SSL loss is not finite");
  return total;
}

SslTrainResult SslPretrain(const std::vector<AudioClip>& clips, const SslConfig& cfg, const SslModel* init) {
  cfg.Validate();
  SslTrainResult res;
  res.model = init ? *init : InitSsl(cfg.arch, cfg.seed);
  if (!(res.model.arch == cfg.arch)) throw Error(ErrorCode::kSignatureMismatch, "init architecture differs");

  std::vector<nn::Matrix<float>> wavs;
  for (const auto& clip : clips) {
    if (clip.sample_rate != kTargetSampleRate) {
      throw Error(ErrorCode::kUnsupportedFormat, "SSL pre-training expects 16 kHz audio");
    }
    const auto n = static_cast<Eigen::Index>(clip.samples.size());
    if (cfg.arch.NumFrames(std::min<Eigen::Index>(n, cfg.crop_samples)) < cfg.mask_span) {
      ++res.skipped_clips;
      continue;
    }
    nn::Matrix<float> w(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) w(i, 0) = static_cast<float>(clip.samples[static_cast<std::size_t>(i)]);
    wavs.push_back(std::move(w));
  }
  if (wavs.empty()) throw Error(ErrorCode::kTooShort, "no clip is long enough for SSL pre-training");
  if (cfg.epochs == 0) return res;

  nn::ParamSet<float>& ps = res.model.params;
  nn::AdamState<float> adam;
  adam.lr = cfg.lr;
  Rng rng(MixSeed(cfg.seed, kTrainStream));
  std::vector<std::size_t> order(wavs.size());
  std::iota(order.begin(), order.end(), 0);
  std::int64_t steps = 0;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.Shuffle(order.begin(), order.end());
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      if (cfg.max_steps > 0 && steps >= cfg.max_steps) return res;
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<nn::Matrix<float>> batch;
      for (std::size_t i = start; i < end; ++i) {
        const nn::Matrix<float>& w = wavs[order[i]];
        if (w.rows() <= cfg.crop_samples) {
          batch.push_back(w);
        } else {
          const auto off = static_cast<Eigen::Index>(rng.Below(static_cast<std::uint64_t>(w.rows() - cfg.crop_samples + 1)));
          batch.push_back(w.middleRows(off, cfg.crop_samples));
        }
      }
      SslStepLog entry;
      entry.step = res.model.iterations;
      entry.tau = AnnealTau(res.model.iterations, cfg);
      nn::Tape<float> tape;
      const auto loss = SslBatchLoss(tape, ps, cfg, batch, entry.tau, rng, &entry.loss);
      ps.ZeroGrad();
      tape.Backward(loss);
      nn::AdamStep(ps, adam);
      ++res.model.iterations;
      ++steps;
      res.log.push_back(entry);
    }
  }
  return res;
}

void WriteSslLog(const std::filesystem::path& path, const std::vector<SslStepLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  out << "step,tau,total,contrastive,diversity,feature_penalty\n";
  char buf[256];
  for (const auto& e : log) {
    std::snprintf(buf, sizeof(buf), "%lld,%.9f,%.6f,%.6f,%.6f,%.6f", static_cast<long long>(e.step), e.tau,
                  e.loss.total, e.loss.contrastive, e.loss.diversity, e.loss.feature_penalty);
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

FeatureMatrix ExtractSslFeatures(const SslModel& model, const AudioClip& clip, int chunk_samples) {
  const AudioClip audio = clip.sample_rate == kTargetSampleRate ? clip : Resample(clip, kTargetSampleRate);
  const auto n = static_cast<Eigen::Index>(audio.samples.size());
  const Eigen::Index rf = model.arch.ReceptiveField();
  if (n < rf) {
    throw Error(ErrorCode::kTooShort, std::to_string(n) + " samples, encoder needs at least " + std::to_string(rf));
  }
  const Eigen::Index chunk = std::max<Eigen::Index>(chunk_samples, rf);
  // A short tail is merged into the chunk before it.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> spans;
  for (Eigen::Index s = 0; s < n; s += chunk) spans.emplace_back(s, std::min(chunk, n - s));
  if (spans.size() > 1 && spans.back().second < rf) {
    spans[spans.size() - 2].second += spans.back().second;
    spans.pop_back();
  }
  nn::ParamSet<float> ps = model.params;
  FeatureMatrix out;
  out.kind = FeatureKind::kSsl;
  out.frame_hop_ms = 1000.0 * model.arch.TotalStride() / kTargetSampleRate;
  std::vector<nn::Matrix<float>> parts;
  Eigen::Index rows = 0;
  for (const auto& [start, len] : spans) {
    nn::Matrix<float> wav(len, 1);
    for (Eigen::Index i = 0; i < len; ++i) wav(i, 0) = static_cast<float>(audio.samples[static_cast<std::size_t>(start + i)]);
    nn::Tape<float> tape;
    const auto z = EncodeWaveform(tape, ps, model.arch, wav);
    parts.push_back(ContextNetwork(tape, ps, model.arch, NormalizeLatents(tape, ps, z), {}).value());
    rows += parts.back().rows();
  }
  out.data.resize(rows, model.arch.dim);
  Eigen::Index r = 0;
  for (const auto& p : parts) {
    out.data.middleRows(r, p.rows()) = p.cast<double>();
    r += p.rows();
  }
  return out;
}

void SaveSslModel(const std::filesystem::path& path, const SslModel& model) {
  Checkpoint ckpt;
  ckpt.tag = kSslTag;
  ckpt.meta = model.arch.ToMeta();
  ckpt.meta["iterations"] = std::to_string(model.iterations);
  ckpt.params = model.params;
  SaveCheckpoint(path, ckpt);
}

SslModel LoadSslModel(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.tag != kSslTag) {
    throw Error(ErrorCode::kSignatureMismatch, path.string() + " holds a '" + ckpt.tag + "' checkpoint");
  }
  SslModel m;
  m.arch = SslArch::FromMeta(ckpt.meta);
  try {
    m.iterations = std::stoll(MetaField(ckpt.meta, "iterations"));
  } catch (const std::logic_error&) {
    throw Error(ErrorCode::kCorruptCheckpoint, "malformed iteration count");
  }
  nn::ParamSet<float> expect;
  AddShapes(expect, m.arch);
  if (expect.size() != ckpt.params.size()) throw Error(ErrorCode::kSignatureMismatch, "ssl tensor set differs");
  for (const auto& [name, p] : expect) {
    if (!ckpt.params.contains(name)) throw Error(ErrorCode::kSignatureMismatch, "tensor " + name + " missing");
    const auto& q = ckpt.params.at(name).value;
    if (q.rows() != p.value.rows() || q.cols() != p.value.cols()) {
      throw Error(ErrorCode::kSignatureMismatch, "tensor " + name + " has a different shape");
    }
  }
  m.params = std::move(ckpt.params);
  return m;
}

}  // namespace respira
