// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <thread>

#include "respira/eval.hpp"
#include "respira/nn/adam.hpp"
#include "respira/nn/loss.hpp"

namespace respira {
namespace {

constexpr std::uint64_t kInitStream = 0x1a1;
constexpr std::uint64_t kTrainStream = 0x7a1;

void FillUniform(nn::Matrix<float>& m, double bound, Rng& rng) {
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(rng.Uniform(-bound, bound));
}

void AddShapes(nn::ParamSet<float>& ps, const ModelSignature& sig) {
  const int g = 4 * sig.hidden;
  for (int l = 0; l < sig.layers; ++l) {
    const int in = l == 0 ? sig.input_dim : 2 * sig.hidden;
    for (const char* dir : {"fwd", "bwd"}) {
      const std::string p = "bilstm." + std::to_string(l) + "." + dir + ".";
      ps.Add(p + "W_x", in, g);
      ps.Add(p + "W_h", sig.hidden, g);
      ps.Add(p + "b", 1, g);
    }
  }
  ps.Add("ffn.0.W", 2 * sig.hidden, sig.ffn_dim);
  ps.Add("ffn.0.b", 1, sig.ffn_dim);
  ps.Add("ffn.1.W", sig.ffn_dim, 1);
  ps.Add("ffn.1.b", 1, 1);
  ps.Add("feat.mean", 1, sig.input_dim, false);
  ps.Add("feat.scale", 1, sig.input_dim, false).value.setOnes();
}

std::string FormatDouble(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

int MetaInt(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw Error(ErrorCode::kCorruptCheckpoint, "missing signature field " + key);
  try {
    return std::stoi(it->second);
  } catch (const std::exception&) {
    throw Error(ErrorCode::kCorruptCheckpoint, "bad signature field " + key);
  }
}

void RequireMatchingTensors(const ModelParams& a, const ModelParams& b) {
  if (!(a.signature == b.signature) || a.params.size() != b.params.size()) {
    throw Error(ErrorCode::kSignatureMismatch, "model signatures differ");
  }
  for (const auto& [name, p] : a.params) {
    if (!b.params.contains(name)) throw Error(ErrorCode::kSignatureMismatch, "tensor " + name + " missing");
    const auto& q = b.params.at(name);
    if (q.value.rows() != p.value.rows() || q.value.cols() != p.value.cols()) {
      throw Error(ErrorCode::kSignatureMismatch, "tensor " + name + " has different shapes");
    }
  }
}

void FitStandardizer(ModelParams& model, const LabeledFeatures& train, bool enabled) {
  auto& mean = model.params.at("feat.mean").value;
  auto& scale = model.params.at("feat.scale").value;
  if (!enabled) {
    mean.setZero();
    scale.setOnes();
    return;
  }
  std::vector<const FeatureMatrix*> ptrs;
  for (const auto& f : train.feats) ptrs.push_back(&f);
  const Standardizer s = Standardizer::Fit(ptrs);
  mean = s.mean.cast<float>();
  scale = s.scale.cast<float>();
}

// Mean eval-mode BCE and the probabilities it was computed from.
double EvalLoss(const ModelParams& model, const LabeledFeatures& data, int batch_size, std::vector<double>* probs) {
  *probs = PredictProbabilities(model, data.feats, batch_size);
  double total = 0.0;
  for (std::size_t i = 0; i < probs->size(); ++i) total += nn::BceLoss((*probs)[i], data.labels[i]);
  return total / static_cast<double>(probs->size());
}

}  // namespace

const char* ToString(Pooling pooling) { return pooling == Pooling::kMean ? "mean" : "last"; }

Pooling ParsePooling(const std::string& text) {
  if (text == "mean") return Pooling::kMean;
  if (text == "last") return Pooling::kLast;
  throw Error(ErrorCode::kInvalidConfig, "pooling must be mean or last, got " + text);
}

void ModelSignature::Validate() const {
  if (input_dim < 1 || layers < 1 || hidden < 1 || ffn_dim < 1) {
    throw Error(ErrorCode::kInvalidConfig, "model dimensions must be positive");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(ErrorCode::kInvalidConfig, "dropout must be in [0, 1)");
}

std::map<std::string, std::string> ModelSignature::ToMeta() const {
  return {{"input_dim", std::to_string(input_dim)},
          {"layers", std::to_string(layers)},
          {"hidden", std::to_string(hidden)},
          {"ffn_dim", std::to_string(ffn_dim)},
          {"dropout", FormatDouble(dropout)},
          {"pooling", ToString(pooling)}};
}

ModelSignature ModelSignature::FromMeta(const std::map<std::string, std::string>& meta) {
  ModelSignature sig;
  sig.input_dim = MetaInt(meta, "input_dim");
  sig.layers = MetaInt(meta, "layers");
  sig.hidden = MetaInt(meta, "hidden");
  sig.ffn_dim = MetaInt(meta, "ffn_dim");
  auto it = meta.find("dropout");
  if (it == meta.end()) throw Error(ErrorCode::kCorruptCheckpoint, "missing signature field dropout");
  sig.dropout = std::strtod(it->second.c_str(), nullptr);
  it = meta.find("pooling");
  if (it == meta.end()) throw Error(ErrorCode::kCorruptCheckpoint, "missing signature field pooling");
  sig.pooling = ParsePooling(it->second);
  sig.Validate();
  return sig;
}

ModelParams InitModel(const ModelSignature& sig, std::uint64_t seed) {
  sig.Validate();
  ModelParams m;
  m.signature = sig;
  AddShapes(m.params, sig);
  Rng rng(MixSeed(seed, kInitStream));
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(sig.hidden));
  for (auto& [name, p] : m.params) {
    if (!p.trainable) continue;
    if (name.rfind("bilstm.", 0) == 0) {
      FillUniform(p.value, lstm_bound, rng);
    } else {
      const Eigen::Index fan_in = name == "ffn.0.W" || name == "ffn.0.b" ? 2 * sig.hidden : sig.ffn_dim;
      FillUniform(p.value, 1.0 / std::sqrt(static_cast<double>(fan_in)), rng);
    }
  }
  return m;
}

ModelParams ZeroModel(const ModelSignature& sig) {
  sig.Validate();
  ModelParams m;
  m.signature = sig;
  AddShapes(m.params, sig);
  return m;
}

void TrainConfig::Validate() const {
  if (epochs < 0) throw Error(ErrorCode::kInvalidConfig, "epochs must be >= 0");
  if (batch_size < 1) throw Error(ErrorCode::kInvalidConfig, "batch_size must be >= 1");
  if (!(lr > 0.0)) throw Error(ErrorCode::kInvalidConfig, "lr must be positive");
  if (!(pos_weight > 0.0)) throw Error(ErrorCode::kInvalidConfig, "pos_weight must be positive");
  if (mask.time_mask_len < 0 || mask.freq_mask_len < 0 || mask.n_time_masks < 0 || mask.n_freq_masks < 0) {
    throw Error(ErrorCode::kInvalidConfig, "mask settings must be >= 0");
  }
}

void WriteTrainLog(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  out << "epoch,train_loss,val_auc\n";
  char buf[128];
  for (const auto& e : log) {
    if (std::isnan(e.val_auc)) {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,", e.epoch, e.train_loss);
    } else {
      std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f", e.epoch, e.train_loss, e.val_auc);
    }
    out << buf << '\n';
  }
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

std::vector<double> PredictProbabilities(const ModelParams& model, const std::vector<FeatureMatrix>& feats,
                                         int batch_size) {
  // Forward only reads the parameters; the copy keeps the API const.
  nn::ParamSet<float> ps = model.params;
  Rng unused(0);
  std::vector<double> out;
  out.reserve(feats.size());
  // Sorting by length keeps padding small; results go back in input order.
  std::vector<std::size_t> order(feats.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return feats[a].frames() < feats[b].frames(); });
  std::vector<double> probs(feats.size());
  for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
    std::vector<nn::Matrix<float>> seqs;
    for (std::size_t i = start; i < end; ++i) seqs.push_back(detail::Standardize(ps, feats[order[i]].data));
    nn::Tape<float> tape;
    const auto logits = ModelLogits(tape, ps, model.signature, seqs, false, unused);
    for (std::size_t i = start; i < end; ++i) {
      const double z = static_cast<double>(logits.value()(static_cast<Eigen::Index>(i - start), 0));
      probs[order[i]] = 1.0 / (1.0 + std::exp(-z));
    }
  }
  return probs;
}

double ModelForward(const ModelParams& model, const FeatureMatrix& feat) {
  return PredictProbabilities(model, {feat}, 1).front();
}

ScoreSet PredictScores(const ModelParams& model, const LabeledFeatures& data) {
  const std::vector<double> probs = PredictProbabilities(model, data.feats);
  ScoreSet out;
  for (std::size_t i = 0; i < data.size(); ++i) out.Add(data.ids[i], probs[i]);
  return out;
}

TrainResult TrainModel(const LabeledFeatures& train, const LabeledFeatures* val, const ModelSignature& sig,
                       const ModelParams* init, const TrainConfig& cfg) {
  cfg.Validate();
  TrainResult res;
  res.model = init ? *init : InitModel(sig, cfg.seed);
  if (init && !(init->signature == sig)) throw Error(ErrorCode::kSignatureMismatch, "init signature differs");
  if (cfg.epochs == 0) return res;

  const std::size_t pos = train.CountPositive();
  if (train.size() == 0 || pos == 0 || pos == train.size()) {
    throw Error(ErrorCode::kDegenerateDataset, "training set needs both classes (" + std::to_string(pos) + " of " +
                                                   std::to_string(train.size()) + " positive)");
  }
  for (const auto& f : train.feats) {
    if (f.dims() != sig.input_dim) {
      throw Error(ErrorCode::kShapeMismatch, "feature dim " + std::to_string(f.dims()) + ", model expects " +
                                                 std::to_string(sig.input_dim));
    }
  }
  FitStandardizer(res.model, train, cfg.standardize);

  nn::ParamSet<float>& ps = res.model.params;
  nn::AdamState<float> adam;
  adam.lr = cfg.lr;
  Rng rng(MixSeed(cfg.seed, kTrainStream));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const bool val_usable = val && val->size() > 0;
  const bool val_two_class = val_usable && val->CountPositive() > 0 && val->CountPositive() < val->size();

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    rng.Shuffle(order.begin(), order.end());
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      std::vector<nn::Matrix<float>> seqs;
      std::vector<double> labels;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t idx = order[i];
        FeatureMatrix f;
        f.data = detail::Standardize(ps, train.feats[idx].data).cast<double>();
        if (cfg.spec_augment) f = SpecAugment(f, cfg.mask, rng);
        seqs.push_back(f.data.cast<float>());
        labels.push_back(train.labels[idx]);
      }
      nn::Tape<float> tape;
      const auto logits = ModelLogits(tape, ps, sig, seqs, true, rng);
      const auto loss = nn::BceWithLogits(logits, labels, cfg.pos_weight);
      ps.ZeroGrad();
      tape.Backward(loss);
      nn::AdamStep(ps, adam);
      loss_sum += static_cast<double>(loss.value()(0, 0)) * static_cast<double>(end - start);
    }
    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train.size());
    entry.val_auc = std::numeric_limits<double>::quiet_NaN();
    entry.val_loss = std::numeric_limits<double>::quiet_NaN();
    if (val_usable) {
      std::vector<double> probs;
      entry.val_loss = EvalLoss(res.model, *val, cfg.batch_size, &probs);
      if (val_two_class) entry.val_auc = RocAuc(probs, val->labels);
    }
    res.log.push_back(entry);
  }
  return res;
}

TrainResult Finetune(const ModelParams& init, const LabeledFeatures& train, const LabeledFeatures* val,
                     const TrainConfig& cfg) {
  return TrainModel(train, val, init.signature, &init, cfg);
}

ModelParams AverageParams(const std::vector<ModelParams>& models) {
  if (models.empty()) throw Error(ErrorCode::kInvalidConfig, "nothing to average");
  for (std::size_t i = 1; i < models.size(); ++i) RequireMatchingTensors(models[0], models[i]);
  ModelParams out = models[0];
  std::vector<double> vals(models.size());
  for (auto& [name, p] : out.params) {
    for (Eigen::Index j = 0; j < p.value.size(); ++j) {
      for (std::size_t m = 0; m < models.size(); ++m) vals[m] = models[m].params.at(name).value.data()[j];
      // Sorted summation makes the mean independent of argument order.
      std::sort(vals.begin(), vals.end());
      double sum = 0.0;
      for (double v : vals) sum += v;
      p.value.data()[j] = static_cast<float>(sum / static_cast<double>(models.size()));
    }
    p.grad.setZero(p.value.rows(), p.value.cols());
  }
  return out;
}

PretrainResult SupervisedPretrain(const std::array<LabeledFeatures, 3>& tasks, const ModelSignature& sig,
                                  const TrainConfig& cfg, bool distinct_task_seeds, int jobs) {
  const ModelParams init = InitModel(sig, cfg.seed);
  PretrainResult res;
  std::array<std::exception_ptr, 3> errors;
  auto run = [&](std::size_t t) {
    try {
      TrainConfig task_cfg = cfg;
      if (distinct_task_seeds) task_cfg.seed = MixSeed(cfg.seed, 100 + t);
      TrainResult r = TrainModel(tasks[t], nullptr, sig, &init, task_cfg);
      res.task_models[t] = std::move(r.model);
      res.logs[t] = std::move(r.log);
    } catch (...) {
      errors[t] = std::current_exception();
    }
  };
  if (jobs <= 1) {
    for (std::size_t t = 0; t < 3; ++t) run(t);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < 3; ++t) {
      if (pool.size() >= static_cast<std::size_t>(jobs)) {
        pool.front().join();
        pool.erase(pool.begin());
      }
      pool.emplace_back(run, t);
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  res.average = AverageParams({res.task_models[0], res.task_models[1], res.task_models[2]});
  return res;
}

void SaveModel(const std::filesystem::path& path, const ModelParams& model) {
  Checkpoint ckpt;
  ckpt.tag = kClassifierTag;
  ckpt.meta = model.signature.ToMeta();
  ckpt.params = model.params;
  SaveCheckpoint(path, ckpt);
}

ModelParams LoadModel(const std::filesystem::path& path) {
  Checkpoint ckpt = LoadCheckpoint(path);
  if (ckpt.tag != kClassifierTag) {
    throw Error(ErrorCode::kSignatureMismatch, path.string() + " holds a '" + ckpt.tag + "' checkpoint");
  }
  ModelParams m;
  m.signature = ModelSignature::FromMeta(ckpt.meta);
  ModelParams expect = ZeroModel(m.signature);
  m.params = std::move(ckpt.params);
  RequireMatchingTensors(expect, m);
  return m;
}

}  // namespace respira
