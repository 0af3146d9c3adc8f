// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// BiLSTM encoder + feed-forward classifier:
//   frames -> BiLSTM x layers (dropout after each) -> pooling over valid
//   frames -> Linear(2H, ffn) -> ReLU -> Linear(ffn, 1) -> sigmoid

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "respira/checkpoint.hpp"
#include "respira/dataset.hpp"
#include "respira/features.hpp"
#include "respira/nn/lstm.hpp"
#include "respira/nn/ops.hpp"
#include "respira/scores.hpp"

namespace respira {

enum class Pooling { kMean, kLast };
const char* ToString(Pooling pooling);
Pooling ParsePooling(const std::string& text);

struct ModelSignature {
  int input_dim = 80;
  int layers = 2;
  int hidden = 128;
  int ffn_dim = 256;
  double dropout = 0.1;
  Pooling pooling = Pooling::kMean;

  void Validate() const;
  std::map<std::string, std::string> ToMeta() const;
  static ModelSignature FromMeta(const std::map<std::string, std::string>& meta);
  bool operator==(const ModelSignature&) const = default;
};

// Named tensors plus the signature that fixes their names and shapes.
// "feat.mean" and "feat.scale" hold the input standardization and are not
// trained.
struct ModelParams {
  ModelSignature signature;
  nn::ParamSet<float> params;
};

ModelParams InitModel(const ModelSignature& sig, std::uint64_t seed);
ModelParams ZeroModel(const ModelSignature& sig);

struct TrainConfig {
  int epochs = 50;
  double lr = 1e-3;
  int batch_size = 16;
  std::uint64_t seed = 0;
  bool spec_augment = true;
  MaskConfig mask;
  double pos_weight = 1.0;
  bool standardize = true;

  void Validate() const;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;   // NaN without a usable validation split
  double val_loss = 0.0;  // NaN without a validation split
};

struct TrainResult {
  ModelParams model;
  std::vector<EpochLog> log;
};

// CSV `epoch,train_loss,val_auc`.
void WriteTrainLog(const std::filesystem::path& path, const std::vector<EpochLog>& log);

// Trains from `init` (or a fresh InitModel(sig, cfg.seed) when null) with
// Adam on binary cross-entropy. Throws kDegenerateDataset when the training
// set lacks either class.
TrainResult TrainModel(const LabeledFeatures& train, const LabeledFeatures* val, const ModelSignature& sig,
                       const ModelParams* init, const TrainConfig& cfg);

// TrainModel starting from `init`; zero epochs return `init` unchanged.
TrainResult Finetune(const ModelParams& init, const LabeledFeatures& train, const LabeledFeatures* val,
                     const TrainConfig& cfg);

// Elementwise mean of every named tensor. Throws kSignatureMismatch when
// signatures, names or shapes differ.
ModelParams AverageParams(const std::vector<ModelParams>& models);

struct PretrainResult {
  ModelParams average;
  std::array<ModelParams, 3> task_models;  // breath, cough, speech
  std::array<std::vector<EpochLog>, 3> logs;
};

// Trains one model per task from a shared initialization and averages
// them. With distinct_task_seeds the three runs shuffle, augment and drop
// out with different seeds derived from cfg.seed.
PretrainResult SupervisedPretrain(const std::array<LabeledFeatures, 3>& tasks, const ModelSignature& sig,
                                  const TrainConfig& cfg, bool distinct_task_seeds = false, int jobs = 1);

// Eval-mode probabilities, one per sequence.
std::vector<double> PredictProbabilities(const ModelParams& model, const std::vector<FeatureMatrix>& feats,
                                         int batch_size = 16);
double ModelForward(const ModelParams& model, const FeatureMatrix& feat);
ScoreSet PredictScores(const ModelParams& model, const LabeledFeatures& data);

inline constexpr char kClassifierTag[] = "respira.bilstm_classifier";
void SaveModel(const std::filesystem::path& path, const ModelParams& model);
ModelParams LoadModel(const std::filesystem::path& path);

namespace detail {

template <typename T>
nn::LstmWeights<T> LstmParams(nn::Tape<T>& tape, nn::ParamSet<T>& ps, int layer, const char* dir) {
  const std::string p = "bilstm." + std::to_string(layer) + "." + dir + ".";
  return {tape.Param(ps.at(p + "W_x")), tape.Param(ps.at(p + "W_h")), tape.Param(ps.at(p + "b"))};
}

// Standardizes with feat.mean / feat.scale.
template <typename T>
nn::Matrix<T> Standardize(const nn::ParamSet<T>& ps, const RowMatrixXd& x) {
  const auto& mean = ps.at("feat.mean").value;
  const auto& scale = ps.at("feat.scale").value;
  if (x.cols() != mean.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "feature dim " + std::to_string(x.cols()) + ", model expects " +
                                               std::to_string(mean.cols()));
  }
  nn::Matrix<T> out = x.cast<T>();
  out.rowwise() -= mean.row(0);
  out.array().rowwise() *= scale.row(0).array();
  return out;
}

}  // namespace detail

// Logits (B x 1) for a batch of standardized sequences. Rng is used for
// dropout only when training.
template <typename T>
nn::Var<T> ModelLogits(nn::Tape<T>& tape, nn::ParamSet<T>& ps, const ModelSignature& sig,
                       const std::vector<nn::Matrix<T>>& seqs, bool training, Rng& rng) {
  using nn::Var;
  const auto batch = static_cast<Eigen::Index>(seqs.size());
  if (batch == 0) throw Error(ErrorCode::kShapeMismatch, "empty batch");
  std::vector<int> lengths;
  Eigen::Index steps = 0;
  for (const auto& s : seqs) {
    if (s.rows() < 1) throw Error(ErrorCode::kTooShort, "sequence without frames");
    if (s.cols() != sig.input_dim) {
      throw Error(ErrorCode::kShapeMismatch, "feature dim " + std::to_string(s.cols()) + ", model expects " +
                                                 std::to_string(sig.input_dim));
    }
    lengths.push_back(static_cast<int>(s.rows()));
    steps = std::max(steps, s.rows());
  }
  nn::Matrix<T> x = nn::Matrix<T>::Zero(steps * batch, sig.input_dim);
  for (Eigen::Index b = 0; b < batch; ++b) {
    const auto& s = seqs[static_cast<std::size_t>(b)];
    for (Eigen::Index t = 0; t < s.rows(); ++t) x.row(t * batch + b) = s.row(t);
  }

  Var<T> h = tape.Constant(std::move(x));
  for (int l = 0; l < sig.layers; ++l) {
    h = nn::BiLstmLayer(h, lengths, detail::LstmParams(tape, ps, l, "fwd"), detail::LstmParams(tape, ps, l, "bwd"));
    h = nn::Dropout(h, sig.dropout, rng, training);
  }

  Var<T> pooled;
  if (sig.pooling == Pooling::kMean) {
    nn::Matrix<T> pool = nn::Matrix<T>::Zero(batch, steps * batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const int len = lengths[static_cast<std::size_t>(b)];
      for (int t = 0; t < len; ++t) pool(b, t * batch + b) = T(1) / static_cast<T>(len);
    }
    pooled = nn::MatMul(tape.Constant(std::move(pool)), h);
  } else {
    // Forward state after the last valid frame, backward state after frame 0.
    std::vector<Eigen::Index> last, first;
    for (Eigen::Index b = 0; b < batch; ++b) {
      last.push_back((lengths[static_cast<std::size_t>(b)] - 1) * batch + b);
      first.push_back(b);
    }
    pooled = nn::ConcatCols<T>({nn::GatherRows(nn::SliceCols(h, 0, sig.hidden), last),
                                nn::GatherRows(nn::SliceCols(h, sig.hidden, sig.hidden), first)});
  }
  Var<T> z = nn::Relu(nn::AddRow(nn::MatMul(pooled, tape.Param(ps.at("ffn.0.W"))), tape.Param(ps.at("ffn.0.b"))));
  return nn::AddRow(nn::MatMul(z, tape.Param(ps.at("ffn.1.W"))), tape.Param(ps.at("ffn.1.b")));
}

}  // namespace respira
