// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include "respira/crossval.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <thread>

#include "json.hpp"

namespace respira {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool TwoClasses(const std::vector<int>& labels) {
  bool pos = false, neg = false;
  for (int y : labels) (y ? pos : neg) = true;
  return pos && neg;
}

double MeanFinite(const std::vector<double>& v) {
  double sum = 0.0;
  int n = 0;
  for (double x : v) {
    if (std::isfinite(x)) {
      sum += x;
      ++n;
    }
  }
  return n ? sum / n : kNaN;
}

nlohmann::ordered_json Number(double v) {
  return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
}

std::string Csv(double v) {
  if (!std::isfinite(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

std::string Fingerprint(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

CvReport CrossValidate(const LabeledFeatures& data, const LabeledFeatures* test, const CvConfig& cfg,
                       const ModelParams* init) {
  if (cfg.k < 2) throw Error(ErrorCode::kInvalidConfig, "k must be >= 2");
  const FoldSpec folds = MakeFolds(data.labels, cfg.k, cfg.seed);
  CvReport report;
  report.k = cfg.k;
  report.seed = cfg.seed;
  report.folds.resize(static_cast<std::size_t>(cfg.k));
  report.models.resize(static_cast<std::size_t>(cfg.k));
  std::vector<std::vector<double>> val_probs(static_cast<std::size_t>(cfg.k));
  std::vector<std::vector<double>> test_probs(static_cast<std::size_t>(cfg.k));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.k));

  auto run = [&](int f) {
    const auto fi = static_cast<std::size_t>(f);
    try {
      const LabeledFeatures train = data.Subset(folds.Complement(f));
      const LabeledFeatures val = data.Subset(folds.Members(f));
      TrainConfig tc = cfg.train;
      tc.seed = MixSeed(cfg.seed, 0xf00 + static_cast<std::uint64_t>(f));
      TrainResult r = TrainModel(train, &val, cfg.signature, init, tc);
      FoldReport& fr = report.folds[fi];
      fr.fold = f;
      fr.n_train = train.size();
      fr.n_val = val.size();
      fr.log = std::move(r.log);
      val_probs[fi] = PredictProbabilities(r.model, val.feats);
      fr.val_auc = TwoClasses(val.labels) ? RocAuc(val_probs[fi], val.labels) : kNaN;
      fr.test_auc = kNaN;
      if (test && test->size() > 0) {
        test_probs[fi] = PredictProbabilities(r.model, test->feats);
        if (TwoClasses(test->labels)) fr.test_auc = RocAuc(test_probs[fi], test->labels);
      }
      report.models[fi] = std::move(r.model);
    } catch (...) {
      errors[fi] = std::current_exception();
    }
  };
  const int jobs = std::max(1, cfg.jobs);
  for (int start = 0; start < cfg.k; start += jobs) {
    std::vector<std::thread> pool;
    const int end = std::min(cfg.k, start + jobs);
    if (jobs == 1) {
      run(start);
    } else {
      for (int f = start; f < end; ++f) pool.emplace_back(run, f);
      for (auto& t : pool) t.join();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  std::vector<double> pooled(data.size());
  for (int f = 0; f < cfg.k; ++f) {
    const auto members = folds.Members(f);
    for (std::size_t i = 0; i < members.size(); ++i) pooled[members[i]] = val_probs[static_cast<std::size_t>(f)][i];
  }
  for (std::size_t i = 0; i < data.size(); ++i) report.val_scores.Add(data.ids[i], pooled[i]);
  report.pooled_val_auc = RocAuc(pooled, data.labels);
  std::vector<double> fold_val, fold_test;
  for (const auto& fr : report.folds) {
    fold_val.push_back(fr.val_auc);
    fold_test.push_back(fr.test_auc);
  }
  report.mean_val_auc = MeanFinite(fold_val);
  report.mean_test_auc = MeanFinite(fold_test);
  report.averaged_test_auc = kNaN;
  if (test && test->size() > 0) {
    for (std::size_t i = 0; i < test->size(); ++i) {
      double sum = 0.0;
      for (const auto& p : test_probs) sum += p[i];
      report.test_scores.Add(test->ids[i], sum / cfg.k);
    }
    if (TwoClasses(test->labels)) report.averaged_test_auc = RocAuc(report.test_scores.scores, test->labels);
  }
  return report;
}

void WriteCvReport(const std::filesystem::path& dir, const CvReport& report) {
  std::filesystem::create_directories(dir);
  nlohmann::ordered_json j;
  j["k"] = report.k;
  j["seed"] = report.seed;
  j["fingerprint"] = report.fingerprint;
  j["pooled_val_auc"] = Number(report.pooled_val_auc);
  j["mean_val_auc"] = Number(report.mean_val_auc);
  j["mean_test_auc"] = Number(report.mean_test_auc);
  j["averaged_test_auc"] = Number(report.averaged_test_auc);
  j["folds"] = nlohmann::ordered_json::array();
  for (const auto& f : report.folds) {
    nlohmann::ordered_json fj;
    fj["fold"] = f.fold;
    fj["n_train"] = f.n_train;
    fj["n_val"] = f.n_val;
    fj["val_auc"] = Number(f.val_auc);
    fj["test_auc"] = Number(f.test_auc);
    fj["epochs"] = f.log.size();
    fj["final_train_loss"] = f.log.empty() ? nlohmann::ordered_json(nullptr) : Number(f.log.back().train_loss);
    j["folds"].push_back(fj);
  }
  j["score_files"] = report.score_files;
  {
    std::ofstream out(dir / "report.json", std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "report.json").string());
    out << j.dump(2) << '\n';
  }
  std::ofstream csv(dir / "folds.csv", std::ios::trunc);
  if (!csv) throw Error(ErrorCode::kIoError, "cannot write " + (dir / "folds.csv").string());
  csv << "fold,n_train,n_val,val_auc,test_auc\n";
  for (const auto& f : report.folds) {
    csv << f.fold << ',' << f.n_train << ',' << f.n_val << ',' << Csv(f.val_auc) << ',' << Csv(f.test_auc) << '\n';
  }
}

}  // namespace respira
