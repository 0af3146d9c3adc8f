// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>

#include "respira/error.hpp"
#include "respira/eval.hpp"
#include "respira/rng.hpp"

namespace respira {
namespace {

struct Counts {
  std::int64_t pos = 0;
  std::int64_t neg = 0;
};

// Threshold groups in descending score order.
std::vector<Counts> GroupByScore(const std::vector<double>& scores, const std::vector<int>& labels, Counts* total) {
  if (scores.size() != labels.size()) throw Error(ErrorCode::kShapeMismatch, "scores and labels differ in length");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<Counts> groups;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const double s = scores[order[i]];
    if (!std::isfinite(s)) throw Error(ErrorCode::kNonFinite, "non-finite score");
    if (i == 0 || s != scores[order[i - 1]]) groups.emplace_back();
    const int y = labels[order[i]];
    if (y != 0 && y != 1) throw Error(ErrorCode::kInvalidManifest, "labels must be 0 or 1");
    (y ? groups.back().pos : groups.back().neg)++;
    (y ? total->pos : total->neg)++;
  }
  if (total->pos == 0 || total->neg == 0) {
    throw Error(ErrorCode::kSingleClass, "AUC needs at least one positive and one negative");
  }
  return groups;
}

}  // namespace

double RocAuc(const std::vector<double>& scores, const std::vector<int>& labels) {
  Counts total;
  const auto groups = GroupByScore(scores, labels, &total);
  // Twice the trapezoid area in units of one (positive, negative) cell.
  std::int64_t twice_area = 0;
  std::int64_t tp = 0;
  for (const Counts& g : groups) {
    twice_area += g.neg * (2 * tp + g.pos);
    tp += g.pos;
  }
  return static_cast<double>(twice_area) / (2.0 * static_cast<double>(total.pos) * static_cast<double>(total.neg));
}

double RocAuc(const ScoreSet& scores, const std::map<std::string, int>& labels) {
  std::vector<int> y;
  y.reserve(scores.size());
  for (const auto& id : scores.ids) {
    auto it = labels.find(id);
    if (it == labels.end()) throw Error(ErrorCode::kIdSetMismatch, "no label for id " + id);
    y.push_back(it->second);
  }
  return RocAuc(scores.scores, y);
}

std::vector<RocPoint> RocCurve(const std::vector<double>& scores, const std::vector<int>& labels) {
  Counts total;
  const auto groups = GroupByScore(scores, labels, &total);
  std::vector<RocPoint> pts{{0.0, 0.0}};
  std::int64_t tp = 0, fp = 0;
  for (const Counts& g : groups) {
    tp += g.pos;
    fp += g.neg;
    pts.push_back({static_cast<double>(fp) / static_cast<double>(total.neg),
                   static_cast<double>(tp) / static_cast<double>(total.pos)});
  }
  return pts;
}

std::map<std::string, int> LabelMap(const DatasetManifest& manifest) {
  std::map<std::string, int> out;
  for (const auto& e : manifest.entries) out[e.id] = e.label == Label::kPositive ? 1 : 0;
  return out;
}

namespace {

void RequireSameIds(const ScoreSet& a, const ScoreSet& b, const char* what) {
  const auto ma = a.AsMap();
  const auto mb = b.AsMap();
  if (ma.size() != mb.size() ||
      !std::equal(ma.begin(), ma.end(), mb.begin(), [](const auto& x, const auto& y) { return x.first == y.first; })) {
    throw Error(ErrorCode::kIdSetMismatch, std::string(what) + ": score sets cover different ids");
  }
}

}  // namespace

ScoreSet EnsembleScores(const ScoreSet& sup, const ScoreSet& ssl, double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error(ErrorCode::kInvalidWeights, "mu must lie in [0, 1]");
  RequireSameIds(sup, ssl, "ensemble");
  const auto other = ssl.AsMap();
  ScoreSet out;
  for (std::size_t i = 0; i < sup.size(); ++i) {
    out.Add(sup.ids[i], mu * sup.scores[i] + (1.0 - mu) * other.at(sup.ids[i]));
  }
  return out;
}

void FusionWeights::Validate() const {
  if (theta < 0.0 || gamma < 0.0 || phi < 0.0) throw Error(ErrorCode::kInvalidWeights, "fusion weights must be >= 0");
  const double sum = theta + gamma + phi;
  if (!(std::abs(sum - 1.0) <= 1e-9)) {
    throw Error(ErrorCode::kInvalidWeights, "fusion weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

ScoreSet FuseScores(const ScoreSet& breath, const ScoreSet& cough, const ScoreSet& speech, const FusionWeights& w) {
  w.Validate();
  RequireSameIds(breath, cough, "fuse");
  RequireSameIds(breath, speech, "fuse");
  const auto c = cough.AsMap();
  const auto s = speech.AsMap();
  ScoreSet out;
  for (std::size_t i = 0; i < breath.size(); ++i) {
    const std::string& id = breath.ids[i];
    out.Add(id, w.theta * breath.scores[i] + w.gamma * c.at(id) + w.phi * s.at(id));
  }
  return out;
}

MuSearchResult SearchMu(const ScoreSet& sup, const ScoreSet& ssl, const std::map<std::string, int>& labels) {
  MuSearchResult res;
  res.auc = -1.0;
  for (int i = 0; i <= 10; ++i) {
    const double mu = i / 10.0;
    const double auc = RocAuc(EnsembleScores(sup, ssl, mu), labels);
    res.grid.emplace_back(mu, auc);
    if (auc > res.auc) {
      res.auc = auc;
      res.mu = mu;
    }
  }
  return res;
}

std::vector<std::size_t> FoldSpec::Members(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldSpec::Complement(int fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldSpec MakeFolds(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw Error(ErrorCode::kInvalidConfig, "need at least 2 folds");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) (labels[i] ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(k) || neg.size() < static_cast<std::size_t>(k)) {
    throw Error(ErrorCode::kTooFewSamples, std::to_string(pos.size()) + " positives and " + std::to_string(neg.size()) +
                                               " negatives cannot fill " + std::to_string(k) + " stratified folds");
  }
  Rng rng(seed);
  rng.Shuffle(pos.begin(), pos.end());
  rng.Shuffle(neg.begin(), neg.end());
  FoldSpec spec;
  spec.k = k;
  spec.seed = seed;
  spec.assignment.assign(labels.size(), -1);
  for (std::size_t i = 0; i < pos.size(); ++i) spec.assignment[pos[i]] = static_cast<int>(i % k);
  const std::size_t offset = pos.size() % static_cast<std::size_t>(k);
  for (std::size_t i = 0; i < neg.size(); ++i) spec.assignment[neg[i]] = static_cast<int>((offset + i) % k);
  return spec;
}

FoldSpec MakeFolds(const DatasetManifest& manifest, int k, std::uint64_t seed) {
  std::vector<int> labels;
  for (const auto& e : manifest.entries) labels.push_back(e.label == Label::kPositive ? 1 : 0);
  return MakeFolds(labels, k, seed);
}

void WriteRocSvg(const std::filesystem::path& path,
                 const std::vector<std::pair<std::string, std::vector<RocPoint>>>& curves) {
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  constexpr double kSize = 400.0, kMargin = 50.0;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIoError, "cannot open " + path.string());
  auto x = [&](double fpr) { return kMargin + fpr * kSize; };
  auto y = [&](double tpr) { return kMargin + (1.0 - tpr) * kSize; };
  char buf[128];
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kSize + 2 * kMargin << "\" height=\""
      << kSize + 2 * kMargin << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect x=\"" << kMargin << "\" y=\"" << kMargin << "\" width=\"" << kSize << "\" height=\"" << kSize
      << "\" fill=\"none\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << x(0) << "\" y1=\"" << y(0) << "\" x2=\"" << x(1) << "\" y2=\"" << y(1)
      << "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  for (int i = 0; i <= 10; i += 2) {
    const double v = i / 10.0;
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    out << "<text x=\"" << x(v) << "\" y=\"" << kMargin + kSize + 16 << "\" text-anchor=\"middle\">" << buf
        << "</text>\n";
    out << "<text x=\"" << kMargin - 6 << "\" y=\"" << y(v) + 4 << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }
  out << "<text x=\"" << x(0.5) << "\" y=\"" << kMargin + kSize + 36 << "\" text-anchor=\"middle\">FPR</text>\n";
  out << "<text x=\"14\" y=\"" << y(0.5) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 " << y(0.5)
      << ")\">TPR</text>\n";
  for (std::size_t c = 0; c < curves.size(); ++c) {
    const char* color = kColors[c % (sizeof(kColors) / sizeof(kColors[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const RocPoint& p : curves[c].second) {
      std::snprintf(buf, sizeof(buf), "%.2f,%.2f ", x(p.fpr), y(p.tpr));
      out << buf;
    }
    out << "\"/>\n";
    out << "<text x=\"" << x(0.55) << "\" y=\"" << y(0.3) + 16.0 * static_cast<double>(c) << "\" fill=\"" << color
        << "\">" << curves[c].first << "</text>\n";
  }
  out << "</svg>\n";
  if (!out) throw Error(ErrorCode::kIoError, "write failed for " + path.string());
}

}  // namespace respira
