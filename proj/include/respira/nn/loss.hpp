// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "respira/nn/ops.hpp"

namespace respira::nn {

inline constexpr double kProbClamp = 1e-7;

// -[y log p + (1-y) log(1-p)] with p clamped to [1e-7, 1 - 1e-7].
inline double BceLoss(double p, int y) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

// Mean binary cross-entropy of sigmoid(logits) against 0/1 labels. Positive
// terms are weighted by pos_weight. The gradient with respect to each logit
// is (p - y) scaled by the term weight and 1/N.
template <typename T>
Var<T> BceWithLogits(const Var<T>& logits, const std::vector<double>& labels, double pos_weight = 1.0) {
  if (logits.cols() != 1 || logits.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw Error(ErrorCode::kShapeMismatch, "BceWithLogits expects N x 1 logits and N labels");
  }
  Tape<T>* tape = logits.tape();
  const Eigen::Index n = logits.rows();
  Matrix<T> out(1, 1);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double z = static_cast<double>(logits.value()(i, 0));
    const double p = 1.0 / (1.0 + std::exp(-z));
    const double y = labels[static_cast<std::size_t>(i)];
    const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
    total += -(pos_weight * y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
  }
  out(0, 0) = static_cast<T>(total / static_cast<double>(n));
  return tape->Record(std::move(out), {logits}, [tape, logits, labels, pos_weight, n](const Matrix<T>& g) {
    Matrix<T> d(n, 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = static_cast<double>(logits.value()(i, 0));
      const double p = 1.0 / (1.0 + std::exp(-z));
      const double y = labels[static_cast<std::size_t>(i)];
      const double grad = pos_weight * y * (p - 1.0) + (1.0 - y) * p;
      d(i, 0) = static_cast<T>(grad / static_cast<double>(n)) * g(0, 0);
    }
    tape->Accumulate(logits, d);
  });
}

}  // namespace respira::nn
