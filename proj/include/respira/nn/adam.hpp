// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cmath>
#include <map>
#include <string>

#include "respira/nn/tape.hpp"

namespace respira::nn {

template <typename T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long t = 0;
  std::map<std::string, Matrix<T>> m;
  std::map<std::string, Matrix<T>> v;
};

// One bias-corrected Adam update of every trainable parameter from its grad.
template <typename T>
void AdamStep(ParamSet<T>& params, AdamState<T>& state) {
  ++state.t;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const T b1 = T(state.beta1), b2 = T(state.beta2);
  const T step = T(state.lr / c1);
  const T inv_sqrt_c2 = T(1.0 / std::sqrt(c2));
  const T eps = T(state.eps);
  for (auto& [name, p] : params) {
    if (!p.trainable) continue;
    if (p.grad.rows() != p.value.rows() || p.grad.cols() != p.value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "AdamStep: gradient shape of " + name);
    }
    auto mit = state.m.try_emplace(name, Matrix<T>::Zero(p.value.rows(), p.value.cols())).first;
    auto vit = state.v.try_emplace(name, Matrix<T>::Zero(p.value.rows(), p.value.cols())).first;
    Matrix<T>& m = mit->second;
    Matrix<T>& v = vit->second;
    if (m.rows() != p.value.rows() || m.cols() != p.value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "AdamStep: moment shape of " + name);
    }
    m = b1 * m + (T(1) - b1) * p.grad;
    v = b2 * v + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= step * m.array() / ((v.array().sqrt() * inv_sqrt_c2) + eps);
  }
}

}  // namespace respira::nn
