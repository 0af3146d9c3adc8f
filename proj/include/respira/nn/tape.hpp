// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// Reverse-mode differentiation over 2-D row-major matrices. A Tape records
// every operation of one forward pass; Backward() walks the records in
// reverse and accumulates gradients into the inputs and, for parameter
// leaves, into Parameter::grad.

#pragma once

#include <Eigen/Core>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "respira/error.hpp"

namespace respira::nn {

template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
struct Parameter {
  Matrix<T> value;
  Matrix<T> grad;
  // Non-trainable tensors (e.g. input statistics) ride along in checkpoints
  // and averaging but are skipped by the optimizer.
  bool trainable = true;

  void ZeroGrad() { grad.setZero(value.rows(), value.cols()); }
};

// Named parameters, iterated in name order so every traversal is stable.
template <typename T>
class ParamSet {
 public:
  Parameter<T>& Add(const std::string& name, Eigen::Index rows, Eigen::Index cols, bool trainable = true) {
    Parameter<T>& p = params_[name];
    p.value.setZero(rows, cols);
    p.grad.setZero(rows, cols);
    p.trainable = trainable;
    return p;
  }

  Parameter<T>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorCode::kShapeMismatch, "no parameter named " + name);
    return it->second;
  }
  const Parameter<T>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw Error(ErrorCode::kShapeMismatch, "no parameter named " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) > 0; }

  void ZeroGrad() {
    for (auto& [name, p] : params_) p.ZeroGrad();
  }

  std::size_t size() const { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  template <typename U>
  ParamSet<U> Cast() const {
    ParamSet<U> out;
    for (const auto& [name, p] : params_) {
      Parameter<U>& q = out.Add(name, p.value.rows(), p.value.cols(), p.trainable);
      q.value = p.value.template cast<U>();
    }
    return out;
  }

 private:
  std::map<std::string, Parameter<T>> params_;
};

template <typename T>
class Tape;

// Handle to a recorded value.
template <typename T>
class Var {
 public:
  Var() = default;
  Var(Tape<T>* tape, int id) : tape_(tape), id_(id) {}

  const Matrix<T>& value() const { return tape_->value(id_); }
  const Matrix<T>& grad() const { return tape_->grad(id_); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape<T>* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  Tape<T>* tape_ = nullptr;
  int id_ = -1;
};

template <typename T>
class Tape {
 public:
  using BackFn = std::function<void(const Matrix<T>& out_grad)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Value that never receives a gradient.
  Var<T> Constant(Matrix<T> value) { return Push(std::move(value), false, nullptr, nullptr); }

  // Free input that collects a gradient (used by gradient checks).
  Var<T> Leaf(Matrix<T> value) { return Push(std::move(value), true, nullptr, nullptr); }

  // Parameter leaf; its gradient is added to p.grad during Backward().
  Var<T> Param(Parameter<T>& p) { return Push(p.value, true, nullptr, &p); }

  // Records an op. `back` runs only if some input needs a gradient.
  Var<T> Record(Matrix<T> value, std::initializer_list<Var<T>> inputs, BackFn back) {
    bool needs = false;
    for (const Var<T>& v : inputs) needs = needs || node(v.id()).needs_grad;
    return Record(std::move(value), needs, std::move(back));
  }

  Var<T> Record(Matrix<T> value, const std::vector<Var<T>>& inputs, BackFn back) {
    bool needs = false;
    for (const Var<T>& v : inputs) needs = needs || node(v.id()).needs_grad;
    return Record(std::move(value), needs, std::move(back));
  }

  Var<T> Record(Matrix<T> value, bool needs_grad, BackFn back) {
    if (!value.allFinite()) throw Error(ErrorCode::kNonFinite, "operation produced NaN or Inf");
    return Push(std::move(value), needs_grad, needs_grad ? std::move(back) : nullptr, nullptr);
  }

  bool NeedsGrad(const Var<T>& v) const { return node(v.id()).needs_grad; }

  // grad(v) += g, allocating on first touch.
  template <typename Expr>
  void Accumulate(const Var<T>& v, const Expr& g) {
    Node& n = node(v.id());
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad.noalias() += g;
    }
  }

  const Matrix<T>& value(int id) const { return node(id).value; }

  const Matrix<T>& grad(int id) const {
    const Node& n = node(id);
    if (n.grad.size() == 0) {
      n.grad.setZero(n.value.rows(), n.value.cols());
    }
    return n.grad;
  }

  // Seeds d(loss)/d(loss) = 1 for a 1x1 `loss` and propagates.
  void Backward(const Var<T>& loss) {
    if (loss.rows() != 1 || loss.cols() != 1) throw Error(ErrorCode::kShapeMismatch, "Backward expects a scalar");
    Matrix<T> seed(1, 1);
    seed(0, 0) = T(1);
    Backward(loss, seed);
  }

  void Backward(const Var<T>& out, const Matrix<T>& seed) {
    Accumulate(out, seed);
    for (int i = out.id(); i >= 0; --i) {
      Node& n = nodes_[static_cast<std::size_t>(i)];
      if (n.grad.size() == 0) continue;
      if (n.param != nullptr) {
        if (n.param->grad.size() == 0) n.param->grad.setZero(n.value.rows(), n.value.cols());
        n.param->grad += n.grad;
      } else if (n.back) {
        n.back(n.grad);
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix<T> value;
    mutable Matrix<T> grad;
    BackFn back;
    bool needs_grad = false;
    Parameter<T>* param = nullptr;
  };

  Var<T> Push(Matrix<T> value, bool needs_grad, BackFn back, Parameter<T>* param) {
    nodes_.push_back(Node{std::move(value), Matrix<T>(), std::move(back), needs_grad, param});
    return Var<T>(this, static_cast<int>(nodes_.size()) - 1);
  }

  Node& node(int id) { return nodes_.at(static_cast<std::size_t>(id)); }
  const Node& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }

  std::deque<Node> nodes_;
};

}  // namespace respira::nn
