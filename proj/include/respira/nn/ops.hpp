// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include "respira/nn/tape.hpp"
#include "respira/rng.hpp"

namespace respira::nn {

namespace detail {

inline std::string Shape(Eigen::Index r, Eigen::Index c) {
  return "(" + std::to_string(r) + "x" + std::to_string(c) + ")";
}

template <typename T>
void RequireSameShape(const char* op, const Var<T>& a, const Var<T>& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch,
                std::string(op) + ": " + Shape(a.rows(), a.cols()) + " vs " + Shape(b.rows(), b.cols()));
  }
}

template <typename T>
Matrix<T> RowSums(const Matrix<T>& m) {
  return m.rowwise().sum();
}

}  // namespace detail

template <typename T>
Var<T> MatMul(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "MatMul: " + detail::Shape(a.rows(), a.cols()) + " * " +
                                               detail::Shape(b.rows(), b.cols()));
  }
  Tape<T>* tape = a.tape();
  Matrix<T> out;
  out.noalias() = a.value() * b.value();
  return tape->Record(std::move(out), {a, b}, [tape, a, b](const Matrix<T>& g) {
    if (tape->NeedsGrad(a)) tape->Accumulate(a, g * b.value().transpose());
    if (tape->NeedsGrad(b)) tape->Accumulate(b, a.value().transpose() * g);
  });
}

// a * b^T
template <typename T>
Var<T> MatMulNT(const Var<T>& a, const Var<T>& b) {
  if (a.cols() != b.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "MatMulNT: " + detail::Shape(a.rows(), a.cols()) + " * " +
                                               detail::Shape(b.rows(), b.cols()) + "^T");
  }
  Tape<T>* tape = a.tape();
  Matrix<T> out;
  out.noalias() = a.value() * b.value().transpose();
  return tape->Record(std::move(out), {a, b}, [tape, a, b](const Matrix<T>& g) {
    if (tape->NeedsGrad(a)) tape->Accumulate(a, g * b.value());
    if (tape->NeedsGrad(b)) tape->Accumulate(b, g.transpose() * a.value());
  });
}

template <typename T>
Var<T> Transpose(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().transpose(), {a},
                      [tape, a](const Matrix<T>& g) { tape->Accumulate(a, g.transpose()); });
}

template <typename T>
Var<T> Add(const Var<T>& a, const Var<T>& b) {
  detail::RequireSameShape("Add", a, b);
  Tape<T>* tape = a.tape();
  return tape->Record(a.value() + b.value(), {a, b}, [tape, a, b](const Matrix<T>& g) {
    tape->Accumulate(a, g);
    tape->Accumulate(b, g);
  });
}

template <typename T>
Var<T> Sub(const Var<T>& a, const Var<T>& b) {
  detail::RequireSameShape("Sub", a, b);
  Tape<T>* tape = a.tape();
  return tape->Record(a.value() - b.value(), {a, b}, [tape, a, b](const Matrix<T>& g) {
    tape->Accumulate(a, g);
    tape->Accumulate(b, -g);
  });
}

// a (R x C) + row (1 x C) broadcast over rows.
template <typename T>
Var<T> AddRow(const Var<T>& a, const Var<T>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "AddRow: " + detail::Shape(a.rows(), a.cols()) + " + " +
                                               detail::Shape(row.rows(), row.cols()));
  }
  Tape<T>* tape = a.tape();
  Matrix<T> out = a.value().rowwise() + row.value().row(0);
  return tape->Record(std::move(out), {a, row}, [tape, a, row](const Matrix<T>& g) {
    tape->Accumulate(a, g);
    if (tape->NeedsGrad(row)) tape->Accumulate(row, g.colwise().sum());
  });
}

// Elementwise product.
template <typename T>
Var<T> Mul(const Var<T>& a, const Var<T>& b) {
  detail::RequireSameShape("Mul", a, b);
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().cwiseProduct(b.value()), {a, b}, [tape, a, b](const Matrix<T>& g) {
    if (tape->NeedsGrad(a)) tape->Accumulate(a, g.cwiseProduct(b.value()));
    if (tape->NeedsGrad(b)) tape->Accumulate(b, g.cwiseProduct(a.value()));
  });
}

template <typename T>
Var<T> Scale(const Var<T>& a, T s) {
  Tape<T>* tape = a.tape();
  return tape->Record(a.value() * s, {a}, [tape, a, s](const Matrix<T>& g) { tape->Accumulate(a, g * s); });
}

template <typename T>
Var<T> AddScalar(const Var<T>& a, T s) {
  Tape<T>* tape = a.tape();
  return tape->Record((a.value().array() + s).matrix(), {a},
                      [tape, a](const Matrix<T>& g) { tape->Accumulate(a, g); });
}

template <typename T>
Var<T> Sigmoid(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  Matrix<T> y = (T(1) / (T(1) + (-a.value().array()).exp())).matrix();
  const int id = static_cast<int>(tape->size());
  return tape->Record(std::move(y), {a}, [tape, a, id](const Matrix<T>& g) {
    const Matrix<T>& y = tape->value(id);
    tape->Accumulate(a, (g.array() * y.array() * (T(1) - y.array())).matrix());
  });
}

template <typename T>
Var<T> Tanh(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  Matrix<T> y = a.value().array().tanh().matrix();
  const int id = static_cast<int>(tape->size());
  return tape->Record(std::move(y), {a}, [tape, a, id](const Matrix<T>& g) {
    const Matrix<T>& y = tape->value(id);
    tape->Accumulate(a, (g.array() * (T(1) - y.array().square())).matrix());
  });
}

template <typename T>
Var<T> Relu(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().cwiseMax(T(0)), {a}, [tape, a](const Matrix<T>& g) {
    tape->Accumulate(a, (a.value().array() > T(0)).select(g.array(), T(0)).matrix());
  });
}

// Exact GELU: x * Phi(x).
template <typename T>
Var<T> Gelu(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  const T inv_sqrt2 = T(1) / std::sqrt(T(2));
  Matrix<T> y = a.value().unaryExpr([inv_sqrt2](T x) { return T(0.5) * x * (T(1) + std::erf(x * inv_sqrt2)); });
  return tape->Record(std::move(y), {a}, [tape, a, inv_sqrt2](const Matrix<T>& g) {
    const T inv_sqrt_2pi = T(1) / std::sqrt(T(2) * T(M_PI));
    Matrix<T> d = a.value().unaryExpr([&](T x) {
      return T(0.5) * (T(1) + std::erf(x * inv_sqrt2)) + x * inv_sqrt_2pi * std::exp(T(-0.5) * x * x);
    });
    tape->Accumulate(a, g.cwiseProduct(d));
  });
}

template <typename T>
Var<T> Exp(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  Matrix<T> y = a.value().array().exp().matrix();
  const int id = static_cast<int>(tape->size());
  return tape->Record(std::move(y), {a},
                      [tape, a, id](const Matrix<T>& g) { tape->Accumulate(a, g.cwiseProduct(tape->value(id))); });
}

template <typename T>
Var<T> Log(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().array().log().matrix(), {a}, [tape, a](const Matrix<T>& g) {
    tape->Accumulate(a, g.cwiseQuotient(a.value()));
  });
}

template <typename T>
Var<T> Square(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().array().square().matrix(), {a}, [tape, a](const Matrix<T>& g) {
    tape->Accumulate(a, (T(2) * g.array() * a.value().array()).matrix());
  });
}

namespace detail {
template <typename T>
Matrix<T> SoftmaxRowsValue(const Matrix<T>& x) {
  Matrix<T> y = x.colwise() - x.rowwise().maxCoeff();
  y = y.array().exp().matrix();
  const Eigen::Matrix<T, Eigen::Dynamic, 1> sums = y.rowwise().sum();
  return (y.array().colwise() / sums.array()).matrix();
}
}  // namespace detail

template <typename T>
Var<T> SoftmaxRows(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  const int id = static_cast<int>(tape->size());
  return tape->Record(detail::SoftmaxRowsValue(a.value()), {a}, [tape, a, id](const Matrix<T>& g) {
    const Matrix<T>& y = tape->value(id);
    const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
    tape->Accumulate(a, (y.array() * (g.array().colwise() - dot.array())).matrix());
  });
}

template <typename T>
Var<T> LogSoftmaxRows(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  const Matrix<T>& x = a.value();
  const Eigen::Matrix<T, Eigen::Dynamic, 1> mx = x.rowwise().maxCoeff();
  Matrix<T> shifted = x.colwise() - mx;
  const Eigen::Matrix<T, Eigen::Dynamic, 1> lse = shifted.array().exp().rowwise().sum().log();
  Matrix<T> y = shifted.colwise() - lse;
  const int id = static_cast<int>(tape->size());
  return tape->Record(std::move(y), {a}, [tape, a, id](const Matrix<T>& g) {
    const Matrix<T> p = tape->value(id).array().exp().matrix();
    const Eigen::Matrix<T, Eigen::Dynamic, 1> gs = g.rowwise().sum();
    tape->Accumulate(a, g - (p.array().colwise() * gs.array()).matrix());
  });
}

// Inverted dropout; identity when !training or rate == 0.
template <typename T>
Var<T> Dropout(const Var<T>& a, double rate, Rng& rng, bool training) {
  if (!training || rate <= 0.0) return a;
  Tape<T>* tape = a.tape();
  const T keep_scale = T(1.0 / (1.0 - rate));
  auto mask = std::make_shared<Matrix<T>>(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < mask->size(); ++i) {
    mask->data()[i] = rng.Uniform() < rate ? T(0) : keep_scale;
  }
  Matrix<T> out = a.value().cwiseProduct(*mask);
  return tape->Record(std::move(out), {a},
                      [tape, a, mask](const Matrix<T>& g) { tape->Accumulate(a, g.cwiseProduct(*mask)); });
}

template <typename T>
Var<T> ConcatCols(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "ConcatCols: no inputs");
  Tape<T>* tape = parts.front().tape();
  const Eigen::Index rows = parts.front().rows();
  Eigen::Index cols = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error(ErrorCode::kShapeMismatch, "ConcatCols: row counts differ");
    cols += p.cols();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleCols(off, p.cols()) = p.value();
    off += p.cols();
  }
  return tape->Record(std::move(out), parts, [tape, parts](const Matrix<T>& g) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      if (tape->NeedsGrad(p)) tape->Accumulate(p, g.middleCols(off, p.cols()));
      off += p.cols();
    }
  });
}

template <typename T>
Var<T> ConcatRows(const std::vector<Var<T>>& parts) {
  if (parts.empty()) throw Error(ErrorCode::kShapeMismatch, "ConcatRows: no inputs");
  Tape<T>* tape = parts.front().tape();
  const Eigen::Index cols = parts.front().cols();
  Eigen::Index rows = 0;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw Error(ErrorCode::kShapeMismatch, "ConcatRows: column counts differ");
    rows += p.rows();
  }
  Matrix<T> out(rows, cols);
  Eigen::Index off = 0;
  for (const auto& p : parts) {
    out.middleRows(off, p.rows()) = p.value();
    off += p.rows();
  }
  return tape->Record(std::move(out), parts, [tape, parts](const Matrix<T>& g) {
    Eigen::Index off = 0;
    for (const auto& p : parts) {
      if (tape->NeedsGrad(p)) tape->Accumulate(p, g.middleRows(off, p.rows()));
      off += p.rows();
    }
  });
}

template <typename T>
Var<T> SliceCols(const Var<T>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "SliceCols out of range");
  }
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().middleCols(start, count), {a}, [tape, a, start, count](const Matrix<T>& g) {
    Matrix<T> full = Matrix<T>::Zero(a.rows(), a.cols());
    full.middleCols(start, count) = g;
    tape->Accumulate(a, full);
  });
}

template <typename T>
Var<T> SliceRows(const Var<T>& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "SliceRows out of range");
  }
  Tape<T>* tape = a.tape();
  return tape->Record(a.value().middleRows(start, count), {a}, [tape, a, start, count](const Matrix<T>& g) {
    Matrix<T> full = Matrix<T>::Zero(a.rows(), a.cols());
    full.middleRows(start, count) = g;
    tape->Accumulate(a, full);
  });
}

template <typename T>
Var<T> GatherRows(const Var<T>& a, std::vector<Eigen::Index> rows) {
  Tape<T>* tape = a.tape();
  Matrix<T> out(static_cast<Eigen::Index>(rows.size()), a.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= a.rows()) throw Error(ErrorCode::kShapeMismatch, "GatherRows index out of range");
    out.row(static_cast<Eigen::Index>(i)) = a.value().row(rows[i]);
  }
  return tape->Record(std::move(out), {a}, [tape, a, rows = std::move(rows)](const Matrix<T>& g) {
    Matrix<T> full = Matrix<T>::Zero(a.rows(), a.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) full.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    tape->Accumulate(a, full);
  });
}

// Picks one element per row: out(i) = a(i, cols[i]), shape N x 1.
template <typename T>
Var<T> PickPerRow(const Var<T>& a, std::vector<Eigen::Index> cols) {
  if (static_cast<Eigen::Index>(cols.size()) != a.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "PickPerRow: one column index per row required");
  }
  Tape<T>* tape = a.tape();
  Matrix<T> out(a.rows(), 1);
  for (Eigen::Index i = 0; i < a.rows(); ++i) out(i, 0) = a.value()(i, cols[static_cast<std::size_t>(i)]);
  return tape->Record(std::move(out), {a}, [tape, a, cols = std::move(cols)](const Matrix<T>& g) {
    Matrix<T> full = Matrix<T>::Zero(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) full(i, cols[static_cast<std::size_t>(i)]) = g(i, 0);
    tape->Accumulate(a, full);
  });
}

template <typename T>
Var<T> Sum(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum();
  return tape->Record(std::move(out), {a}, [tape, a](const Matrix<T>& g) {
    tape->Accumulate(a, Matrix<T>::Constant(a.rows(), a.cols(), g(0, 0)));
  });
}

template <typename T>
Var<T> Mean(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  const T n = static_cast<T>(a.value().size());
  Matrix<T> out(1, 1);
  out(0, 0) = a.value().sum() / n;
  return tape->Record(std::move(out), {a}, [tape, a, n](const Matrix<T>& g) {
    tape->Accumulate(a, Matrix<T>::Constant(a.rows(), a.cols(), g(0, 0) / n));
  });
}

// Column means: R x C -> 1 x C.
template <typename T>
Var<T> MeanRows(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  const T n = static_cast<T>(a.rows());
  Matrix<T> out = a.value().colwise().sum() / n;
  return tape->Record(std::move(out), {a}, [tape, a, n](const Matrix<T>& g) {
    tape->Accumulate(a, (g / n).replicate(a.rows(), 1));
  });
}

// Scales each row to unit L2 norm (norms below eps are treated as eps).
template <typename T>
Var<T> L2NormalizeRows(const Var<T>& a, T eps = T(1e-8)) {
  Tape<T>* tape = a.tape();
  auto norms = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(a.value().rowwise().norm().cwiseMax(eps));
  Matrix<T> y = (a.value().array().colwise() / norms->array()).matrix();
  const int id = static_cast<int>(tape->size());
  return tape->Record(std::move(y), {a}, [tape, a, norms, id](const Matrix<T>& g) {
    const Matrix<T>& y = tape->value(id);
    const Eigen::Matrix<T, Eigen::Dynamic, 1> dot = g.cwiseProduct(y).rowwise().sum();
    Matrix<T> d = g - (y.array().colwise() * dot.array()).matrix();
    tape->Accumulate(a, (d.array().colwise() / norms->array()).matrix());
  });
}

// Per-row layer normalization with learned gain and bias (both 1 x C).
template <typename T>
Var<T> LayerNormRows(const Var<T>& a, const Var<T>& gain, const Var<T>& bias, T eps = T(1e-5)) {
  const Eigen::Index c = a.cols();
  if (gain.rows() != 1 || gain.cols() != c || bias.rows() != 1 || bias.cols() != c) {
    throw Error(ErrorCode::kShapeMismatch, "LayerNormRows: gain/bias must be 1 x " + std::to_string(c));
  }
  Tape<T>* tape = a.tape();
  const Eigen::Matrix<T, Eigen::Dynamic, 1> mu = a.value().rowwise().mean();
  auto xhat = std::make_shared<Matrix<T>>(a.value().colwise() - mu);
  auto inv_std = std::make_shared<Eigen::Matrix<T, Eigen::Dynamic, 1>>(
      ((xhat->array().square().rowwise().sum() / T(c)) + eps).sqrt().inverse());
  *xhat = (xhat->array().colwise() * inv_std->array()).matrix();
  Matrix<T> y = (xhat->array().rowwise() * gain.value().row(0).array()).matrix();
  y.rowwise() += bias.value().row(0);
  return tape->Record(std::move(y), {a, gain, bias}, [tape, a, gain, bias, xhat, inv_std, c](const Matrix<T>& g) {
    if (tape->NeedsGrad(gain)) tape->Accumulate(gain, g.cwiseProduct(*xhat).colwise().sum());
    if (tape->NeedsGrad(bias)) tape->Accumulate(bias, g.colwise().sum());
    if (tape->NeedsGrad(a)) {
      const Matrix<T> dxhat = (g.array().rowwise() * gain.value().row(0).array()).matrix();
      const Eigen::Matrix<T, Eigen::Dynamic, 1> m1 = dxhat.rowwise().mean();
      const Eigen::Matrix<T, Eigen::Dynamic, 1> m2 = dxhat.cwiseProduct(*xhat).rowwise().mean();
      Matrix<T> dx = dxhat.colwise() - m1;
      dx -= (xhat->array().colwise() * m2.array()).matrix();
      tape->Accumulate(a, (dx.array().colwise() * inv_std->array()).matrix());
    }
  });
}

// Unfolds T x C into T_out x (kernel * C) patches with the given stride, so
// a 1-D convolution becomes MatMul(Im2Col(x), W).
template <typename T>
Var<T> Im2Col(const Var<T>& a, int kernel, int stride) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index c = a.cols();
  if (kernel < 1 || stride < 1 || rows < kernel) {
    throw Error(ErrorCode::kTooShort, "Im2Col: " + std::to_string(rows) + " frames < kernel " + std::to_string(kernel));
  }
  const Eigen::Index out_rows = (rows - kernel) / stride + 1;
  Tape<T>* tape = a.tape();
  Matrix<T> out(out_rows, kernel * c);
  for (Eigen::Index o = 0; o < out_rows; ++o) {
    for (int k = 0; k < kernel; ++k) out.block(o, k * c, 1, c) = a.value().row(o * stride + k);
  }
  return tape->Record(std::move(out), {a}, [tape, a, kernel, stride, out_rows, c](const Matrix<T>& g) {
    Matrix<T> full = Matrix<T>::Zero(a.rows(), c);
    for (Eigen::Index o = 0; o < out_rows; ++o) {
      for (int k = 0; k < kernel; ++k) full.row(o * stride + k) += g.block(o, k * c, 1, c);
    }
    tape->Accumulate(a, full);
  });
}

// Per-channel convolution with "same" zero padding; weight is K x C (K odd),
// bias 1 x C.
template <typename T>
Var<T> DepthwiseConvSame(const Var<T>& a, const Var<T>& weight, const Var<T>& bias) {
  const Eigen::Index rows = a.rows();
  const Eigen::Index c = a.cols();
  const Eigen::Index k = weight.rows();
  if (weight.cols() != c || k % 2 == 0 || bias.rows() != 1 || bias.cols() != c) {
    throw Error(ErrorCode::kShapeMismatch, "DepthwiseConvSame: weight must be odd K x C, bias 1 x C");
  }
  const Eigen::Index pad = k / 2;
  Tape<T>* tape = a.tape();
  Matrix<T> out = bias.value().replicate(rows, 1);
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) {
      const Eigen::Index src = t + j - pad;
      if (src < 0 || src >= rows) continue;
      out.row(t) += weight.value().row(j).cwiseProduct(a.value().row(src));
    }
  }
  return tape->Record(std::move(out), {a, weight, bias}, [tape, a, weight, bias, rows, c, k, pad](const Matrix<T>& g) {
    Matrix<T> ga = Matrix<T>::Zero(rows, c);
    Matrix<T> gw = Matrix<T>::Zero(k, c);
    for (Eigen::Index t = 0; t < rows; ++t) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index src = t + j - pad;
        if (src < 0 || src >= rows) continue;
        ga.row(src) += g.row(t).cwiseProduct(weight.value().row(j));
        gw.row(j) += g.row(t).cwiseProduct(a.value().row(src));
      }
    }
    tape->Accumulate(a, ga);
    tape->Accumulate(weight, gw);
    tape->Accumulate(bias, g.colwise().sum());
  });
}

// Forward: one-hot of each row's argmax. Backward: identity (straight-through).
template <typename T>
Var<T> StraightThroughOneHot(const Var<T>& a) {
  Tape<T>* tape = a.tape();
  Matrix<T> out = Matrix<T>::Zero(a.rows(), a.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    Eigen::Index j;
    a.value().row(i).maxCoeff(&j);
    out(i, j) = T(1);
  }
  return tape->Record(std::move(out), {a}, [tape, a](const Matrix<T>& g) { tape->Accumulate(a, g); });
}

// Copy of `a` with the listed rows replaced by `row` (1 x C).
template <typename T>
Var<T> ReplaceRows(const Var<T>& a, std::vector<Eigen::Index> rows, const Var<T>& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) throw Error(ErrorCode::kShapeMismatch, "ReplaceRows: row shape");
  Tape<T>* tape = a.tape();
  Matrix<T> out = a.value();
  for (Eigen::Index r : rows) {
    if (r < 0 || r >= a.rows()) throw Error(ErrorCode::kShapeMismatch, "ReplaceRows index out of range");
    out.row(r) = row.value().row(0);
  }
  return tape->Record(std::move(out), {a, row}, [tape, a, row, rows = std::move(rows)](const Matrix<T>& g) {
    if (tape->NeedsGrad(a)) {
      Matrix<T> ga = g;
      for (Eigen::Index r : rows) ga.row(r).setZero();
      tape->Accumulate(a, ga);
    }
    if (tape->NeedsGrad(row)) {
      Matrix<T> gr = Matrix<T>::Zero(1, row.cols());
      for (Eigen::Index r : rows) gr += g.row(r);
      tape->Accumulate(row, gr);
    }
  });
}

// Mean over rows of -log softmax(logits_i)[targets_i].
template <typename T>
Var<T> CrossEntropyRows(const Var<T>& logits, std::vector<Eigen::Index> targets) {
  return Scale(Sum(PickPerRow(LogSoftmaxRows(logits), std::move(targets))), T(-1) / static_cast<T>(logits.rows()));
}

}  // namespace respira::nn
