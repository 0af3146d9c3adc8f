// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors
//
// LSTM with gate order (input, forget, candidate, output):
//   z = x W_x + h W_h + b
//   i = sig(z_i), f = sig(z_f), g = tanh(z_g), o = sig(z_o)
//   c' = f * c + i * g,  h' = o * tanh(c')
//
// LstmCell composes generic tape ops. LstmSequence runs a whole padded batch
// in one fused op with explicit backpropagation through time.

#pragma once

#include <memory>
#include <utility>
#include <vector>

#include "respira/nn/ops.hpp"

namespace respira::nn {

template <typename T>
struct LstmWeights {
  Var<T> w_x;  // F x 4H
  Var<T> w_h;  // H x 4H
  Var<T> b;    // 1 x 4H

  Eigen::Index hidden() const { return w_h.rows(); }
};

template <typename T>
void CheckLstmWeights(const LstmWeights<T>& w, Eigen::Index input_dim) {
  const Eigen::Index h = w.w_h.rows();
  if (w.w_h.cols() != 4 * h || w.w_x.cols() != 4 * h || w.w_x.rows() != input_dim || w.b.rows() != 1 ||
      w.b.cols() != 4 * h) {
    throw Error(ErrorCode::kShapeMismatch, "LSTM weights do not match input dim " + std::to_string(input_dim) +
                                               " and hidden " + std::to_string(h));
  }
}

// One step on a B x F input; returns (h', c').
template <typename T>
std::pair<Var<T>, Var<T>> LstmCell(const Var<T>& x, const Var<T>& h, const Var<T>& c, const LstmWeights<T>& w) {
  CheckLstmWeights(w, x.cols());
  const Eigen::Index hd = w.hidden();
  if (h.cols() != hd || c.cols() != hd || h.rows() != x.rows() || c.rows() != x.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "LSTM state shape mismatch");
  }
  const Var<T> z = AddRow(Add(MatMul(x, w.w_x), MatMul(h, w.w_h)), w.b);
  const Var<T> i = Sigmoid(SliceCols(z, 0, hd));
  const Var<T> f = Sigmoid(SliceCols(z, hd, hd));
  const Var<T> g = Tanh(SliceCols(z, 2 * hd, hd));
  const Var<T> o = Sigmoid(SliceCols(z, 3 * hd, hd));
  const Var<T> c_next = Add(Mul(f, c), Mul(i, g));
  const Var<T> h_next = Mul(o, Tanh(c_next));
  return {h_next, c_next};
}

// Padded batch layout: row t * batch + b holds frame t of sequence b.
// Frames at t >= lengths[b] produce zero output and leave the state
// untouched, so each sequence sees exactly its own frames in either
// direction. Returns a (T * batch) x H matrix.
template <typename T>
Var<T> LstmSequence(const Var<T>& x, const std::vector<int>& lengths, const LstmWeights<T>& w, bool reverse) {
  CheckLstmWeights(w, x.cols());
  const auto batch = static_cast<Eigen::Index>(lengths.size());
  if (batch == 0 || x.rows() % batch != 0) {
    throw Error(ErrorCode::kShapeMismatch, "LstmSequence: rows must be a multiple of the batch size");
  }
  const Eigen::Index steps = x.rows() / batch;
  const Eigen::Index hd = w.hidden();
  for (int len : lengths) {
    if (len < 1 || len > steps) throw Error(ErrorCode::kShapeMismatch, "LstmSequence: bad sequence length");
  }

  struct Cache {
    std::vector<Matrix<T>> gates;   // activated i, f, g, o per step, B x 4H
    std::vector<Matrix<T>> c_prev;  // B x H
    std::vector<Matrix<T>> h_prev;
    std::vector<Matrix<T>> tanh_c;  // tanh(c') per step
    std::vector<Eigen::Matrix<T, Eigen::Dynamic, 1>> mask;
  };
  auto cache = std::make_shared<Cache>();
  cache->gates.resize(static_cast<std::size_t>(steps));
  cache->c_prev.resize(static_cast<std::size_t>(steps));
  cache->h_prev.resize(static_cast<std::size_t>(steps));
  cache->tanh_c.resize(static_cast<std::size_t>(steps));
  cache->mask.resize(static_cast<std::size_t>(steps));

  Matrix<T> pre;
  pre.noalias() = x.value() * w.w_x.value();
  pre.rowwise() += w.b.value().row(0);

  Matrix<T> out = Matrix<T>::Zero(x.rows(), hd);
  Matrix<T> h = Matrix<T>::Zero(batch, hd);
  Matrix<T> c = Matrix<T>::Zero(batch, hd);
  Matrix<T> z(batch, 4 * hd);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const auto ts = static_cast<std::size_t>(t);
    Eigen::Matrix<T, Eigen::Dynamic, 1> m(batch);
    for (Eigen::Index b = 0; b < batch; ++b) m(b) = t < lengths[static_cast<std::size_t>(b)] ? T(1) : T(0);

    z = pre.middleRows(t * batch, batch);
    z.noalias() += h * w.w_h.value();
    Matrix<T> act(batch, 4 * hd);
    act.leftCols(2 * hd) = (T(1) / (T(1) + (-z.leftCols(2 * hd).array()).exp())).matrix();
    act.middleCols(2 * hd, hd) = z.middleCols(2 * hd, hd).array().tanh().matrix();
    act.rightCols(hd) = (T(1) / (T(1) + (-z.rightCols(hd).array()).exp())).matrix();

    Matrix<T> c_new = act.middleCols(hd, hd).cwiseProduct(c) + act.leftCols(hd).cwiseProduct(act.middleCols(2 * hd, hd));
    Matrix<T> tc = c_new.array().tanh().matrix();
    Matrix<T> h_new = act.rightCols(hd).cwiseProduct(tc);

    cache->gates[ts] = std::move(act);
    cache->c_prev[ts] = c;
    cache->h_prev[ts] = h;
    cache->tanh_c[ts] = std::move(tc);

    out.middleRows(t * batch, batch) = (h_new.array().colwise() * m.array()).matrix();
    const Eigen::Matrix<T, Eigen::Dynamic, 1> keep = (T(1) - m.array()).matrix();
    h = (h_new.array().colwise() * m.array() + h.array().colwise() * keep.array()).matrix();
    c = (c_new.array().colwise() * m.array() + c.array().colwise() * keep.array()).matrix();
    cache->mask[ts] = std::move(m);
  }

  Tape<T>* tape = x.tape();
  const Var<T> wx = w.w_x, wh = w.w_h, bias = w.b;
  return tape->Record(std::move(out), {x, wx, wh, bias},
                      [tape, x, wx, wh, bias, cache, batch, steps, hd, reverse](const Matrix<T>& g_out) {
    Matrix<T> dz_all(x.rows(), 4 * hd);
    Matrix<T> dwh = Matrix<T>::Zero(hd, 4 * hd);
    Matrix<T> dh = Matrix<T>::Zero(batch, hd);  // gradient w.r.t. carried state
    Matrix<T> dc = Matrix<T>::Zero(batch, hd);
    Matrix<T> dz(batch, 4 * hd);
    for (Eigen::Index s = steps - 1; s >= 0; --s) {
      const Eigen::Index t = reverse ? steps - 1 - s : s;
      const auto ts = static_cast<std::size_t>(t);
      const auto& m = cache->mask[ts];
      const Eigen::Matrix<T, Eigen::Dynamic, 1> keep = (T(1) - m.array()).matrix();
      const Matrix<T>& act = cache->gates[ts];
      const Matrix<T>& tc = cache->tanh_c[ts];

      const Matrix<T> dh_new = ((g_out.middleRows(t * batch, batch) + dh).array().colwise() * m.array()).matrix();
      const Matrix<T> dc_carry = (dc.array().colwise() * m.array()).matrix();
      const Matrix<T> dh_pass = (dh.array().colwise() * keep.array()).matrix();
      const Matrix<T> dc_pass = (dc.array().colwise() * keep.array()).matrix();

      const auto i = act.leftCols(hd).array();
      const auto f = act.middleCols(hd, hd).array();
      const auto gg = act.middleCols(2 * hd, hd).array();
      const auto o = act.rightCols(hd).array();

      const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> dct =
          dc_carry.array() + dh_new.array() * o * (T(1) - tc.array().square());
      dz.leftCols(hd) = (dct * gg * i * (T(1) - i)).matrix();
      dz.middleCols(hd, hd) = (dct * cache->c_prev[ts].array() * f * (T(1) - f)).matrix();
      dz.middleCols(2 * hd, hd) = (dct * i * (T(1) - gg.square())).matrix();
      dz.rightCols(hd) = (dh_new.array() * tc.array() * o * (T(1) - o)).matrix();

      dc = (dct * f).matrix() + dc_pass;
      dh = dh_pass;
      dh.noalias() += dz * wh.value().transpose();
      dwh.noalias() += cache->h_prev[ts].transpose() * dz;
      dz_all.middleRows(t * batch, batch) = dz;
    }
    if (tape->NeedsGrad(x)) tape->Accumulate(x, dz_all * wx.value().transpose());
    if (tape->NeedsGrad(wx)) tape->Accumulate(wx, x.value().transpose() * dz_all);
    if (tape->NeedsGrad(wh)) tape->Accumulate(wh, dwh);
    if (tape->NeedsGrad(bias)) tape->Accumulate(bias, dz_all.colwise().sum());
  });
}

// Forward and reverse passes concatenated per frame: (T * batch) x 2H.
template <typename T>
Var<T> BiLstmLayer(const Var<T>& x, const std::vector<int>& lengths, const LstmWeights<T>& fwd,
                   const LstmWeights<T>& bwd) {
  return ConcatCols<T>({LstmSequence(x, lengths, fwd, false), LstmSequence(x, lengths, bwd, true)});
}

}  // namespace respira::nn
