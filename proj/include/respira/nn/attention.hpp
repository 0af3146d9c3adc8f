// SPDX-License-Identifier: Apache-2.0
// Copyright (C) 2026 The respira authors

#pragma once

#include <cmath>
#include <vector>

#include "respira/nn/ops.hpp"

namespace respira::nn {

// x W + b with W of shape in x out and b of shape 1 x out.
template <typename T>
Var<T> Linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  return AddRow(MatMul(x, w), b);
}

template <typename T>
struct FeedForwardWeights {
  Var<T> w1, b1, w2, b2;
};

template <typename T>
Var<T> FeedForwardGelu(const Var<T>& x, const FeedForwardWeights<T>& w) {
  return Linear(Gelu(Linear(x, w.w1, w.b1)), w.w2, w.b2);
}

template <typename T>
struct AttentionWeights {
  Var<T> w_q, b_q, w_k, b_k, w_v, b_v, w_o, b_o;  // D x D and 1 x D
};

// Multi-head scaled dot-product self-attention over one T x D sequence.
template <typename T>
Var<T> SelfAttention(const Var<T>& x, const AttentionWeights<T>& w, int heads) {
  const Eigen::Index d = x.cols();
  if (heads < 1 || d % heads != 0) {
    throw Error(ErrorCode::kShapeMismatch, "SelfAttention: dim " + std::to_string(d) + " not divisible by " +
                                               std::to_string(heads) + " heads");
  }
  const Eigen::Index dh = d / heads;
  const Var<T> q = Linear(x, w.w_q, w.b_q);
  const Var<T> k = Linear(x, w.w_k, w.b_k);
  const Var<T> v = Linear(x, w.w_v, w.b_v);
  const T scale = T(1) / std::sqrt(static_cast<T>(dh));
  std::vector<Var<T>> outs;
  outs.reserve(static_cast<std::size_t>(heads));
  for (int h = 0; h < heads; ++h) {
    const Var<T> qh = SliceCols(q, h * dh, dh);
    const Var<T> kh = SliceCols(k, h * dh, dh);
    const Var<T> vh = SliceCols(v, h * dh, dh);
    const Var<T> attn = SoftmaxRows(Scale(MatMulNT(qh, kh), scale));
    outs.push_back(MatMul(attn, vh));
  }
  const Var<T> merged = heads == 1 ? outs.front() : ConcatCols(outs);
  return Linear(merged, w.w_o, w.b_o);
}

template <typename T>
struct TransformerBlockWeights {
  AttentionWeights<T> attn;
  Var<T> ln1_g, ln1_b;
  FeedForwardWeights<T> ffn;
  Var<T> ln2_g, ln2_b;
};

// Post-norm block: x = LN(x + Attn(x)); x = LN(x + FFN(x)).
template <typename T>
Var<T> TransformerBlock(const Var<T>& x, const TransformerBlockWeights<T>& w, int heads) {
  const Var<T> h = LayerNormRows(Add(x, SelfAttention(x, w.attn, heads)), w.ln1_g, w.ln1_b);
  return LayerNormRows(Add(h, FeedForwardGelu(h, w.ffn)), w.ln2_g, w.ln2_b);
}

}  // namespace respira::nn
