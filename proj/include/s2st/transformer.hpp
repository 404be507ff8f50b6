// Copyright (c) 2026 The s2st Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Forward-only transformer pieces used by the toy scorers. Pre-norm blocks,
// bias-free attention projections, GELU feed-forward.

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "s2st/numerics.hpp"

namespace s2st::nn {

/// Weight draw used by every toy model: N(0, 1/fan_in), rounded to float so
/// that model files round-trip without loss.
inline Matrix random_matrix(std::size_t rows, std::size_t cols, SeededRng& rng) {
  Matrix m(rows, cols);
  const double scale = 1.0 / std::sqrt(static_cast<double>(rows));
  for (double& v : m.data()) v = static_cast<float>(rng.normal() * scale);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::size_t fan_in, SeededRng& rng) {
  std::vector<double> v(n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& x : v) x = static_cast<float>(rng.normal() * scale);
  return v;
}

struct AttentionParams {
  Matrix wq, wk, wv, wo;  // each dim x dim

  static AttentionParams random(std::size_t dim, SeededRng& rng) {
    AttentionParams p;
    p.wq = random_matrix(dim, dim, rng);
    p.wk = random_matrix(dim, dim, rng);
    p.wv = random_matrix(dim, dim, rng);
    p.wo = random_matrix(dim, dim, rng);
    return p;
  }
};

struct FfnParams {
  Matrix w1;  // dim x hidden
  std::vector<double> b1;
  Matrix w2;  // hidden x dim
  std::vector<double> b2;

  static FfnParams random(std::size_t dim, std::size_t hidden, SeededRng& rng) {
    FfnParams p;
    p.w1 = random_matrix(dim, hidden, rng);
    p.b1 = random_vector(hidden, dim, rng);
    p.w2 = random_matrix(hidden, dim, rng);
    p.b2 = random_vector(dim, hidden, rng);
    return p;
  }
};

/// Multi-head scaled dot-product attention of `queries` over `memory`.
/// With `causal`, query row i sees memory rows 0..i only.
/// Scaled dot-product attention over already projected q, k, v; returns the
/// mixed values before the output projection. With `causal`, query row i is
/// position first_query + i and sees key rows 0..first_query + i.
inline Matrix attend(const Matrix& q, const Matrix& k, const Matrix& v, std::size_t heads, bool causal,
                     std::size_t first_query = 0) {
  const std::size_t dim = q.cols();
  detail::require(heads >= 1 && dim % heads == 0, "attention: heads must divide model dim");
  detail::require(k.cols() == dim && v.cols() == dim && k.rows() == v.rows(), "attention: key/value shape mismatch");
  const std::size_t head_dim = dim / heads;
  const double inv_scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  Matrix mixed(q.rows(), dim);
  std::vector<double> scores;
  for (std::size_t h = 0; h < heads; ++h) {
    const std::size_t off = h * head_dim;
    for (std::size_t i = 0; i < q.rows(); ++i) {
      const std::size_t visible = causal ? std::min(first_query + i + 1, k.rows()) : k.rows();
      if (visible == 0) continue;
      scores.assign(visible, 0.0);
      for (std::size_t j = 0; j < visible; ++j) {
        double s = 0.0;
        for (std::size_t c = 0; c < head_dim; ++c) s += q(i, off + c) * k(j, off + c);
        scores[j] = s * inv_scale;
      }
      const auto w = softmax(scores);
      for (std::size_t j = 0; j < visible; ++j) {
        for (std::size_t c = 0; c < head_dim; ++c) mixed(i, off + c) += w[j] * v(j, off + c);
      }
    }
  }
  return mixed;
}

inline Matrix attention(const Matrix& queries, const Matrix& memory, const AttentionParams& p,
                        std::size_t heads, bool causal) {
  detail::require(memory.cols() == queries.cols(), "attention: memory dimension mismatch");
  return matmul(attend(matmul(queries, p.wq), matmul(memory, p.wk), matmul(memory, p.wv), heads, causal), p.wo);
}

/// Rows of `a` followed by rows of `b`.
inline Matrix vstack(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.cols() || a.rows() == 0, "vstack: column mismatch");
  Matrix out(a.rows() + b.rows(), b.cols());
  std::copy(a.data().begin(), a.data().end(), out.data().begin());
  std::copy(b.data().begin(), b.data().end(), out.data().begin() + static_cast<std::ptrdiff_t>(a.size()));
  return out;
}

/// Projected keys and values, one row per attended position.
struct KvCache {
  Matrix k;
  Matrix v;
};

inline Matrix feed_forward(const Matrix& x, const FfnParams& p) {
  Matrix h = matmul(x, p.w1);
  add_row_bias(h, p.b1);
  for (double& v : h.data()) v = gelu(v);
  Matrix out = matmul(h, p.w2);
  add_row_bias(out, p.b2);
  return out;
}

inline void add_inplace(Matrix& x, const Matrix& delta) {
  for (std::size_t i = 0; i < x.size(); ++i) x.data()[i] += delta.data()[i];
}

/// Sinusoidal position table rows [offset, offset + n).
inline Matrix sinusoidal_positions(std::size_t n, std::size_t dim, std::size_t offset = 0) {
  Matrix pe(n, dim);
  for (std::size_t t = 0; t < n; ++t) {
    const double pos = static_cast<double>(t + offset);
    for (std::size_t i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / static_cast<double>(dim));
      pe(t, i) = (i % 2 == 0) ? std::sin(pos * rate) : std::cos(pos * rate);
    }
  }
  return pe;
}

struct EncoderBlock {
  LayerNormParams ln1;
  AttentionParams attn;
  LayerNormParams ln2;
  FfnParams ffn;

  static EncoderBlock random(std::size_t dim, std::size_t hidden, SeededRng& rng) {
    return {LayerNormParams::identity(dim), AttentionParams::random(dim, rng),
            LayerNormParams::identity(dim), FfnParams::random(dim, hidden, rng)};
  }

  Matrix forward(Matrix x, std::size_t heads, bool causal = false) const {
    const Matrix h = layer_norm(x, ln1);
    add_inplace(x, attention(h, h, attn, heads, causal));
    add_inplace(x, feed_forward(layer_norm(x, ln2), ffn));
    return x;
  }
};

struct DecoderBlock {
  LayerNormParams ln_self;
  AttentionParams self_attn;
  LayerNormParams ln_cross;
  AttentionParams cross_attn;
  LayerNormParams ln_ffn;
  FfnParams ffn;

  static DecoderBlock random(std::size_t dim, std::size_t hidden, SeededRng& rng) {
    DecoderBlock b;
    b.ln_self = LayerNormParams::identity(dim);
    b.self_attn = AttentionParams::random(dim, rng);
    b.ln_cross = LayerNormParams::identity(dim);
    b.cross_attn = AttentionParams::random(dim, rng);
    b.ln_ffn = LayerNormParams::identity(dim);
    b.ffn = FfnParams::random(dim, hidden, rng);
    return b;
  }

  KvCache cross_kv(const Matrix& memory) const {
    return {matmul(memory, cross_attn.wk), matmul(memory, cross_attn.wv)};
  }

  /// Runs rows `x`, which continue the positions already in `self`, and
  /// appends their self-attention keys and values to `self`. `cross` may
  /// be empty.
  Matrix forward_incremental(Matrix x, KvCache& self, const KvCache& cross, std::size_t heads) const {
    const std::size_t first = self.k.rows();
    const Matrix h = layer_norm(x, ln_self);
    self.k = vstack(self.k, matmul(h, self_attn.wk));
    self.v = vstack(self.v, matmul(h, self_attn.wv));
    add_inplace(x, matmul(attend(matmul(h, self_attn.wq), self.k, self.v, heads, true, first), self_attn.wo));
    if (cross.k.rows() > 0) {
      const Matrix q = matmul(layer_norm(x, ln_cross), cross_attn.wq);
      add_inplace(x, matmul(attend(q, cross.k, cross.v, heads, false), cross_attn.wo));
    }
    add_inplace(x, feed_forward(layer_norm(x, ln_ffn), ffn));
    return x;
  }

  /// Causal self-attention, then cross-attention over `memory` (may be empty).
  Matrix forward(Matrix x, const Matrix& memory, std::size_t heads) const {
    KvCache self{Matrix(0, x.cols()), Matrix(0, x.cols())};
    return forward_incremental(std::move(x), self, cross_kv(memory), heads);
  }
};

/// Non-causal block whose norms are conditioned on a per-call vector.
struct AdaBlock {
  AdaLnParams norm1;
  AttentionParams attn;
  AdaLnParams norm2;
  FfnParams ffn;

  static AdaLnParams random_ada(std::size_t cond_dim, std::size_t dim, SeededRng& rng) {
    AdaLnParams p;
    p.scale_w = random_matrix(cond_dim, dim, rng);
    p.scale_b = random_vector(dim, cond_dim, rng);
    p.shift_w = random_matrix(cond_dim, dim, rng);
    p.shift_b = random_vector(dim, cond_dim, rng);
    return p;
  }

  static AdaBlock random(std::size_t dim, std::size_t hidden, SeededRng& rng) {
    AdaBlock b;
    b.norm1 = random_ada(dim, dim, rng);
    b.attn = AttentionParams::random(dim, rng);
    b.norm2 = random_ada(dim, dim, rng);
    b.ffn = FfnParams::random(dim, hidden, rng);
    return b;
  }

  Matrix forward(Matrix x, std::span<const double> cond, std::size_t heads) const {
    const Matrix h = ada_layer_norm(x, cond, norm1);
    add_inplace(x, attention(h, h, attn, heads, false));
    add_inplace(x, feed_forward(ada_layer_norm(x, cond, norm2), ffn));
    return x;
  }
};

}  // namespace s2st::nn
