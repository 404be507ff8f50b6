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

// Dense numeric kernel shared by every module: a row-major matrix, a
// counter-based random generator, and the handful of vector ops the
// models and search routines need.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "s2st/error.hpp"

namespace s2st {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();
inline constexpr double kNormEpsilon = 1e-5;

// ---------------------------------------------------------------------------
// Matrix
// ---------------------------------------------------------------------------

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    detail::require(data_.size() == rows_ * cols_, "Matrix: data length != rows*cols");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// out = a * b
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  detail::require(a.cols() == b.rows(), "matmul: inner dimension mismatch");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto brow = b.row(k);
      auto orow = out.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) orow[j] += aik * brow[j];
    }
  }
  return out;
}

/// y = x * w for a single row vector x.
inline std::vector<double> vecmat(std::span<const double> x, const Matrix& w) {
  detail::require(x.size() == w.rows(), "vecmat: dimension mismatch");
  std::vector<double> y(w.cols(), 0.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    auto wrow = w.row(k);
    for (std::size_t j = 0; j < y.size(); ++j) y[j] += xk * wrow[j];
  }
  return y;
}

inline void add_row_bias(Matrix& m, std::span<const double> bias) {
  detail::require(bias.size() == m.cols(), "add_row_bias: dimension mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < bias.size(); ++c) row[c] += bias[c];
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

// ---------------------------------------------------------------------------
// SeededRng
//
// Counter-based generator. Draw i of stream (seed, stream) is
//   mix64(key + (i + 1) * 0x9E3779B97F4A7C15),
//   key = mix64(seed) ^ mix64(stream + 0xD1B54A32D192ED03),
// where mix64 is the splitmix64 xorshift-multiply finalizer. Child streams
// are SeededRng(seed, mix64(stream * 0x9E3779B97F4A7C15 + index + 1)); they
// depend only on (seed, stream, index), never on how many draws a sibling
// has consumed.
// ---------------------------------------------------------------------------

inline constexpr std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SeededRng {
 public:
  static constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

  SeededRng() : SeededRng(0, 0) {}
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0)
      : seed_(seed), stream_(stream), key_(mix64(seed) ^ mix64(stream + 0xD1B54A32D192ED03ULL)) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }
  std::uint64_t draws() const { return counter_; }

  std::uint64_t next_u64() {
    ++counter_;
    return mix64(key_ + counter_ * kGolden);
  }

  /// Uniform in [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n) {
    detail::require(n > 0, "SeededRng::below: n must be positive");
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

  /// Standard normal via Box-Muller; consumes two draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  SeededRng child(std::uint64_t index) const {
    return SeededRng(seed_, mix64(stream_ * kGolden + index + 1));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Distributions and selection
// ---------------------------------------------------------------------------

inline std::vector<double> softmax(std::span<const double> logits) {
  detail::require(!logits.empty(), "softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  detail::require(std::isfinite(mx), "softmax: non-finite maximum");
  std::vector<double> out(logits.size());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

/// Entries may be -inf (masked) as long as at least one is finite.
inline std::vector<double> log_softmax(std::span<const double> logits) {
  detail::require(!logits.empty(), "log_softmax: empty input");
  const double mx = *std::max_element(logits.begin(), logits.end());
  detail::require(std::isfinite(mx), "log_softmax: non-finite maximum");
  double total = 0.0;
  for (double v : logits) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

inline double log_sum_exp(std::span<const double> v) {
  const double mx = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(mx)) return mx;
  double total = 0.0;
  for (double x : v) total += std::exp(x - mx);
  return mx + std::log(total);
}

/// Indices of the min(k, n) largest scores, ordered by descending score and
/// then ascending index.
inline std::vector<std::size_t> top_k_select(std::span<const double> scores, std::size_t k) {
  detail::require(k >= 1, "top_k_select: k must be >= 1");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t keep = std::min(k, idx.size());
  auto better = [&](std::size_t a, std::size_t b) {
    if (scores[a] != scores[b]) return scores[a] > scores[b];
    return a < b;
  };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(keep), idx.end(), better);
  idx.resize(keep);
  return idx;
}

inline std::size_t argmax(std::span<const double> v) {
  detail::require(!v.empty(), "argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Inverse-CDF draw; consumes exactly one uniform from rng.
inline std::size_t categorical_sample(std::span<const double> probs, SeededRng& rng) {
  detail::require(!probs.empty(), "categorical_sample: empty distribution");
  double total = 0.0;
  for (double p : probs) {
    detail::require(p >= 0.0 && std::isfinite(p), "categorical_sample: negative or non-finite entry");
    total += p;
  }
  detail::require(std::abs(total - 1.0) <= 1e-9, "categorical_sample: probabilities do not sum to 1");
  const double u = rng.uniform();
  double cum = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = i;
    cum += probs[i];
    if (u < cum) return i;
  }
  // Rounding left u just above the cumulative sum.
  return last_positive;
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Zero-mean, unit-variance over the feature axis.
inline std::vector<double> normalize_features(std::span<const double> x, double eps = kNormEpsilon) {
  detail::require(!x.empty(), "normalize_features: empty input");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double var = 0.0;
  for (double v : x) var += (v - mean) * (v - mean);
  var /= n;
  const double inv = 1.0 / std::sqrt(var + eps);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - mean) * inv;
  return out;
}

struct LayerNormParams {
  std::vector<double> gamma;
  std::vector<double> beta;

  static LayerNormParams identity(std::size_t dim) {
    return {std::vector<double>(dim, 1.0), std::vector<double>(dim, 0.0)};
  }
};

inline Matrix layer_norm(const Matrix& x, const LayerNormParams& p) {
  detail::require(p.gamma.size() == x.cols() && p.beta.size() == x.cols(),
                  "layer_norm: dimension mismatch");
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto n = normalize_features(x.row(r));
    auto o = out.row(r);
    for (std::size_t c = 0; c < x.cols(); ++c) o[c] = p.gamma[c] * n[c] + p.beta[c];
  }
  return out;
}

/// Affine maps cond -> scale and cond -> shift for adaptive layer norm.
struct AdaLnParams {
  Matrix scale_w;  // cond_dim x dim
  std::vector<double> scale_b;
  Matrix shift_w;  // cond_dim x dim
  std::vector<double> shift_b;

  std::size_t cond_dim() const { return scale_w.rows(); }
  std::size_t dim() const { return scale_w.cols(); }

  static AdaLnParams zeros(std::size_t cond_dim, std::size_t dim) {
    return {Matrix(cond_dim, dim), std::vector<double>(dim, 0.0), Matrix(cond_dim, dim),
            std::vector<double>(dim, 0.0)};
  }
};

/// y = (1 + scale(cond)) * normalize(x) + shift(cond)
inline std::vector<double> ada_layer_norm(std::span<const double> x, std::span<const double> cond,
                                          const AdaLnParams& p) {
  detail::require(x.size() == p.dim(), "ada_layer_norm: feature dimension mismatch");
  detail::require(cond.size() == p.cond_dim(), "ada_layer_norm: condition dimension mismatch");
  auto scale = vecmat(cond, p.scale_w);
  auto shift = vecmat(cond, p.shift_w);
  auto n = normalize_features(x);
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    y[i] = (1.0 + scale[i] + p.scale_b[i]) * n[i] + shift[i] + p.shift_b[i];
  }
  return y;
}

inline Matrix ada_layer_norm(const Matrix& x, std::span<const double> cond, const AdaLnParams& p) {
  Matrix out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto y = ada_layer_norm(x.row(r), cond, p);
    std::copy(y.begin(), y.end(), out.row(r).begin());
  }
  return out;
}

inline double gelu(double x) {
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  return 0.5 * x * (1.0 + std::tanh(kC * (x + 0.044715 * x * x * x)));
}

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Runs fn(i) for i in [0, n) over up to `threads` workers with static
/// chunking. Callers write results into slot i, so output never depends on
/// scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  const std::size_t workers = std::min(threads, n);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace s2st
