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

// Residual vector quantizer with factorized, unit-norm codebooks.
//
// Each layer projects the incoming residual into a small code space, L2
// normalizes it and picks the nearest unit-norm entry. The chosen entry is
// mapped back to feature space through that entry's row of `out_proj`, and
// the difference is handed to the next layer.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/numerics.hpp"
#include "s2st/transformer.hpp"

namespace s2st {

using CodeIndex = std::uint32_t;

inline constexpr double kCodeNormGuard = 1e-9;

struct RvqConfig {
  std::size_t n_layers = 16;
  std::size_t codebook_size = 256;
  std::size_t feature_dim = 64;
  std::size_t code_dim = 8;
  double token_rate_hz = 50.0;
  std::size_t downsample = 320;
  double ema_decay = 0.99;
  double dead_threshold = 1.0;
  /// Weight of the L1 term relative to the cosine term in distillation_loss.
  double distill_l1_weight = 1.0;

  std::size_t sample_rate() const {
    return static_cast<std::size_t>(std::llround(token_rate_hz * static_cast<double>(downsample)));
  }

  void validate() const {
    detail::require(n_layers >= 1, "RvqConfig: n_layers must be >= 1");
    detail::require(codebook_size >= 1, "RvqConfig: codebook_size must be >= 1");
    detail::require(codebook_size <= 65536, "RvqConfig: codebook_size must fit in u16 codes");
    detail::require(feature_dim >= 1, "RvqConfig: feature_dim must be >= 1");
    detail::require(code_dim >= 1 && code_dim <= feature_dim,
                    "RvqConfig: code_dim must be in [1, feature_dim]");
    detail::require(downsample >= 2, "RvqConfig: downsample must be >= 2");
    detail::require(sample_rate() == 16000, "RvqConfig: token_rate_hz * downsample must equal 16000");
    detail::require(ema_decay >= 0.0 && ema_decay < 1.0, "RvqConfig: ema_decay must be in [0, 1)");
  }

  friend bool operator==(const RvqConfig&, const RvqConfig&) = default;
};

/// Frame-major features at the codec token rate.
struct FeatureSequence {
  Matrix frames;  // n_frames x feature_dim
  double frame_rate_hz = 50.0;

  std::size_t n_frames() const { return frames.rows(); }
  std::size_t feature_dim() const { return frames.cols(); }
  double duration_s() const { return static_cast<double>(n_frames()) / frame_rate_hz; }

  /// Rows [begin, end).
  FeatureSequence slice(std::size_t begin, std::size_t end) const {
    detail::require(begin <= end && end <= n_frames(), "FeatureSequence::slice: range out of bounds");
    Matrix m(end - begin, feature_dim());
    for (std::size_t r = begin; r < end; ++r) {
      auto src = frames.row(r);
      std::copy(src.begin(), src.end(), m.row(r - begin).begin());
    }
    return {std::move(m), frame_rate_hz};
  }

  friend bool operator==(const FeatureSequence&, const FeatureSequence&) = default;
};

/// Grid of codec token indices stored layer-major: codes[layer * n_frames + frame].
class CodeSequence {
 public:
  CodeSequence() = default;
  CodeSequence(std::size_t n_layers, std::size_t n_frames, std::size_t codebook_size,
               double token_rate_hz = 50.0)
      : n_layers_(n_layers),
        n_frames_(n_frames),
        codebook_size_(codebook_size),
        token_rate_hz_(token_rate_hz),
        codes_(n_layers * n_frames, 0) {
    detail::require(codebook_size >= 1, "CodeSequence: codebook_size must be positive");
  }
  CodeSequence(std::size_t n_layers, std::size_t n_frames, std::size_t codebook_size,
               std::vector<CodeIndex> codes, double token_rate_hz = 50.0)
      : n_layers_(n_layers),
        n_frames_(n_frames),
        codebook_size_(codebook_size),
        token_rate_hz_(token_rate_hz),
        codes_(std::move(codes)) {
    detail::require(codes_.size() == n_layers_ * n_frames_, "CodeSequence: grid size mismatch");
    for (CodeIndex c : codes_) detail::require(c < codebook_size_, "CodeSequence: index out of range");
  }

  std::size_t n_layers() const { return n_layers_; }
  std::size_t n_frames() const { return n_frames_; }
  std::size_t codebook_size() const { return codebook_size_; }
  double token_rate_hz() const { return token_rate_hz_; }

  CodeIndex at(std::size_t layer, std::size_t frame) const { return codes_[layer * n_frames_ + frame]; }
  void set(std::size_t layer, std::size_t frame, CodeIndex v) {
    detail::require(v < codebook_size_, "CodeSequence::set: index out of range");
    codes_[layer * n_frames_ + frame] = v;
  }

  std::span<const CodeIndex> layer(std::size_t l) const { return {codes_.data() + l * n_frames_, n_frames_}; }
  const std::vector<CodeIndex>& codes() const { return codes_; }

  /// First `n` layers.
  CodeSequence prefix(std::size_t n) const {
    detail::require(n <= n_layers_, "CodeSequence::prefix: too many layers");
    return {n, n_frames_, codebook_size_,
            std::vector<CodeIndex>(codes_.begin(), codes_.begin() + static_cast<std::ptrdiff_t>(n * n_frames_)),
            token_rate_hz_};
  }

  /// Copy with `layer_codes` appended as a new last layer.
  CodeSequence with_layer(std::span<const CodeIndex> layer_codes) const {
    detail::require(layer_codes.size() == n_frames_, "CodeSequence::with_layer: frame count mismatch");
    std::vector<CodeIndex> grid = codes_;
    grid.insert(grid.end(), layer_codes.begin(), layer_codes.end());
    return {n_layers_ + 1, n_frames_, codebook_size_, std::move(grid), token_rate_hz_};
  }

  friend bool operator==(const CodeSequence&, const CodeSequence&) = default;

 private:
  std::size_t n_layers_ = 0;
  std::size_t n_frames_ = 0;
  std::size_t codebook_size_ = 1;
  double token_rate_hz_ = 50.0;
  std::vector<CodeIndex> codes_;
};

struct Codebook {
  std::size_t layer = 0;
  Matrix entries;   // C x code_dim, unit rows
  Matrix in_proj;   // feature_dim x code_dim
  Matrix out_proj;  // C x feature_dim; row j is the feature-space image of entry j
  std::vector<double> ema_counts;

  std::size_t size() const { return entries.rows(); }
  std::size_t code_dim() const { return entries.cols(); }
  std::size_t feature_dim() const { return in_proj.rows(); }

  friend bool operator==(const Codebook&, const Codebook&) = default;
};

struct RvqCodec {
  RvqConfig config;
  std::vector<Codebook> books;

  friend bool operator==(const RvqCodec&, const RvqCodec&) = default;
};

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

/// Half-open DFT bin range [lo, hi) covered by feature band `band`.
inline std::pair<std::size_t, std::size_t> band_bins(std::size_t band, std::size_t n_bands, std::size_t n_bins) {
  return {band * n_bins / n_bands, (band + 1) * n_bins / n_bands};
}

/// One frame per `downsample` samples; each frame is log(1 + mean |DFT|/N)
/// over equal-width bands of the non-negative frequency bins.
inline FeatureSequence featurize(std::span<const std::int16_t> pcm, const RvqConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.downsample;
  detail::require(pcm.size() >= n, "featurize: input shorter than one frame");
  const std::size_t n_bins = n / 2 + 1;
  detail::require(cfg.feature_dim <= n_bins, "featurize: more bands than DFT bins");
  const std::size_t n_frames = pcm.size() / n;

  std::vector<double> cos_t(n), sin_t(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double a = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    cos_t[m] = std::cos(a);
    sin_t[m] = std::sin(a);
  }

  FeatureSequence out{Matrix(n_frames, cfg.feature_dim), cfg.token_rate_hz};
  std::vector<double> x(n), mag(n_bins);
  for (std::size_t f = 0; f < n_frames; ++f) {
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(pcm[f * n + i]) / 32768.0;
    for (std::size_t k = 0; k < n_bins; ++k) {
      double re = 0.0, im = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = (k * i) % n;
        re += x[i] * cos_t[m];
        im -= x[i] * sin_t[m];
      }
      mag[k] = std::sqrt(re * re + im * im) / static_cast<double>(n);
    }
    for (std::size_t b = 0; b < cfg.feature_dim; ++b) {
      const auto [lo, hi] = band_bins(b, cfg.feature_dim, n_bins);
      double s = 0.0;
      for (std::size_t k = lo; k < hi; ++k) s += mag[k];
      out.frames(f, b) = std::log1p(s / static_cast<double>(hi - lo));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// quantization
// ---------------------------------------------------------------------------

struct LayerQuantization {
  CodeIndex index = 0;
  std::vector<double> quantized;
  std::vector<double> residual;
};

namespace detail {

/// Normalized projection of `residual`; empty when the projection is below
/// the guard.
inline std::vector<double> project_normalized(std::span<const double> residual, const Matrix& in_proj) {
  auto z = vecmat(residual, in_proj);
  const double norm = l2_norm(z);
  if (norm < kCodeNormGuard) return {};
  for (double& v : z) v /= norm;
  return z;
}

/// Nearest entry by squared Euclidean distance; ties go to the smaller index.
inline CodeIndex nearest_entry(std::span<const double> z, const Matrix& entries) {
  if (z.empty()) return 0;
  CodeIndex best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < entries.rows(); ++j) {
    auto e = entries.row(j);
    double d = 0.0;
    for (std::size_t c = 0; c < z.size(); ++c) d += (z[c] - e[c]) * (z[c] - e[c]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<CodeIndex>(j);
    }
  }
  return best;
}

}  // namespace detail

inline LayerQuantization quantize_layer(std::span<const double> residual, const Codebook& book) {
  detail::require(residual.size() == book.feature_dim(), "quantize_layer: residual dimension mismatch");
  const auto z = detail::project_normalized(residual, book.in_proj);
  LayerQuantization q;
  q.index = detail::nearest_entry(z, book.entries);
  auto image = book.out_proj.row(q.index);
  q.quantized.assign(image.begin(), image.end());
  q.residual.resize(residual.size());
  for (std::size_t i = 0; i < residual.size(); ++i) q.residual[i] = residual[i] - q.quantized[i];
  return q;
}

inline CodeSequence encode(const FeatureSequence& feat, const RvqCodec& codec, std::size_t n_layers,
                           std::size_t threads = 1) {
  detail::require(n_layers >= 1, "encode: n_layers must be >= 1");
  detail::require(n_layers <= codec.books.size(), "encode: more layers requested than the codec has");
  detail::require(feat.feature_dim() == codec.config.feature_dim, "encode: feature dimension mismatch");
  CodeSequence out(n_layers, feat.n_frames(), codec.config.codebook_size, codec.config.token_rate_hz);
  std::vector<CodeIndex> grid(n_layers * feat.n_frames());
  parallel_for(feat.n_frames(), threads, [&](std::size_t f) {
    auto src = feat.frames.row(f);
    std::vector<double> residual(src.begin(), src.end());
    for (std::size_t l = 0; l < n_layers; ++l) {
      auto q = quantize_layer(residual, codec.books[l]);
      grid[l * feat.n_frames() + f] = q.index;
      residual = std::move(q.residual);
    }
  });
  return {n_layers, feat.n_frames(), codec.config.codebook_size, std::move(grid), codec.config.token_rate_hz};
}

inline FeatureSequence decode(const CodeSequence& codes, const RvqCodec& codec, std::size_t n_layers) {
  detail::require(n_layers <= codes.n_layers(), "decode: more layers requested than the codes carry");
  detail::require(n_layers <= codec.books.size(), "decode: more layers requested than the codec has");
  FeatureSequence out{Matrix(codes.n_frames(), codec.config.feature_dim), codec.config.token_rate_hz};
  for (std::size_t f = 0; f < codes.n_frames(); ++f) {
    auto row = out.frames.row(f);
    for (std::size_t l = 0; l < n_layers; ++l) {
      const CodeIndex idx = codes.at(l, f);
      detail::require(idx < codec.books[l].size(), "decode: code index outside codebook");
      auto image = codec.books[l].out_proj.row(idx);
      for (std::size_t c = 0; c < row.size(); ++c) row[c] += image[c];
    }
  }
  return out;
}

inline double mean_squared_error(const FeatureSequence& a, const FeatureSequence& b) {
  detail::require(a.frames.rows() == b.frames.rows() && a.frames.cols() == b.frames.cols(),
                  "mean_squared_error: shape mismatch");
  if (a.frames.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < a.frames.size(); ++i) {
    const double d = a.frames.data()[i] - b.frames.data()[i];
    s += d * d;
  }
  return s / static_cast<double>(a.frames.size());
}

// ---------------------------------------------------------------------------
// fitting
// ---------------------------------------------------------------------------

namespace detail {

inline std::vector<double> unit_basis(std::size_t dim, std::size_t i) {
  std::vector<double> e(dim, 0.0);
  e[i % dim] = 1.0;
  return e;
}

/// k-means++ seeding over normalized projections. Zero projections are never
/// picked while a nonzero one exists.
inline Matrix seed_entries(const std::vector<std::vector<double>>& z, std::size_t count, std::size_t code_dim,
                           SeededRng& rng) {
  Matrix entries(count, code_dim);
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < z.size(); ++i)
    if (!z[i].empty()) usable.push_back(i);

  if (usable.empty()) {
    for (std::size_t j = 0; j < count; ++j) {
      auto e = unit_basis(code_dim, j);
      std::copy(e.begin(), e.end(), entries.row(j).begin());
    }
    return entries;
  }

  auto put = [&](std::size_t j, const std::vector<double>& v) { std::copy(v.begin(), v.end(), entries.row(j).begin()); };
  put(0, z[usable[rng.below(usable.size())]]);

  std::vector<double> d2(usable.size(), std::numeric_limits<double>::infinity());
  for (std::size_t j = 1; j < count; ++j) {
    auto last = entries.row(j - 1);
    double total = 0.0;
    for (std::size_t u = 0; u < usable.size(); ++u) {
      const auto& p = z[usable[u]];
      double d = 0.0;
      for (std::size_t c = 0; c < code_dim; ++c) d += (p[c] - last[c]) * (p[c] - last[c]);
      d2[u] = std::min(d2[u], d);
      total += d2[u];
    }
    std::size_t pick = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cum = 0.0;
      pick = usable.size() - 1;
      for (std::size_t u = 0; u < usable.size(); ++u) {
        cum += d2[u];
        if (target < cum && d2[u] > 0.0) {
          pick = u;
          break;
        }
      }
      while (d2[pick] == 0.0 && pick > 0) --pick;
    } else {
      pick = rng.below(usable.size());
    }
    put(j, z[usable[pick]]);
  }
  return entries;
}

}  // namespace detail

/// Layer-wise spherical k-means with EMA updates.
///
/// For each layer: draw a random in-projection, seed entries k-means++ style
/// from the normalized projected residuals, then run `iters` rounds of
/// assignment + EMA update (entries renormalized after every update, entries
/// whose EMA count drops below the dead threshold re-seeded from a random
/// residual). A final assignment sets each entry's out-projection to the mean
/// of the residuals it captures, and those residuals feed the next layer.
inline RvqCodec fit_codebooks(std::span<const FeatureSequence> train, const RvqConfig& cfg, std::size_t iters,
                              const SeededRng& rng) {
  cfg.validate();
  std::size_t total_frames = 0;
  for (const auto& fs : train) {
    detail::require(fs.feature_dim() == cfg.feature_dim, "fit_codebooks: feature dimension mismatch");
    total_frames += fs.n_frames();
  }
  detail::require(total_frames > 0, "fit_codebooks: empty training set");

  std::vector<std::vector<double>> residuals;
  residuals.reserve(total_frames);
  for (const auto& fs : train)
    for (std::size_t f = 0; f < fs.n_frames(); ++f) {
      auto r = fs.frames.row(f);
      residuals.emplace_back(r.begin(), r.end());
    }

  const std::size_t c_size = cfg.codebook_size;
  const std::size_t d = cfg.code_dim;
  const double step = 1.0 - cfg.ema_decay;

  RvqCodec codec{cfg, {}};
  for (std::size_t layer = 0; layer < cfg.n_layers; ++layer) {
    SeededRng layer_rng = rng.child(layer);
    Codebook book;
    book.layer = layer;
    book.in_proj = nn::random_matrix(cfg.feature_dim, d, layer_rng);

    std::vector<std::vector<double>> z(residuals.size());
    for (std::size_t i = 0; i < residuals.size(); ++i) z[i] = detail::project_normalized(residuals[i], book.in_proj);
    std::vector<std::size_t> usable;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (!z[i].empty()) usable.push_back(i);

    book.entries = detail::seed_entries(z, c_size, d, layer_rng);
    Matrix key_sum = book.entries;
    book.ema_counts.assign(c_size, 1.0);

    std::vector<CodeIndex> assign(residuals.size());
    for (std::size_t it = 0; it < iters; ++it) {
      Matrix batch_sum(c_size, d);
      std::vector<double> batch_count(c_size, 0.0);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const CodeIndex j = detail::nearest_entry(z[i], book.entries);
        batch_count[j] += 1.0;
        if (!z[i].empty())
          for (std::size_t c = 0; c < d; ++c) batch_sum(j, c) += z[i][c];
      }
      for (std::size_t j = 0; j < c_size; ++j) {
        book.ema_counts[j] += step * (batch_count[j] - book.ema_counts[j]);
        auto ks = key_sum.row(j);
        for (std::size_t c = 0; c < d; ++c) ks[c] += step * (batch_sum(j, c) - ks[c]);
        const double n = l2_norm(ks);
        if (n >= kCodeNormGuard) {
          auto e = book.entries.row(j);
          for (std::size_t c = 0; c < d; ++c) e[c] = ks[c] / n;
        }
        if (book.ema_counts[j] < cfg.dead_threshold && !usable.empty()) {
          const auto& fresh = z[usable[layer_rng.below(usable.size())]];
          std::copy(fresh.begin(), fresh.end(), book.entries.row(j).begin());
          std::copy(fresh.begin(), fresh.end(), key_sum.row(j).begin());
          book.ema_counts[j] = 1.0;
        }
      }
    }

    book.out_proj = Matrix(c_size, cfg.feature_dim);
    std::vector<double> members(c_size, 0.0);
    for (std::size_t i = 0; i < z.size(); ++i) {
      assign[i] = detail::nearest_entry(z[i], book.entries);
      members[assign[i]] += 1.0;
      auto o = book.out_proj.row(assign[i]);
      for (std::size_t c = 0; c < cfg.feature_dim; ++c) o[c] += residuals[i][c];
    }
    for (std::size_t j = 0; j < c_size; ++j) {
      if (members[j] == 0.0) continue;
      for (double& v : book.out_proj.row(j)) v /= members[j];
    }
    for (std::size_t i = 0; i < residuals.size(); ++i) {
      auto o = book.out_proj.row(assign[i]);
      for (std::size_t c = 0; c < cfg.feature_dim; ++c) residuals[i][c] -= o[c];
    }
    codec.books.push_back(std::move(book));
  }
  return codec;
}

// ---------------------------------------------------------------------------
// semantic distillation
// ---------------------------------------------------------------------------

struct DistillationLoss {
  double cosine_term = 0.0;  // mean over frames of (1 - cos)
  double l1_term = 0.0;      // mean absolute difference
  double total = 0.0;        // cosine_term + weight * l1_term
};

inline double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (na == 0.0 && nb == 0.0) return 1.0;
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot(a, b) / (na * nb);
}

/// Compares the first-layer reconstruction of `codes` against teacher frames.
inline DistillationLoss distillation_loss(const CodeSequence& codes, const RvqCodec& codec,
                                          const FeatureSequence& teacher) {
  detail::require(teacher.n_frames() == codes.n_frames(), "distillation_loss: frame count mismatch");
  detail::require(codes.n_layers() >= 1, "distillation_loss: codes carry no layers");
  detail::require(teacher.feature_dim() == codec.config.feature_dim, "distillation_loss: feature dimension mismatch");
  DistillationLoss loss;
  if (codes.n_frames() == 0) return loss;
  const FeatureSequence recon = decode(codes, codec, 1);
  double l1 = 0.0;
  for (std::size_t f = 0; f < codes.n_frames(); ++f) {
    auto r = recon.frames.row(f);
    auto t = teacher.frames.row(f);
    loss.cosine_term += 1.0 - cosine_similarity(r, t);
    double frame_l1 = 0.0;
    for (std::size_t c = 0; c < r.size(); ++c) frame_l1 += std::abs(r[c] - t[c]);
    l1 += frame_l1 / static_cast<double>(r.size());
  }
  const double n = static_cast<double>(codes.n_frames());
  loss.cosine_term /= n;
  loss.l1_term = l1 / n;
  loss.total = loss.cosine_term + codec.config.distill_l1_weight * loss.l1_term;
  return loss;
}

}  // namespace s2st
