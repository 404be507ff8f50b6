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

// Decoding of RVQ layers 1..N-1 with the NAR predictor.
//
// A whole layer is one decoding step, so its "vocabulary" is C^L fillings.
// Layer beam search draws n_sample fillings per beam entry by sampling each
// position independently from its top-K logits, scores each filling by the
// mean full-vocabulary log-probability of its tokens, and keeps the best
// beam_size (parent score + layer score) across all entries.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/numerics.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/toy_model.hpp"

namespace s2st {

struct LbsConfig {
  std::size_t n_codebook = 16;
  std::size_t beam_size = 10;
  std::size_t n_sample = 20;
  std::size_t top_k = 3;
  std::uint64_t seed = 0;
  std::size_t threads = 1;

  void validate(std::size_t codebook_size) const {
    detail::require(n_codebook >= 1, "LbsConfig: n_codebook must be >= 1");
    detail::require(beam_size >= 1, "LbsConfig: beam_size must be >= 1");
    detail::require(n_sample >= 1, "LbsConfig: n_sample must be >= 1");
    detail::require(top_k >= 1 && top_k <= codebook_size, "LbsConfig: top_k must be in [1, C]");
  }
};

struct LbsBeamEntry {
  CodeSequence codes;
  double total_score = 0.0;
};

struct LbsResult {
  CodeSequence codes;
  double total_score = 0.0;
  std::size_t steps = 0;
};

/// Row-wise log_softmax of a logits matrix.
inline Matrix log_softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto lp = log_softmax(logits.row(r));
    std::copy(lp.begin(), lp.end(), out.row(r).begin());
  }
  return out;
}

inline double mean_token_logprob(const Matrix& lprobs, std::span<const CodeIndex> ids) {
  if (ids.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t f = 0; f < ids.size(); ++f) s += lprobs(f, ids[f]);
  return s / static_cast<double>(ids.size());
}

namespace detail {

inline void check_generation_inputs(const CodeSequence& first_layer, const NarPredictor& model,
                                    std::size_t n_codebook) {
  require(first_layer.n_layers() == 1, "NAR generation: first_layer must carry exactly one layer");
  require(n_codebook >= 1 && n_codebook <= model.dims.n_codec_layers,
          "NAR generation: n_codebook exceeds the predictor's layers");
  require(first_layer.codebook_size() == model.dims.codebook_size, "NAR generation: codebook size mismatch");
}

}  // namespace detail

/// Sum over generated layers of the mean log-probability of their tokens.
inline double sequence_score(const CodeSequence& codes, const CodeSequence& prompt, const NarPredictor& model) {
  double total = 0.0;
  for (std::size_t n = 1; n < codes.n_layers(); ++n) {
    const Matrix lp = log_softmax_rows(nar_layer_logits(codes, prompt, n, model));
    total += mean_token_logprob(lp, codes.layer(n));
  }
  return total;
}

inline CodeSequence greedy_generate(const CodeSequence& first_layer, const CodeSequence& prompt,
                                    const NarPredictor& model, std::size_t n_codebook) {
  detail::check_generation_inputs(first_layer, model, n_codebook);
  CodeSequence codes = first_layer;
  for (std::size_t n = 1; n < n_codebook; ++n) {
    const Matrix logits = nar_layer_logits(codes, prompt, n, model);
    std::vector<CodeIndex> layer(codes.n_frames());
    for (std::size_t f = 0; f < layer.size(); ++f) layer[f] = static_cast<CodeIndex>(argmax(logits.row(f)));
    codes = codes.with_layer(layer);
  }
  return codes;
}

/// One layer of layer beam search. Candidate (b, s) draws from
/// rng.child(b * n_sample + s), so results do not depend on thread count.
/// The returned beam is sorted by descending total_score, ties in
/// generation order.
inline std::vector<LbsBeamEntry> lbs_step(const std::vector<LbsBeamEntry>& beam, std::size_t layer,
                                          const CodeSequence& prompt, const NarPredictor& model,
                                          const LbsConfig& cfg, const SeededRng& rng) {
  detail::require(!beam.empty(), "lbs_step: empty beam");
  cfg.validate(model.dims.codebook_size);

  std::vector<std::vector<LbsBeamEntry>> per_entry(beam.size());
  parallel_for(beam.size(), cfg.threads, [&](std::size_t b) {
    const CodeSequence& parent = beam[b].codes;
    detail::require(parent.n_layers() == layer, "lbs_step: beam entry has the wrong number of layers");
    const Matrix logits = nar_layer_logits(parent, prompt, layer, model);
    const Matrix lprobs = log_softmax_rows(logits);
    const std::size_t frames = parent.n_frames();

    std::vector<std::vector<std::size_t>> top_ids(frames);
    std::vector<std::vector<double>> top_probs(frames);
    for (std::size_t f = 0; f < frames; ++f) {
      top_ids[f] = top_k_select(logits.row(f), cfg.top_k);
      std::vector<double> values;
      values.reserve(top_ids[f].size());
      for (std::size_t id : top_ids[f]) values.push_back(logits(f, id));
      top_probs[f] = softmax(values);
    }

    auto& out = per_entry[b];
    out.reserve(cfg.n_sample);
    std::vector<CodeIndex> ids(frames);
    for (std::size_t s = 0; s < cfg.n_sample; ++s) {
      SeededRng draw = rng.child(b * cfg.n_sample + s);
      for (std::size_t f = 0; f < frames; ++f) {
        ids[f] = static_cast<CodeIndex>(top_ids[f][categorical_sample(top_probs[f], draw)]);
      }
      out.push_back({parent.with_layer(ids), beam[b].total_score + mean_token_logprob(lprobs, ids)});
    }
  });

  std::vector<LbsBeamEntry> pool;
  pool.reserve(beam.size() * cfg.n_sample);
  for (auto& group : per_entry)
    for (auto& e : group) pool.push_back(std::move(e));
  std::stable_sort(pool.begin(), pool.end(),
                   [](const LbsBeamEntry& a, const LbsBeamEntry& b) { return a.total_score > b.total_score; });
  if (pool.size() > cfg.beam_size) pool.resize(cfg.beam_size);
  return pool;
}

/// Runs lbs_step for layers 1..n_codebook-1 from a single-entry beam and
/// returns the best entry. Layer n samples from SeededRng(seed).child(n).
inline LbsResult lbs_generate(const CodeSequence& first_layer, const CodeSequence& prompt,
                              const NarPredictor& model, const LbsConfig& cfg) {
  detail::check_generation_inputs(first_layer, model, cfg.n_codebook);
  cfg.validate(model.dims.codebook_size);
  const SeededRng root(cfg.seed);
  std::vector<LbsBeamEntry> beam{{first_layer, 0.0}};
  LbsResult result;
  for (std::size_t layer = 1; layer < cfg.n_codebook; ++layer) {
    beam = lbs_step(beam, layer, prompt, model, cfg, root.child(layer));
    ++result.steps;
  }
  result.codes = beam.front().codes;
  result.total_score = beam.front().total_score;
  return result;
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

struct NarOracleLimits {
  double max_fillings_per_layer = 1e5;
  std::size_t max_layers = 3;
};

struct NarOracleResult {
  CodeSequence codes;
  double score = 0.0;
};

/// Every layer filling in lexicographic order: calls fn(ids) for all C^L.
template <typename Fn>
void for_each_filling(std::size_t frames, std::size_t codebook_size, Fn&& fn) {
  std::vector<CodeIndex> ids(frames, 0);
  while (true) {
    fn(std::span<const CodeIndex>(ids));
    std::size_t pos = frames;
    while (pos > 0) {
      --pos;
      if (++ids[pos] < codebook_size) break;
      ids[pos] = 0;
      if (pos == 0) return;
    }
    if (frames == 0) return;
  }
}

/// Maximizes the accumulated per-layer mean log-probability jointly over
/// all fillings of layers 1..n_codebook-1. Intermediate layers are
/// enumerated; the last layer's score separates per position, so its
/// maximum is the per-position argmax.
inline NarOracleResult exhaustive_nar_oracle(const CodeSequence& first_layer, const CodeSequence& prompt,
                                             const NarPredictor& model, std::size_t n_codebook,
                                             const NarOracleLimits& limits = {}) {
  detail::check_generation_inputs(first_layer, model, n_codebook);
  detail::require(n_codebook <= limits.max_layers, "exhaustive_nar_oracle: too many layers");
  const double per_layer = std::pow(static_cast<double>(model.dims.codebook_size),
                                    static_cast<double>(first_layer.n_frames()));
  detail::require(per_layer <= limits.max_fillings_per_layer, "exhaustive_nar_oracle: C^L exceeds limit");

  auto solve = [&](auto&& self, const CodeSequence& codes) -> NarOracleResult {
    const std::size_t layer = codes.n_layers();
    if (layer == n_codebook) return {codes, 0.0};
    const Matrix lprobs = log_softmax_rows(nar_layer_logits(codes, prompt, layer, model));
    if (layer + 1 == n_codebook) {
      std::vector<CodeIndex> ids(codes.n_frames());
      for (std::size_t f = 0; f < ids.size(); ++f) ids[f] = static_cast<CodeIndex>(argmax(lprobs.row(f)));
      return {codes.with_layer(ids), mean_token_logprob(lprobs, ids)};
    }
    NarOracleResult best{{}, kNegInf};
    for_each_filling(codes.n_frames(), model.dims.codebook_size, [&](std::span<const CodeIndex> ids) {
      const double here = mean_token_logprob(lprobs, ids);
      NarOracleResult rest = self(self, codes.with_layer(ids));
      if (here + rest.score > best.score) best = {std::move(rest.codes), here + rest.score};
    });
    return best;
  };
  return solve(solve, first_layer);
}

}  // namespace s2st
