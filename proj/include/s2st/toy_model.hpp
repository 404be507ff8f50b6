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

// Small seeded scorers behind the two decoders.
//
// JointScorer is an encoder-decoder over one combined vocabulary: text ids,
// a separator, first-layer codec ids and an end token. Its cross-attention
// memory is the encoded semantic features, optionally followed in time by
// the isochrony embedding sequence. A pooled acoustic embedding, when given,
// replaces the separator's input embedding.
//
// NarPredictor is a non-causal transformer with adaptive layer norm that
// predicts RVQ layer n from the summed embeddings of layers 0..n-1, with an
// all-layer prompt prepended in time.

#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/isochrony.hpp"
#include "s2st/numerics.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/transformer.hpp"

namespace s2st {

using Token = std::uint32_t;

/// [0, n_text) text | n_text SEP | codec ids | EOS
struct VocabLayout {
  std::size_t n_text = 0;
  std::size_t codebook_size = 0;

  Token sep_id() const { return static_cast<Token>(n_text); }
  Token codec_base() const { return static_cast<Token>(n_text + 1); }
  Token eos_id() const { return static_cast<Token>(n_text + 1 + codebook_size); }
  std::size_t size() const { return n_text + codebook_size + 2; }

  bool is_text(Token t) const { return t < n_text; }
  bool is_codec(Token t) const { return t >= codec_base() && t < eos_id(); }
  Token codec_token(CodeIndex c) const { return codec_base() + c; }
  CodeIndex codec_index(Token t) const { return t - codec_base(); }

  friend bool operator==(const VocabLayout&, const VocabLayout&) = default;
};

struct ToyDims {
  std::size_t d_model = 32;
  std::size_t heads = 2;
  std::size_t blocks = 2;
  std::size_t ffn_hidden = 64;
  std::size_t acoustic_blocks = 1;
  std::size_t n_text = 32;
  std::size_t codebook_size = 256;
  std::size_t feature_dim = 64;
  std::size_t n_codec_layers = 16;
  std::size_t max_iso_frames = 64;
  /// Sinusoidal positions in the acoustic encoder before pooling.
  bool acoustic_positions = true;

  VocabLayout vocab() const { return {n_text, codebook_size}; }

  void validate() const {
    detail::require(d_model >= 1 && heads >= 1 && d_model % heads == 0, "ToyDims: heads must divide d_model");
    detail::require(blocks >= 1 && ffn_hidden >= 1 && feature_dim >= 1, "ToyDims: dims must be positive");
    detail::require(n_text >= 1 && codebook_size >= 1, "ToyDims: vocabulary must be non-empty");
    detail::require(n_codec_layers >= 1 && max_iso_frames >= 1, "ToyDims: dims must be positive");
  }

  friend bool operator==(const ToyDims&, const ToyDims&) = default;
};

struct JointScorer {
  ToyDims dims;
  Matrix sem_in;  // feature_dim x d
  std::vector<double> sem_in_b;
  std::vector<nn::EncoderBlock> sem_blocks;
  LayerNormParams sem_norm;
  Matrix ac_in;  // feature_dim x d
  std::vector<double> ac_in_b;
  std::vector<nn::EncoderBlock> ac_blocks;
  LayerNormParams ac_norm;
  IsoEmbeddings iso;
  Matrix tok_emb;  // V x d
  std::vector<nn::DecoderBlock> dec_blocks;
  LayerNormParams dec_norm;
  Matrix out_w;  // d x V
  std::vector<double> out_b;

  VocabLayout vocab() const { return dims.vocab(); }
};

struct NarPredictor {
  ToyDims dims;
  std::vector<Matrix> code_emb;  // n_codec_layers tables of C x d
  Matrix layer_emb;              // n_codec_layers x d
  std::vector<nn::AdaBlock> blocks;
  AdaLnParams final_norm;
  Matrix head_w;  // d x C
  std::vector<double> head_b;
};

struct ToyModel {
  ToyDims dims;
  JointScorer joint;
  NarPredictor nar;
};

// ---------------------------------------------------------------------------
// Tensor enumeration. The order here is the on-disk order of model files.
// ---------------------------------------------------------------------------

namespace detail {

template <typename Vec>
auto vec_span(Vec& v) {
  return std::span(v.data(), v.size());
}

template <typename Fn, typename LN>
void visit_norm(std::string_view prefix, LN& ln, Fn& fn) {
  fn(std::string(prefix) + ".gamma", 1, ln.gamma.size(), vec_span(ln.gamma));
  fn(std::string(prefix) + ".beta", 1, ln.beta.size(), vec_span(ln.beta));
}

template <typename Fn, typename M>
void visit_matrix(const std::string& name, M& m, Fn& fn) {
  fn(name, m.rows(), m.cols(), vec_span(m.data()));
}

template <typename Fn, typename V>
void visit_vector(const std::string& name, V& v, Fn& fn) {
  fn(name, 1, v.size(), vec_span(v));
}

template <typename Fn, typename A>
void visit_attention(const std::string& p, A& a, Fn& fn) {
  visit_matrix(p + ".wq", a.wq, fn);
  visit_matrix(p + ".wk", a.wk, fn);
  visit_matrix(p + ".wv", a.wv, fn);
  visit_matrix(p + ".wo", a.wo, fn);
}

template <typename Fn, typename F>
void visit_ffn(const std::string& p, F& f, Fn& fn) {
  visit_matrix(p + ".w1", f.w1, fn);
  visit_vector(p + ".b1", f.b1, fn);
  visit_matrix(p + ".w2", f.w2, fn);
  visit_vector(p + ".b2", f.b2, fn);
}

template <typename Fn, typename P>
void visit_ada(const std::string& p, P& a, Fn& fn) {
  visit_matrix(p + ".scale_w", a.scale_w, fn);
  visit_vector(p + ".scale_b", a.scale_b, fn);
  visit_matrix(p + ".shift_w", a.shift_w, fn);
  visit_vector(p + ".shift_b", a.shift_b, fn);
}

template <typename Fn, typename B>
void visit_encoder_block(const std::string& p, B& b, Fn& fn) {
  visit_norm(p + ".ln1", b.ln1, fn);
  visit_attention(p + ".attn", b.attn, fn);
  visit_norm(p + ".ln2", b.ln2, fn);
  visit_ffn(p + ".ffn", b.ffn, fn);
}

}  // namespace detail

/// Calls fn(name, rows, cols, span<double or const double>) for every tensor
/// of the joint scorer, in file order.
template <typename Scorer, typename Fn>
void for_each_tensor_joint(Scorer& s, Fn&& fn) {
  using namespace detail;
  visit_matrix("joint.sem_in", s.sem_in, fn);
  visit_vector("joint.sem_in_b", s.sem_in_b, fn);
  for (std::size_t i = 0; i < s.sem_blocks.size(); ++i)
    visit_encoder_block("joint.sem_blocks." + std::to_string(i), s.sem_blocks[i], fn);
  visit_norm("joint.sem_norm", s.sem_norm, fn);
  visit_matrix("joint.ac_in", s.ac_in, fn);
  visit_vector("joint.ac_in_b", s.ac_in_b, fn);
  for (std::size_t i = 0; i < s.ac_blocks.size(); ++i)
    visit_encoder_block("joint.ac_blocks." + std::to_string(i), s.ac_blocks[i], fn);
  visit_norm("joint.ac_norm", s.ac_norm, fn);
  visit_matrix("joint.iso.pos", s.iso.pos, fn);
  visit_matrix("joint.iso.rpos", s.iso.rpos, fn);
  visit_matrix("joint.iso.vad", s.iso.vad, fn);
  visit_matrix("joint.tok_emb", s.tok_emb, fn);
  for (std::size_t i = 0; i < s.dec_blocks.size(); ++i) {
    const std::string p = "joint.dec_blocks." + std::to_string(i);
    auto& b = s.dec_blocks[i];
    visit_norm(p + ".ln_self", b.ln_self, fn);
    visit_attention(p + ".self_attn", b.self_attn, fn);
    visit_norm(p + ".ln_cross", b.ln_cross, fn);
    visit_attention(p + ".cross_attn", b.cross_attn, fn);
    visit_norm(p + ".ln_ffn", b.ln_ffn, fn);
    visit_ffn(p + ".ffn", b.ffn, fn);
  }
  visit_norm("joint.dec_norm", s.dec_norm, fn);
  visit_matrix("joint.out_w", s.out_w, fn);
  visit_vector("joint.out_b", s.out_b, fn);
}

template <typename Nar, typename Fn>
void for_each_tensor_nar(Nar& m, Fn&& fn) {
  using namespace detail;
  for (std::size_t l = 0; l < m.code_emb.size(); ++l) visit_matrix("nar.code_emb." + std::to_string(l), m.code_emb[l], fn);
  visit_matrix("nar.layer_emb", m.layer_emb, fn);
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    const std::string p = "nar.blocks." + std::to_string(i);
    auto& b = m.blocks[i];
    visit_ada(p + ".norm1", b.norm1, fn);
    visit_attention(p + ".attn", b.attn, fn);
    visit_ada(p + ".norm2", b.norm2, fn);
    visit_ffn(p + ".ffn", b.ffn, fn);
  }
  visit_ada("nar.final_norm", m.final_norm, fn);
  visit_matrix("nar.head_w", m.head_w, fn);
  visit_vector("nar.head_b", m.head_b, fn);
}

template <typename Model, typename Fn>
void for_each_tensor(Model& m, Fn&& fn) {
  for_each_tensor_joint(m.joint, fn);
  for_each_tensor_nar(m.nar, fn);
}

inline std::size_t parameter_count(const ToyModel& m) {
  std::size_t n = 0;
  for_each_tensor(m, [&](const std::string&, std::size_t r, std::size_t c, auto) { n += r * c; });
  return n;
}

// ---------------------------------------------------------------------------
// init
// ---------------------------------------------------------------------------

inline JointScorer init_joint_scorer(const ToyDims& dims, SeededRng rng) {
  dims.validate();
  const std::size_t d = dims.d_model;
  const std::size_t v = dims.vocab().size();
  JointScorer s;
  s.dims = dims;
  s.sem_in = nn::random_matrix(dims.feature_dim, d, rng);
  s.sem_in_b = nn::random_vector(d, dims.feature_dim, rng);
  for (std::size_t i = 0; i < dims.blocks; ++i) s.sem_blocks.push_back(nn::EncoderBlock::random(d, dims.ffn_hidden, rng));
  s.sem_norm = LayerNormParams::identity(d);
  s.ac_in = nn::random_matrix(dims.feature_dim, d, rng);
  s.ac_in_b = nn::random_vector(d, dims.feature_dim, rng);
  for (std::size_t i = 0; i < dims.acoustic_blocks; ++i)
    s.ac_blocks.push_back(nn::EncoderBlock::random(d, dims.ffn_hidden, rng));
  s.ac_norm = LayerNormParams::identity(d);
  s.iso = IsoEmbeddings::random(dims.max_iso_frames, d, rng);
  s.tok_emb = nn::random_matrix(v, d, rng);
  for (std::size_t i = 0; i < dims.blocks; ++i) s.dec_blocks.push_back(nn::DecoderBlock::random(d, dims.ffn_hidden, rng));
  s.dec_norm = LayerNormParams::identity(d);
  s.out_w = nn::random_matrix(d, v, rng);
  s.out_b = nn::random_vector(v, d, rng);
  return s;
}

inline NarPredictor init_nar_predictor(const ToyDims& dims, SeededRng rng) {
  dims.validate();
  const std::size_t d = dims.d_model;
  NarPredictor m;
  m.dims = dims;
  for (std::size_t l = 0; l < dims.n_codec_layers; ++l)
    m.code_emb.push_back(nn::random_matrix(dims.codebook_size, d, rng));
  m.layer_emb = nn::random_matrix(dims.n_codec_layers, d, rng);
  for (std::size_t i = 0; i < dims.blocks; ++i) m.blocks.push_back(nn::AdaBlock::random(d, dims.ffn_hidden, rng));
  m.final_norm = nn::AdaBlock::random_ada(d, d, rng);
  m.head_w = nn::random_matrix(d, dims.codebook_size, rng);
  m.head_b = nn::random_vector(dims.codebook_size, d, rng);
  return m;
}

/// Both scorers from one seed: the joint scorer draws from child stream 0,
/// the NAR predictor from child stream 1.
inline ToyModel init_toy_model(std::uint64_t seed, const ToyDims& dims = {}) {
  const SeededRng root(seed);
  return {dims, init_joint_scorer(dims, root.child(0)), init_nar_predictor(dims, root.child(1))};
}

// ---------------------------------------------------------------------------
// joint scorer forward
// ---------------------------------------------------------------------------

inline Matrix encode_semantic(const FeatureSequence& semantic, const JointScorer& s) {
  detail::require(semantic.feature_dim() == s.dims.feature_dim, "encode_semantic: feature dimension mismatch");
  if (semantic.n_frames() == 0) return Matrix(0, s.dims.d_model);
  Matrix x = matmul(semantic.frames, s.sem_in);
  add_row_bias(x, s.sem_in_b);
  nn::add_inplace(x, nn::sinusoidal_positions(x.rows(), s.dims.d_model));
  for (const auto& b : s.sem_blocks) x = b.forward(std::move(x), s.dims.heads);
  return layer_norm(x, s.sem_norm);
}

/// Per-frame outputs of the acoustic encoder before pooling.
inline Matrix encode_acoustic(const FeatureSequence& prompt_feat, const JointScorer& s) {
  detail::require(prompt_feat.n_frames() >= 1, "pool_acoustic_embedding: empty prompt");
  detail::require(prompt_feat.feature_dim() == s.dims.feature_dim,
                  "pool_acoustic_embedding: feature dimension mismatch");
  Matrix x = matmul(prompt_feat.frames, s.ac_in);
  add_row_bias(x, s.ac_in_b);
  if (s.dims.acoustic_positions) nn::add_inplace(x, nn::sinusoidal_positions(x.rows(), s.dims.d_model));
  for (const auto& b : s.ac_blocks) x = b.forward(std::move(x), s.dims.heads);
  return layer_norm(x, s.ac_norm);
}

/// Acoustic encoder output summed over time.
inline std::vector<double> pool_acoustic_embedding(const FeatureSequence& prompt_feat, const JointScorer& s) {
  const Matrix enc = encode_acoustic(prompt_feat, s);
  std::vector<double> pooled(enc.cols(), 0.0);
  for (std::size_t r = 0; r < enc.rows(); ++r) {
    auto row = enc.row(r);
    for (std::size_t c = 0; c < pooled.size(); ++c) pooled[c] += row[c];
  }
  return pooled;
}

/// Cross-attention memory and separator replacement, computed once per
/// utterance and reused for every decoding step.
struct JointContext {
  Matrix memory;
  std::optional<std::vector<double>> acoustic;
  std::vector<nn::KvCache> cross;  // per decoder block, projected from memory
};

inline JointContext prepare_joint_context(const FeatureSequence& semantic, const IsochronyTrack* iso,
                                          const std::vector<double>* acoustic, const JointScorer& s) {
  JointContext ctx;
  const Matrix enc = encode_semantic(semantic, s);
  if (iso == nullptr) {
    ctx.memory = enc;
  } else {
    ctx.memory = nn::vstack(enc, build_icm_features(*iso, s.iso));
  }
  for (const auto& b : s.dec_blocks) ctx.cross.push_back(b.cross_kv(ctx.memory));
  if (acoustic != nullptr) {
    detail::require(acoustic->size() == s.dims.d_model, "joint scorer: acoustic embedding dimension mismatch");
    ctx.acoustic = *acoustic;
  }
  return ctx;
}

/// Decoder caches after consuming the start token and some prefix, plus
/// the distribution of the token that follows.
struct JointState {
  std::vector<nn::KvCache> self;
  std::vector<double> next_logp;
  std::size_t length = 0;  // inputs consumed, start token included
};

namespace detail {

/// Embeddings of decoder inputs at positions first.. with positions added.
/// Input 0 is the start token (EOS); SEP takes the acoustic vector if any.
inline Matrix joint_inputs(std::span<const Token> inputs, std::size_t first, const JointContext& ctx,
                           const JointScorer& s) {
  const VocabLayout vocab = s.vocab();
  const std::size_t d = s.dims.d_model;
  Matrix x(inputs.size(), d);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const Token t = inputs[i];
    require(t < vocab.size(), "joint scorer: token id outside vocabulary");
    auto row = x.row(i);
    if (first + i > 0 && t == vocab.sep_id() && ctx.acoustic) {
      std::copy(ctx.acoustic->begin(), ctx.acoustic->end(), row.begin());
    } else {
      auto e = s.tok_emb.row(t);
      std::copy(e.begin(), e.end(), row.begin());
    }
  }
  nn::add_inplace(x, nn::sinusoidal_positions(x.rows(), d, first));
  return x;
}

/// Runs input rows through the decoder, extending `self`; returns one
/// log-distribution row per input.
inline Matrix joint_run(Matrix x, std::vector<nn::KvCache>& self, const JointContext& ctx, const JointScorer& s) {
  require(ctx.cross.size() == s.dec_blocks.size(), "joint scorer: context was prepared for another model");
  for (std::size_t b = 0; b < s.dec_blocks.size(); ++b)
    x = s.dec_blocks[b].forward_incremental(std::move(x), self[b], ctx.cross[b], s.dims.heads);
  x = layer_norm(x, s.dec_norm);
  Matrix logits = matmul(x, s.out_w);
  add_row_bias(logits, s.out_b);
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    auto lp = log_softmax(logits.row(r));
    std::copy(lp.begin(), lp.end(), logits.row(r).begin());
  }
  return logits;
}

inline std::vector<nn::KvCache> empty_caches(const JointScorer& s) {
  const std::size_t d = s.dims.d_model;
  return std::vector<nn::KvCache>(s.dec_blocks.size(), nn::KvCache{Matrix(0, d), Matrix(0, d)});
}

}  // namespace detail

/// Log-distributions for every position of `prefix`: row i is the
/// distribution of token i given the start token and prefix[0..i).
/// Returns prefix.size() + 1 rows.
inline Matrix joint_forward(std::span<const Token> prefix, const JointContext& ctx, const JointScorer& s) {
  std::vector<Token> inputs{s.vocab().eos_id()};
  inputs.insert(inputs.end(), prefix.begin(), prefix.end());
  auto self = detail::empty_caches(s);
  return detail::joint_run(detail::joint_inputs(inputs, 0, ctx, s), self, ctx, s);
}

inline std::vector<double> joint_step(std::span<const Token> prefix, const JointContext& ctx, const JointScorer& s) {
  const Matrix all = joint_forward(prefix, ctx, s);
  auto last = all.row(all.rows() - 1);
  return {last.begin(), last.end()};
}

/// State after the start token only.
inline JointState joint_begin(const JointContext& ctx, const JointScorer& s) {
  JointState st;
  st.self = detail::empty_caches(s);
  const Token start = s.vocab().eos_id();
  const Matrix lp = detail::joint_run(detail::joint_inputs({&start, 1}, 0, ctx, s), st.self, ctx, s);
  st.next_logp.assign(lp.row(0).begin(), lp.row(0).end());
  st.length = 1;
  return st;
}

/// Feeds one more token. Bit-identical to joint_step on the longer prefix.
inline JointState joint_advance(const JointState& prev, Token t, const JointContext& ctx, const JointScorer& s) {
  JointState st;
  st.self = prev.self;
  const Matrix lp = detail::joint_run(detail::joint_inputs({&t, 1}, prev.length, ctx, s), st.self, ctx, s);
  st.next_logp.assign(lp.row(0).begin(), lp.row(0).end());
  st.length = prev.length + 1;
  return st;
}

/// Log-probability vector over the combined vocabulary for the token that
/// follows `prefix`.
inline std::vector<double> joint_scorer_step(std::span<const Token> prefix, const FeatureSequence& semantic,
                                             const IsochronyTrack* iso, const std::vector<double>* acoustic,
                                             const JointScorer& s) {
  return joint_step(prefix, prepare_joint_context(semantic, iso, acoustic, s), s);
}

// ---------------------------------------------------------------------------
// NAR predictor forward
// ---------------------------------------------------------------------------

/// [prompt summed over all layers ; target summed over its first n layers]
/// along time, before positions are added.
inline Matrix nar_input_embeddings(const CodeSequence& codes, const CodeSequence& prompt, std::size_t n,
                                   const NarPredictor& m) {
  const std::size_t d = m.dims.d_model;
  const std::size_t n_layers = m.dims.n_codec_layers;
  detail::require(n <= codes.n_layers(), "nar_layer_logits: codes carry fewer than n layers");
  detail::require(prompt.n_frames() == 0 || prompt.n_layers() == n_layers,
                  "nar_layer_logits: prompt must carry every codec layer");
  Matrix x(prompt.n_frames() + codes.n_frames(), d);
  auto accumulate = [&](std::size_t row, std::size_t layer, CodeIndex c) {
    detail::require(c < m.dims.codebook_size, "nar_layer_logits: code outside codebook");
    auto e = m.code_emb[layer].row(c);
    auto o = x.row(row);
    for (std::size_t k = 0; k < d; ++k) o[k] += e[k];
  };
  for (std::size_t f = 0; f < prompt.n_frames(); ++f)
    for (std::size_t l = 0; l < n_layers; ++l) accumulate(f, l, prompt.at(l, f));
  for (std::size_t f = 0; f < codes.n_frames(); ++f)
    for (std::size_t l = 0; l < n; ++l) accumulate(prompt.n_frames() + f, l, codes.at(l, f));
  return x;
}

/// Logits (target frames x C) for RVQ layer `layer_index` given layers
/// 0..layer_index-1 of `codes`.
inline Matrix nar_layer_logits(const CodeSequence& codes, const CodeSequence& prompt, std::size_t layer_index,
                               const NarPredictor& m) {
  detail::require(layer_index >= 1 && layer_index < m.dims.n_codec_layers,
                  "nar_layer_logits: layer index out of range");
  Matrix x = nar_input_embeddings(codes, prompt, layer_index, m);
  nn::add_inplace(x, nn::sinusoidal_positions(x.rows(), m.dims.d_model));
  const auto cond = m.layer_emb.row(layer_index);
  for (const auto& b : m.blocks) x = b.forward(std::move(x), cond, m.dims.heads);
  x = ada_layer_norm(x, cond, m.final_norm);

  const std::size_t offset = prompt.n_frames();
  Matrix target(codes.n_frames(), m.dims.d_model);
  for (std::size_t f = 0; f < codes.n_frames(); ++f) {
    auto src = x.row(offset + f);
    std::copy(src.begin(), src.end(), target.row(f).begin());
  }
  Matrix logits = matmul(target, m.head_w);
  add_row_bias(logits, m.head_b);
  return logits;
}

}  // namespace s2st
