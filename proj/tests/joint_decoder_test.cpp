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

#include <cmath>
#include <functional>
#include <vector>

#include <gtest/gtest.h>

#include "s2st/joint_decoder.hpp"

namespace s2st {
namespace {

ToyDims tiny_dims(std::size_t n_text, std::size_t c) {
  ToyDims d;
  d.d_model = 8;
  d.ffn_hidden = 16;
  d.n_text = n_text;
  d.codebook_size = c;
  d.feature_dim = 4;
  d.n_codec_layers = 2;
  d.max_iso_frames = 4;
  return d;
}

FeatureSequence random_features(std::size_t frames, std::size_t dim, SeededRng& rng) {
  FeatureSequence fs{Matrix(frames, dim), 50.0};
  for (double& v : fs.frames.data()) v = rng.normal();
  return fs;
}

BeamConfig limits(std::size_t text, std::size_t codec, std::size_t beam) {
  BeamConfig cfg;
  cfg.beam_size = beam;
  cfg.max_text_len = text;
  cfg.max_codec_frames = codec;
  return cfg;
}

// Joint log-prob of a full sequence through full forward passes.
double score_sequence(const std::vector<Token>& seq, const JointContext& ctx, const JointScorer& s) {
  double total = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) total += joint_step(std::span(seq).first(i), ctx, s)[seq[i]];
  return total;
}

// Independent brute force: builds every legal sequence directly from the
// vocabulary layout and scores it with score_sequence.
double brute_force_best(const JointContext& ctx, const JointScorer& s, std::size_t max_text, std::size_t max_codec) {
  const VocabLayout v = s.vocab();
  double best = -INFINITY;
  std::vector<Token> seq;
  std::function<void(std::size_t)> codec = [&](std::size_t n) {
    if (n >= 1) {
      seq.push_back(v.eos_id());
      best = std::max(best, score_sequence(seq, ctx, s));
      seq.pop_back();
    }
    if (n == max_codec) return;
    for (std::size_t c = 0; c < v.codebook_size; ++c) {
      seq.push_back(v.codec_token(static_cast<CodeIndex>(c)));
      codec(n + 1);
      seq.pop_back();
    }
  };
  std::function<void(std::size_t)> text = [&](std::size_t n) {
    if (n >= 1) {
      seq.push_back(v.sep_id());
      codec(0);
      seq.pop_back();
    }
    if (n == max_text) return;
    for (Token t = 0; t < v.n_text; ++t) {
      seq.push_back(t);
      text(n + 1);
      seq.pop_back();
    }
  };
  text(0);
  return best;
}

TEST(PhaseMask, Phases) {
  const VocabLayout v{3, 4};
  const auto text = phase_mask(Phase::Text, v), codec = phase_mask(Phase::Codec, v), done = phase_mask(Phase::Done, v);
  for (Token t = 0; t < v.size(); ++t) {
    EXPECT_EQ(text[t], v.is_text(t) || t == v.sep_id()) << t;
    EXPECT_EQ(codec[t], v.is_codec(t) || t == v.eos_id()) << t;
    EXPECT_EQ(done[t], 0) << t;
  }
  std::vector<double> logits(v.size(), 1.0);
  apply_mask(logits, text);
  EXPECT_EQ(logits[v.codec_base()], kNegInf);
  EXPECT_EQ(logits[0], 1.0);
}

TEST(BeamSearch, SinglePossiblePair) {
  const ToyModel m = init_toy_model(1, tiny_dims(1, 1));
  SeededRng rng(2);
  const auto ctx = prepare_joint_context(random_features(3, 4, rng), nullptr, nullptr, m.joint);
  const auto hyps = beam_search_joint(ctx, m.joint, limits(1, 1, 3));
  ASSERT_EQ(hyps.size(), 1u);
  const VocabLayout v = m.joint.vocab();
  const std::vector<Token> want{0, v.sep_id(), v.codec_token(0), v.eos_id()};
  EXPECT_EQ(hyps[0].tokens, want);
  EXPECT_NEAR(hyps[0].joint_logp, score_sequence(want, ctx, m.joint), 1e-9);
  const auto oracle = enumerate_joint_oracle(ctx, m.joint, limits(1, 1, 1));
  EXPECT_EQ(oracle.tokens, want);
}

TEST(BeamSearch, ExhaustiveBeamMatchesBruteForce) {
  const ToyModel base = init_toy_model(0, tiny_dims(2, 2));
  const BeamConfig cfg = limits(2, 2, 1);
  BeamConfig wide = cfg;
  wide.beam_size = static_cast<std::size_t>(count_joint_sequences(base.joint.vocab(), cfg));
  EXPECT_EQ(wide.beam_size, 6u * 6u);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyModel m = init_toy_model(seed, tiny_dims(2, 2));
    SeededRng rng(50 + seed);
    const auto ctx = prepare_joint_context(random_features(3, 4, rng), nullptr, nullptr, m.joint);
    const double want = brute_force_best(ctx, m.joint, 2, 2);
    EXPECT_NEAR(beam_search_joint(ctx, m.joint, wide).front().joint_logp, want, 1e-9) << seed;
    EXPECT_NEAR(enumerate_joint_oracle(ctx, m.joint, cfg).joint_logp, want, 1e-9) << seed;
  }
}

TEST(BeamSearch, HypothesisInvariants) {
  const ToyModel m = init_toy_model(4, tiny_dims(3, 4));
  const VocabLayout v = m.joint.vocab();
  SeededRng rng(5);
  const IsochronyTrack iso = IsochronyTrack::from_vad({1, 0});
  const auto ctx = prepare_joint_context(random_features(4, 4, rng), &iso, nullptr, m.joint);
  const auto hyps = beam_search_joint(ctx, m.joint, limits(4, 6, 5));
  ASSERT_FALSE(hyps.empty());
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    const auto& h = hyps[i];
    if (i > 0) {
      EXPECT_GE(hyps[i - 1].joint_logp, h.joint_logp);
    }
    EXPECT_EQ(h.phase, Phase::Done);
    EXPECT_EQ(h.joint_logp, h.text_logp + h.codec_logp);
    EXPECT_NEAR(h.joint_logp, score_sequence(h.tokens, ctx, m.joint), 1e-9);
    // Phase legality: text ids, SEP, codec ids, EOS, in that order.
    std::size_t sep = 0;
    while (sep < h.tokens.size() && h.tokens[sep] != v.sep_id()) ASSERT_TRUE(v.is_text(h.tokens[sep++]));
    ASSERT_LT(sep, h.tokens.size());
    EXPECT_EQ(sep, h.text_len);
    for (std::size_t j = sep + 1; j + 1 < h.tokens.size(); ++j) EXPECT_TRUE(v.is_codec(h.tokens[j]));
    EXPECT_EQ(h.tokens.back(), v.eos_id());
    EXPECT_EQ(h.codec(v).size(), h.codec_len);
    // Text log-prob accumulates only the steps up to and including SEP.
    double text = 0.0;
    for (std::size_t j = 0; j <= sep; ++j) text += joint_step(std::span(h.tokens).first(j), ctx, m.joint)[h.tokens[j]];
    EXPECT_NEAR(h.text_logp, text, 1e-9);
  }
}

// Best score is not monotone in beam width in general (a wider beam can
// keep longer prefixes that outscore the greedy path early and lose it).
// What holds: every width is bounded by the oracle, and a beam as wide as
// the search space is exact.
TEST(BeamSearch, BoundedByOracleAndExactAtFullWidth) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyModel m = init_toy_model(seed, tiny_dims(3, 3));
    SeededRng rng(70 + seed);
    const auto ctx = prepare_joint_context(random_features(3, 4, rng), nullptr, nullptr, m.joint);
    const double oracle = enumerate_joint_oracle(ctx, m.joint, limits(2, 2, 1)).joint_logp;
    for (std::size_t beam : {1, 2, 4, 8, 16}) {
      const double got = beam_search_joint(ctx, m.joint, limits(2, 2, beam)).front().joint_logp;
      EXPECT_LE(got, oracle + 1e-12) << "seed " << seed << " beam " << beam;
    }
    const auto full = static_cast<std::size_t>(count_joint_sequences(m.joint.vocab(), limits(2, 2, 1)));
    EXPECT_NEAR(beam_search_joint(ctx, m.joint, limits(2, 2, full)).front().joint_logp, oracle, 1e-12) << seed;
  }
}

TEST(BeamSearch, ForceFramesFixesCodecLength) {
  const ToyModel m = init_toy_model(8, tiny_dims(2, 3));
  SeededRng rng(9);
  const auto ctx = prepare_joint_context(random_features(2, 4, rng), nullptr, nullptr, m.joint);
  for (std::size_t frames : {1, 2}) {
    BeamConfig cfg = limits(2, 3, 3);
    cfg.force_frames = frames;
    for (const auto& h : beam_search_joint(ctx, m.joint, cfg)) EXPECT_EQ(h.codec_len, frames * kCodecTokensPerIsoFrame);
  }
}

TEST(BeamSearch, DeterministicAcrossThreads) {
  const ToyModel m = init_toy_model(10, tiny_dims(3, 4));
  SeededRng rng(11);
  const auto ctx = prepare_joint_context(random_features(3, 4, rng), nullptr, nullptr, m.joint);
  BeamConfig one = limits(3, 5, 4), four = one;
  four.threads = 4;
  const auto a = beam_search_joint(ctx, m.joint, one), b = beam_search_joint(ctx, m.joint, four);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_EQ(a[i].joint_logp, b[i].joint_logp);
  }
}

TEST(BeamSearch, ConfigErrors) {
  const ToyModel m = init_toy_model(12, tiny_dims(2, 2));
  SeededRng rng(13);
  const auto ctx = prepare_joint_context(random_features(2, 4, rng), nullptr, nullptr, m.joint);
  EXPECT_THROW(beam_search_joint(ctx, m.joint, limits(2, 2, 0)), InvalidArgument);
  BeamConfig bad = limits(2, 2, 1);
  bad.min_text_len = 3;
  EXPECT_THROW(beam_search_joint(ctx, m.joint, bad), InvalidArgument);
  EXPECT_THROW(enumerate_joint_oracle(ctx, m.joint, limits(12, 12, 1)), InvalidArgument);
}

TEST(Oracle, Deterministic) {
  const ToyModel m = init_toy_model(14, tiny_dims(2, 3));
  SeededRng rng(15);
  const auto ctx = prepare_joint_context(random_features(2, 4, rng), nullptr, nullptr, m.joint);
  const auto a = enumerate_joint_oracle(ctx, m.joint, limits(2, 2, 1));
  const auto b = enumerate_joint_oracle(ctx, m.joint, limits(2, 2, 1));
  EXPECT_EQ(a.tokens, b.tokens);
  EXPECT_EQ(a.joint_logp, b.joint_logp);
}

}  // namespace
}  // namespace s2st
