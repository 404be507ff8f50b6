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
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "s2st/layer_beam_search.hpp"

namespace s2st {
namespace {

ToyDims nar_dims(std::size_t c, std::size_t layers) {
  ToyDims d;
  d.d_model = 8;
  d.ffn_hidden = 16;
  d.n_text = 2;
  d.codebook_size = c;
  d.feature_dim = 4;
  d.n_codec_layers = layers;
  d.max_iso_frames = 4;
  return d;
}

CodeSequence random_layer(std::size_t frames, std::size_t c, SeededRng& rng) {
  std::vector<CodeIndex> ids(frames);
  for (auto& id : ids) id = static_cast<CodeIndex>(rng.below(c));
  return CodeSequence(1, frames, c, ids);
}

TEST(Lbs, DegenerateConfigIsGreedy) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyModel m = init_toy_model(seed, nar_dims(8, 4));
    SeededRng rng(seed + 1);
    const CodeSequence first = random_layer(5, 8, rng);
    const CodeSequence prompt(4, 0, 8);
    LbsConfig cfg;
    cfg.n_codebook = 4;
    cfg.beam_size = cfg.n_sample = cfg.top_k = 1;
    cfg.seed = seed;
    const auto lbs = lbs_generate(first, prompt, m.nar, cfg);
    const auto greedy = greedy_generate(first, prompt, m.nar, 4);
    EXPECT_EQ(lbs.codes, greedy);
    EXPECT_EQ(lbs.steps, 3u);
    EXPECT_NEAR(lbs.total_score, sequence_score(greedy, prompt, m.nar), 1e-9);
  }
}

TEST(Lbs, NeverExceedsOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ToyModel m = init_toy_model(seed, nar_dims(4, 3));
    SeededRng rng(100 + seed);
    const CodeSequence first = random_layer(3, 4, rng);
    const CodeSequence prompt(3, 0, 4);
    LbsConfig cfg;
    cfg.n_codebook = 3;
    cfg.top_k = 4;
    cfg.seed = seed;
    const auto lbs = lbs_generate(first, prompt, m.nar, cfg);
    const auto oracle = exhaustive_nar_oracle(first, prompt, m.nar, 3);
    EXPECT_LE(lbs.total_score, oracle.score + 1e-9);
    EXPECT_NEAR(sequence_score(oracle.codes, prompt, m.nar), oracle.score, 1e-9);
    EXPECT_NEAR(sequence_score(lbs.codes, prompt, m.nar), lbs.total_score, 1e-9);
  }
}

TEST(Lbs, OracleMatchesBruteForceOnTwoLayers) {
  const ToyModel m = init_toy_model(3, nar_dims(3, 2));
  SeededRng rng(4);
  const CodeSequence first = random_layer(3, 3, rng);
  const CodeSequence prompt(2, 0, 3);
  double best = -INFINITY;
  for_each_filling(3, 3, [&](std::span<const CodeIndex> ids) {
    best = std::max(best, sequence_score(first.with_layer(std::vector<CodeIndex>(ids.begin(), ids.end())), prompt, m.nar));
  });
  EXPECT_NEAR(exhaustive_nar_oracle(first, prompt, m.nar, 2).score, best, 1e-12);
}

TEST(Lbs, DeterministicAndThreadIndependent) {
  const ToyModel m = init_toy_model(7, nar_dims(16, 16));
  SeededRng rng(8);
  const CodeSequence first = random_layer(6, 16, rng);
  const CodeSequence prompt(16, 0, 16);
  LbsConfig cfg;
  cfg.seed = 42;
  const auto a = lbs_generate(first, prompt, m.nar, cfg);
  const auto b = lbs_generate(first, prompt, m.nar, cfg);
  cfg.threads = 4;
  const auto c = lbs_generate(first, prompt, m.nar, cfg);
  EXPECT_EQ(a.steps, 15u);
  EXPECT_EQ(a.codes.n_layers(), 16u);
  EXPECT_EQ(a.codes, b.codes);
  EXPECT_EQ(a.codes, c.codes);
  EXPECT_EQ(a.total_score, c.total_score);
}

TEST(Lbs, StepCandidatesStayInTopK) {
  const ToyModel m = init_toy_model(9, nar_dims(8, 3));
  SeededRng rng(10);
  const CodeSequence first = random_layer(4, 8, rng);
  const CodeSequence prompt(3, 0, 8);
  LbsConfig cfg;
  cfg.n_codebook = 3;
  cfg.beam_size = 6;
  cfg.n_sample = 5;
  cfg.top_k = 2;
  const auto beam = lbs_step({{first, 0.0}}, 1, prompt, m.nar, cfg, SeededRng(11));
  ASSERT_EQ(beam.size(), 5u);  // one parent, five samples
  const Matrix logits = nar_layer_logits(first, prompt, 1, m.nar);
  for (std::size_t i = 0; i < beam.size(); ++i) {
    if (i > 0) {
      EXPECT_GE(beam[i - 1].total_score, beam[i].total_score);
    }
    for (std::size_t f = 0; f < 4; ++f) {
      const auto top = top_k_select(logits.row(f), 2);
      const std::set<std::size_t> allowed(top.begin(), top.end());
      EXPECT_TRUE(allowed.count(beam[i].codes.at(1, f))) << "frame " << f;
    }
  }
}

TEST(Lbs, InputValidation) {
  const ToyModel m = init_toy_model(1, nar_dims(4, 3));
  SeededRng rng(2);
  const CodeSequence first = random_layer(2, 4, rng);
  const CodeSequence prompt(3, 0, 4);
  LbsConfig cfg;
  cfg.n_codebook = 3;
  cfg.top_k = 5;
  EXPECT_THROW(lbs_generate(first, prompt, m.nar, cfg), InvalidArgument);
  cfg.top_k = 2;
  cfg.n_codebook = 4;
  EXPECT_THROW(lbs_generate(first, prompt, m.nar, cfg), InvalidArgument);
  cfg.n_codebook = 3;
  cfg.beam_size = 0;
  EXPECT_THROW(lbs_generate(first, prompt, m.nar, cfg), InvalidArgument);
  EXPECT_THROW(greedy_generate(CodeSequence(2, 2, 4), prompt, m.nar, 3), InvalidArgument);
}

}  // namespace
}  // namespace s2st
