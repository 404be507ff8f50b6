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

// Quick oracle checks shipped with the CLI (`s2st selftest`). Each check
// recomputes a result by brute force and compares it with the library.

#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "s2st/data_pipeline.hpp"
#include "s2st/isochrony.hpp"
#include "s2st/joint_decoder.hpp"
#include "s2st/layer_beam_search.hpp"
#include "s2st/numerics.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/toy_model.hpp"

namespace s2st::selftest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

namespace checks {

inline CheckResult top_k_matches_sort() {
  SeededRng rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(1 + rng.below(12));
    for (double& v : s) v = static_cast<double>(rng.below(5));  // many ties
    const std::size_t k = 1 + rng.below(15);
    const auto got = top_k_select(s, k);
    std::vector<std::size_t> want;
    std::vector<bool> used(s.size(), false);
    for (std::size_t pick = 0; pick < std::min(k, s.size()); ++pick) {
      std::size_t best = s.size();
      for (std::size_t i = 0; i < s.size(); ++i)
        if (!used[i] && (best == s.size() || s[i] > s[best])) best = i;
      used[best] = true;
      want.push_back(best);
    }
    if (got != want) return {"top_k_select vs selection scan", false, "trial " + std::to_string(trial)};
  }
  return {"top_k_select vs selection scan", true, "200 trials"};
}

inline CheckResult categorical_frequencies() {
  SeededRng rng(5);
  const std::vector<double> p{0.25, 0.75};
  int ones = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) ones += static_cast<int>(categorical_sample(p, rng));
  const double f = static_cast<double>(ones) / n;
  return {"categorical_sample frequency", std::abs(f - 0.75) <= 0.01, "freq(1)=" + std::to_string(f)};
}

inline CheckResult featurize_sine_band() {
  RvqConfig cfg;
  std::vector<std::int16_t> pcm(16000);
  for (std::size_t i = 0; i < pcm.size(); ++i)
    pcm[i] = static_cast<std::int16_t>(16000.0 * std::sin(2.0 * std::numbers::pi * 1000.0 * static_cast<double>(i) / 16000.0));
  const auto feat = featurize(pcm, cfg);
  // Direct DFT oracle: the strongest bin of frame 0, mapped to its band.
  std::size_t best_bin = 0;
  double best_mag = -1.0;
  for (std::size_t k = 0; k <= 160; ++k) {
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t t = 0; t < 320; ++t)
      acc += static_cast<double>(pcm[t]) * std::polar(1.0, -2.0 * std::numbers::pi * static_cast<double>(k * t) / 320.0);
    if (std::abs(acc) > best_mag) best_mag = std::abs(acc), best_bin = k;
  }
  std::size_t band = 0;
  while (!(band * 161 / cfg.feature_dim <= best_bin && best_bin < (band + 1) * 161 / cfg.feature_dim)) ++band;
  bool ok = feat.n_frames() == 50;
  for (std::size_t f = 0; f < feat.n_frames() && ok; ++f) ok = argmax(feat.frames.row(f)) == band;
  return {"featurize 1 kHz sine band", ok, "bin " + std::to_string(best_bin) + " band " + std::to_string(band)};
}

inline CheckResult quantize_matches_scan() {
  RvqConfig cfg;
  cfg.n_layers = 1;
  cfg.codebook_size = 8;
  cfg.feature_dim = 16;
  cfg.code_dim = 4;
  SeededRng rng(3);
  std::vector<FeatureSequence> train{{Matrix(64, 16), 50.0}};
  for (double& v : train[0].frames.data()) v = rng.normal();
  const RvqCodec codec = fit_codebooks(train, cfg, 5, SeededRng(4));
  const Codebook& b = codec.books[0];
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> r(16);
    for (double& v : r) v = rng.normal();
    std::vector<double> z(4, 0.0);
    for (std::size_t c = 0; c < 4; ++c)
      for (std::size_t i = 0; i < 16; ++i) z[c] += r[i] * b.in_proj(i, c);
    double n = 0.0;
    for (double v : z) n += v * v;
    n = std::sqrt(n);
    std::size_t want = 0;
    double best = 1e300;
    for (std::size_t j = 0; j < 8; ++j) {
      double d = 0.0;
      for (std::size_t c = 0; c < 4; ++c) d += (z[c] / n - b.entries(j, c)) * (z[c] / n - b.entries(j, c));
      if (d < best) best = d, want = j;
    }
    if (quantize_layer(r, b).index != want) return {"quantize_layer vs nearest-neighbour scan", false, ""};
  }
  return {"quantize_layer vs nearest-neighbour scan", true, "200 residuals"};
}

inline CheckResult rvq_error_monotone() {
  RvqConfig cfg;
  cfg.n_layers = 8;
  cfg.codebook_size = 16;
  cfg.feature_dim = 16;
  cfg.code_dim = 4;
  SeededRng rng(9);
  std::vector<FeatureSequence> train{{Matrix(200, 16), 50.0}};
  for (double& v : train[0].frames.data()) v = rng.normal();
  const RvqCodec codec = fit_codebooks(train, cfg, 10, SeededRng(10));
  const auto codes = encode(train[0], codec, cfg.n_layers);
  double prev = mean_squared_error(FeatureSequence{Matrix(200, 16), 50.0}, train[0]);
  for (std::size_t n = 1; n <= cfg.n_layers; ++n) {
    const double e = mean_squared_error(decode(codes, codec, n), train[0]);
    if (e > prev) return {"RVQ error non-increasing in layers", false, "layer " + std::to_string(n)};
    prev = e;
  }
  return {"RVQ error non-increasing in layers", true, "8 layers"};
}

inline ToyDims tiny_dims(std::size_t n_text, std::size_t codebook, std::size_t layers) {
  ToyDims d;
  d.d_model = 16;
  d.heads = 2;
  d.blocks = 1;
  d.ffn_hidden = 16;
  d.n_text = n_text;
  d.codebook_size = codebook;
  d.feature_dim = 8;
  d.n_codec_layers = layers;
  d.max_iso_frames = 8;
  return d;
}

inline FeatureSequence random_features(std::size_t frames, std::size_t dim, SeededRng& rng) {
  FeatureSequence fs{Matrix(frames, dim), 50.0};
  for (double& v : fs.frames.data()) v = rng.normal();
  return fs;
}

inline CheckResult joint_beam_matches_enumeration() {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ToyModel m = init_toy_model(seed, tiny_dims(2, 2, 2));
    SeededRng rng(100 + seed);
    const auto sem = random_features(3, 8, rng);
    BeamConfig cfg;
    cfg.beam_size = 64;
    cfg.max_text_len = 2;
    cfg.max_codec_frames = 2;
    const auto ctx = prepare_joint_context(sem, nullptr, nullptr, m.joint);
    const auto beam = beam_search_joint(ctx, m.joint, cfg);
    const auto oracle = enumerate_joint_oracle(ctx, m.joint, cfg);
    if (beam.front().tokens != oracle.tokens)
      return {"joint beam search vs enumeration", false, "seed " + std::to_string(seed)};
  }
  return {"joint beam search vs enumeration", true, "5 seeds"};
}

inline CheckResult lbs_degenerate_is_greedy() {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyModel m = init_toy_model(seed, tiny_dims(2, 8, 4));
    SeededRng rng(200 + seed);
    CodeSequence first(1, 6, 8);
    for (std::size_t f = 0; f < 6; ++f) first.set(0, f, static_cast<CodeIndex>(rng.below(8)));
    const CodeSequence prompt(4, 0, 8);
    LbsConfig cfg;
    cfg.n_codebook = 4;
    cfg.beam_size = cfg.n_sample = cfg.top_k = 1;
    cfg.seed = seed;
    if (lbs_generate(first, prompt, m.nar, cfg).codes != greedy_generate(first, prompt, m.nar, 4))
      return {"LBS(1,1,1) equals greedy", false, "seed " + std::to_string(seed)};
  }
  return {"LBS(1,1,1) equals greedy", true, "10 seeds"};
}

inline CheckResult lbs_bounded_by_oracle() {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ToyModel m = init_toy_model(seed, tiny_dims(2, 4, 3));
    SeededRng rng(300 + seed);
    CodeSequence first(1, 3, 4);
    for (std::size_t f = 0; f < 3; ++f) first.set(0, f, static_cast<CodeIndex>(rng.below(4)));
    const CodeSequence prompt(3, 0, 4);
    LbsConfig cfg;
    cfg.n_codebook = 3;
    cfg.top_k = 4;
    cfg.seed = seed;
    const double lbs = lbs_generate(first, prompt, m.nar, cfg).total_score;
    const double oracle = exhaustive_nar_oracle(first, prompt, m.nar, 3).score;
    if (lbs > oracle + 1e-9) return {"LBS score <= exhaustive oracle", false, "seed " + std::to_string(seed)};
  }
  return {"LBS score <= exhaustive oracle", true, "10 seeds"};
}

inline CheckResult icm_matches_lookup() {
  SeededRng rng(17);
  const IsoEmbeddings tables = IsoEmbeddings::random(16, 8, rng);
  std::vector<std::uint8_t> bits(12);
  for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
  const auto track = IsochronyTrack::from_vad(bits);
  const Matrix got = build_icm_features(track, tables);
  for (std::size_t i = 0; i < bits.size(); ++i)
    for (std::size_t c = 0; c < 8; ++c) {
      const double want = tables.pos(i, c) + tables.rpos(bits.size() - 1 - i, c) + tables.vad(bits[i], c);
      if (std::abs(got(i, c) - want) > 1e-12) return {"ICM features vs triple lookup", false, ""};
    }
  return {"ICM features vs triple lookup", true, "12 frames"};
}

inline CheckResult slc_matches_count() {
  SeededRng rng(23);
  std::vector<double> src(100), gen(100);
  for (std::size_t i = 0; i < 100; ++i) {
    src[i] = 0.5 + 3.0 * rng.uniform();
    gen[i] = src[i] * (0.5 + rng.uniform());
  }
  for (double p : {0.2, 0.4}) {
    int count = 0;
    for (std::size_t i = 0; i < 100; ++i)
      if (std::abs(gen[i] - src[i]) <= p * src[i]) ++count;
    if (slc(src, gen, p) != count / 100.0) return {"SLC vs counting", false, "p=" + std::to_string(p)};
  }
  return {"SLC vs counting", true, "100 pairs"};
}

inline CheckResult loss_mask_counts() {
  const VocabLayout vocab{8, 16};
  SeededRng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t frames = 1 + rng.below(40);
    Utterance src, tgt;
    src.features = random_features(frames, 4, rng);
    tgt.features = src.features;
    CodeSequence codes(1, frames, 16);
    src.codes = tgt.codes = codes;
    src.text.assign(rng.below(6), 1);
    tgt.text.assign(rng.below(6), 2);
    const std::size_t a = rng.below(frames + 1);
    const FrameInterval region{a, a + rng.below(frames - a + 1)};
    const auto s2st = build_example_s2st(src, tgt, region, Direction::Forward, InputModality::Speech, vocab);
    const auto asr = build_example_asr(src, region, vocab);
    if (s2st.masked_count() != region.size() || asr.masked_count() != src.text.size() + region.size())
      return {"loss-mask counts", false, "trial " + std::to_string(trial)};
  }
  return {"loss-mask counts", true, "100 examples"};
}

}  // namespace checks

inline std::vector<CheckResult> run_all() {
  std::vector<std::function<CheckResult()>> all{
      checks::top_k_matches_sort,       checks::categorical_frequencies, checks::featurize_sine_band,
      checks::quantize_matches_scan,    checks::rvq_error_monotone,      checks::joint_beam_matches_enumeration,
      checks::lbs_degenerate_is_greedy, checks::lbs_bounded_by_oracle,   checks::icm_matches_lookup,
      checks::slc_matches_count,        checks::loss_mask_counts,
  };
  std::vector<CheckResult> out;
  for (auto& fn : all) {
    try {
      out.push_back(fn());
    } catch (const std::exception& e) {
      out.push_back({"(exception)", false, e.what()});
    }
  }
  return out;
}

}  // namespace s2st::selftest
