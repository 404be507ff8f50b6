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

// End-to-end walk through the library on synthetic audio: featurize, fit a
// small codec, translate with the toy joint scorer under an isochrony
// constraint, then fill the remaining RVQ layers with layer beam search.

#include <cmath>
#include <cstdint>
#include <iostream>
#include <numbers>
#include <vector>

#include "s2st/s2st.hpp"

namespace {

std::vector<std::int16_t> chirp(std::size_t samples, double f0, double f1, s2st::SeededRng& rng) {
  std::vector<std::int16_t> pcm(samples);
  double phase = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(samples);
    phase += 2.0 * std::numbers::pi * (f0 + (f1 - f0) * t) / 16000.0;
    pcm[i] = static_cast<std::int16_t>(8000.0 * std::sin(phase) + 200.0 * rng.normal());
  }
  return pcm;
}

}  // namespace

int main() {
  using namespace s2st;
  SeededRng rng(2026);

  RvqConfig cfg;
  cfg.n_layers = 4;
  cfg.codebook_size = 16;
  cfg.feature_dim = 16;
  cfg.code_dim = 4;

  std::vector<FeatureSequence> train;
  for (int i = 0; i < 4; ++i) train.push_back(featurize(chirp(16000, 200.0 + 300.0 * i, 3000.0, rng), cfg));
  const RvqCodec codec = fit_codebooks(train, cfg, 10, SeededRng(1));

  const FeatureSequence source = featurize(chirp(24000, 500.0, 2500.0, rng), cfg);
  const CodeSequence codes = encode(source, codec, cfg.n_layers);
  for (std::size_t n = 1; n <= cfg.n_layers; ++n)
    std::cout << "codec layers=" << n << " mse=" << mean_squared_error(decode(codes, codec, n), source) << '\n';

  ToyDims dims;
  dims.d_model = 16;
  dims.ffn_hidden = 32;
  dims.n_text = 6;
  dims.codebook_size = cfg.codebook_size;
  dims.feature_dim = cfg.feature_dim;
  dims.n_codec_layers = cfg.n_layers;
  const ToyModel model = init_toy_model(7, dims);

  const IsochronyTrack iso = IsochronyTrack::active(duration_frames(0.32));
  BeamConfig beam;
  beam.max_text_len = 4;
  beam.force_frames = iso.n_frames();
  const auto hyps = beam_search_joint(source.slice(0, 20), &iso, nullptr, model.joint, beam);
  const auto& best = hyps.front();
  std::cout << "translate: text_len=" << best.text_len << " codec_len=" << best.codec_len
            << " joint_logp=" << best.joint_logp << '\n';

  const auto first = best.codec(dims.vocab());
  const CodeSequence first_layer(1, first.size(), dims.codebook_size, first);
  const CodeSequence prompt(cfg.n_layers, 0, dims.codebook_size);
  LbsConfig lbs;
  lbs.n_codebook = cfg.n_layers;
  lbs.seed = 3;
  const LbsResult filled = lbs_generate(first_layer, prompt, model.nar, lbs);
  const CodeSequence greedy = greedy_generate(first_layer, prompt, model.nar, cfg.n_layers);
  std::cout << "nar: lbs_score=" << filled.total_score
            << " greedy_score=" << sequence_score(greedy, prompt, model.nar) << '\n';
  return 0;
}
