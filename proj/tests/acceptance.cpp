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

// Acceptance gate: one [PASS]/[FAIL] line per criterion, exit 1 on any
// failure.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "s2st/s2st.hpp"

namespace fs = std::filesystem;
using namespace s2st;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

CodeSequence random_codes(std::size_t layers, std::size_t frames, std::size_t c, SeededRng& rng) {
  CodeSequence cs(layers, frames, c);
  for (std::size_t l = 0; l < layers; ++l)
    for (std::size_t f = 0; f < frames; ++f) cs.set(l, f, static_cast<CodeIndex>(rng.below(c)));
  return cs;
}

FeatureSequence random_features(std::size_t frames, std::size_t dim, SeededRng& rng) {
  FeatureSequence fs{Matrix(frames, dim), 50.0};
  for (double& v : fs.frames.data()) v = rng.normal();
  return fs;
}

ToyDims nar_dims(std::size_t c, std::size_t layers) {
  ToyDims d;
  d.codebook_size = c;
  d.n_codec_layers = layers;
  return d;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// 1 ---------------------------------------------------------------------------
Outcome lbs_degenerate() {
  int same = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ToyModel m = init_toy_model(seed, nar_dims(16, 4));
    SeededRng rng(10'000 + seed);
    const CodeSequence first = random_codes(1, 8, 16, rng);
    const CodeSequence prompt = random_codes(4, 4, 16, rng);
    LbsConfig cfg;
    cfg.n_codebook = 4;
    cfg.beam_size = cfg.n_sample = cfg.top_k = 1;
    cfg.seed = seed;
    same += lbs_generate(first, prompt, m.nar, cfg).codes == greedy_generate(first, prompt, m.nar, 4);
  }
  return {same == 100, std::to_string(same) + "/100 identical"};
}

// 2 ---------------------------------------------------------------------------
Outcome lbs_oracle() {
  int hits = 0, bound_violations = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ToyModel m = init_toy_model(seed, nar_dims(5, 2));
    SeededRng rng(20'000 + seed);
    const CodeSequence first = random_codes(1, 4, 5, rng);
    const CodeSequence prompt(2, 0, 5);
    LbsConfig cfg;
    cfg.n_codebook = 2;
    cfg.top_k = 5;
    cfg.n_sample = 200;
    cfg.beam_size = 10;
    cfg.seed = seed;
    const double lbs = lbs_generate(first, prompt, m.nar, cfg).total_score;
    const double oracle = exhaustive_nar_oracle(first, prompt, m.nar, 2).score;
    hits += std::abs(lbs - oracle) <= 1e-9;
    bound_violations += lbs > oracle + 1e-9;
  }
  return {hits >= 95 && bound_violations == 0,
          std::to_string(hits) + "/100 attain oracle, " + std::to_string(bound_violations) + " bound violations"};
}

// 3 ---------------------------------------------------------------------------
Outcome lbs_dominance() {
  double lbs_sum = 0.0, greedy_sum = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ToyModel m = init_toy_model(seed, nar_dims(16, 16));
    SeededRng rng(30'000 + seed);
    const CodeSequence first = random_codes(1, 8, 16, rng);
    const CodeSequence prompt(16, 0, 16);
    LbsConfig cfg;  // 10 / 20 / 3
    cfg.seed = seed;
    lbs_sum += lbs_generate(first, prompt, m.nar, cfg).total_score;
    greedy_sum += sequence_score(greedy_generate(first, prompt, m.nar, 16), prompt, m.nar);
  }
  return {lbs_sum >= greedy_sum, "mean lbs " + fmt(lbs_sum / 100) + " vs greedy " + fmt(greedy_sum / 100)};
}

// 4 ---------------------------------------------------------------------------
Outcome joint_oracle() {
  int same = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    ToyDims d;
    d.n_text = 3;
    d.codebook_size = 4;
    d.feature_dim = 16;
    const ToyModel m = init_toy_model(seed, d);
    SeededRng rng(40'000 + seed);
    const FeatureSequence semantic = random_features(1 + rng.below(6), 16, rng);
    std::vector<std::uint8_t> bits(1 + rng.below(5));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    const IsochronyTrack iso = IsochronyTrack::from_vad(bits);
    const auto acoustic = pool_acoustic_embedding(random_features(3, 16, rng), m.joint);

    BeamConfig cfg;
    cfg.max_text_len = 3;
    cfg.max_codec_frames = 3;
    cfg.beam_size = static_cast<std::size_t>(count_joint_sequences(d.vocab(), cfg));
    const auto ctx = prepare_joint_context(semantic, &iso, seed % 2 ? &acoustic : nullptr, m.joint);
    const auto beam = beam_search_joint(ctx, m.joint, cfg);
    const auto oracle = enumerate_joint_oracle(ctx, m.joint, cfg);
    same += beam.front().tokens == oracle.tokens && beam.front().joint_logp == oracle.joint_logp;
  }
  return {same == 100, std::to_string(same) + "/100 exact"};
}

// 5 ---------------------------------------------------------------------------
Outcome sep_masking() {
  int identical = 0, injected = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ToyDims d;
    d.n_text = 8;
    d.codebook_size = 16;
    const ToyModel m = init_toy_model(seed, d);
    const VocabLayout v = d.vocab();
    SeededRng rng(50'000 + seed);
    const FeatureSequence semantic = random_features(6, d.feature_dim, rng);
    const auto acoustic = pool_acoustic_embedding(random_features(10, d.feature_dim, rng), m.joint);
    std::vector<Token> seq(1 + rng.below(6));
    for (auto& t : seq) t = static_cast<Token>(rng.below(d.n_text));
    const std::size_t text_len = seq.size();
    seq.push_back(v.sep_id());
    for (int i = 0; i < 4; ++i) seq.push_back(v.codec_token(static_cast<CodeIndex>(rng.below(16))));

    const Matrix with = joint_forward(seq, prepare_joint_context(semantic, nullptr, &acoustic, m.joint), m.joint);
    const Matrix without = joint_forward(seq, prepare_joint_context(semantic, nullptr, nullptr, m.joint), m.joint);
    // Rows 0..text_len score the text tokens and SEP.
    const std::size_t n = (text_len + 1) * with.cols();
    identical += std::memcmp(with.data().data(), without.data().data(), n * sizeof(double)) == 0;
    injected += with.row(text_len + 1)[0] != without.row(text_len + 1)[0];
  }
  return {identical == 50 && injected == 50,
          std::to_string(identical) + "/50 bit-identical, injection visible after SEP in " + std::to_string(injected) +
              "/50"};
}

// 6 ---------------------------------------------------------------------------
Outcome rvq_monotone() {
  RvqConfig cfg;  // 16 layers, C = 256
  SeededRng rng(60);
  std::vector<FeatureSequence> train{random_features(1000, cfg.feature_dim, rng)};
  const RvqCodec codec = fit_codebooks(train, cfg, 20, SeededRng(61));
  const CodeSequence codes = encode(train[0], codec, cfg.n_layers);
  double prev = INFINITY;
  bool monotone = true;
  for (std::size_t n = 1; n <= cfg.n_layers; ++n) {
    const double e = mean_squared_error(decode(codes, codec, n), train[0]);
    monotone = monotone && e <= prev;
    prev = e;
  }
  double worst = 0.0;
  for (const auto& b : codec.books)
    for (std::size_t j = 0; j < b.entries.rows(); ++j) worst = std::max(worst, std::abs(l2_norm(b.entries.row(j)) - 1.0));
  return {monotone && worst <= 1e-6, std::string(monotone ? "non-increasing" : "increase found") +
                                         ", final mse " + fmt(prev) + ", max |norm-1| " + fmt(worst)};
}

// 7 ---------------------------------------------------------------------------
Outcome rvq_capacity() {
  RvqConfig cfg;
  cfg.n_layers = 1;
  cfg.codebook_size = 64;
  SeededRng rng(70);
  std::vector<FeatureSequence> train{random_features(64, cfg.feature_dim, rng)};
  const RvqCodec codec = fit_codebooks(train, cfg, 20, SeededRng(71));
  const FeatureSequence back = decode(encode(train[0], codec, 1), codec, 1);
  double worst = 0.0;
  for (std::size_t f = 0; f < 64; ++f) {
    double e = 0.0;
    for (std::size_t k = 0; k < cfg.feature_dim; ++k) e = std::max(e, std::abs(back.frames(f, k) - train[0].frames(f, k)));
    worst = std::max(worst, e);
  }
  return {worst <= 1e-6, "max per-frame error " + fmt(worst)};
}

// 8 ---------------------------------------------------------------------------
Outcome distill_zero() {
  RvqConfig cfg;
  cfg.n_layers = 4;
  SeededRng rng(80);
  std::vector<FeatureSequence> train{random_features(200, cfg.feature_dim, rng)};
  const RvqCodec codec = fit_codebooks(train, cfg, 5, SeededRng(81));
  const CodeSequence codes = encode(train[0], codec, 4);
  const double loss = distillation_loss(codes, codec, decode(codes, codec, 1)).total;
  return {loss <= 1e-12, "loss " + fmt(loss)};
}

// 9 ---------------------------------------------------------------------------
Outcome isochrony() {
  SeededRng rng(90);
  bool pos_ok = true;
  for (int t = 0; t < 200; ++t) {
    std::vector<std::uint8_t> bits(1 + rng.below(64));
    for (auto& b : bits) b = static_cast<std::uint8_t>(rng.below(2));
    const auto track = IsochronyTrack::from_vad(bits);
    for (std::size_t i = 0; i < track.n_frames(); ++i) pos_ok = pos_ok && track.pos[i] + track.rpos[i] == bits.size() - 1;
  }
  const std::vector<double> src{1.0}, gen{1.3};
  const bool slc_ok = slc(src, gen, 0.2) == 0.0 && slc(src, gen, 0.4) == 1.0;

  bool force_ok = true;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    ToyDims d;
    d.n_text = 4;
    d.codebook_size = 8;
    d.feature_dim = 8;
    const ToyModel m = init_toy_model(seed, d);
    const FeatureSequence semantic = random_features(4, 8, rng);
    for (std::size_t frames : {1, 2, 3}) {
      const IsochronyTrack iso = IsochronyTrack::active(frames);
      BeamConfig cfg;
      cfg.max_text_len = 4;
      cfg.force_frames = frames;
      for (const auto& h : beam_search_joint(semantic, &iso, nullptr, m.joint, cfg))
        force_ok = force_ok && h.codec_len == frames * 8;
    }
  }
  return {pos_ok && slc_ok && force_ok, std::string("pos+rpos ") + (pos_ok ? "ok" : "bad") + ", slc " +
                                            (slc_ok ? "ok" : "bad") + ", force_frames " + (force_ok ? "ok" : "bad")};
}

// 10 --------------------------------------------------------------------------
Outcome loss_masks() {
  const VocabLayout vocab{16, 32};
  SeededRng rng(100);
  int ok = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t frames = 1 + rng.below(300);
    Utterance src, tgt;
    src.features = random_features(frames, 4, rng);
    tgt.features = random_features(frames, 4, rng);
    src.codes = random_codes(2, frames, 32, rng);
    tgt.codes = random_codes(2, frames, 32, rng);
    src.text.resize(rng.below(12));
    tgt.text.resize(1 + rng.below(12));
    for (auto& x : src.text) x = static_cast<Token>(rng.below(16));
    for (auto& x : tgt.text) x = static_cast<Token>(rng.below(16));
    const FrameInterval region = sample_prompt_region(frames, rng);
    if (t % 2 == 0) {
      const Direction dir = t % 4 == 0 ? Direction::Forward : Direction::Reverse;
      const auto ex = build_example_s2st(src, tgt, region, dir, InputModality::Speech, vocab);
      ok += ex.masked_count() == expected_masked_count(ex.kind, 0, region);
    } else {
      const auto ex = build_example_asr(src, region, vocab);
      bool span = true;
      for (std::size_t i = 0; i < src.text.size(); ++i) span = span && ex.loss_mask[i] == 0;
      ok += span && ex.masked_count() == expected_masked_count(ex.kind, src.text.size(), region);
    }
  }
  return {ok == 200, std::to_string(ok) + "/200 match"};
}

// 11 --------------------------------------------------------------------------
int run(const std::string& cmd) { return std::system(cmd.c_str()); }

std::string slurp(const fs::path& p) {
  const auto bytes = io::read_file(p);
  return {bytes.begin(), bytes.end()};
}

Outcome cli_determinism() {
  const fs::path root = fs::temp_directory_path() / "s2st_acceptance_cli";
  fs::remove_all(root);
  fs::create_directories(root / "in");
  const fs::path in = root / "in";

  SeededRng rng(110);
  for (int i = 0; i < 3; ++i) {
    std::vector<std::int16_t> pcm(16000 + 4000 * i);
    double phase = 0.0;
    for (std::size_t k = 0; k < pcm.size(); ++k) {
      phase += 2.0 * std::numbers::pi * (300.0 + 200.0 * i) / 16000.0;
      const bool gap = (k / 2560) % 3 == 1;
      pcm[k] = gap ? 0 : static_cast<std::int16_t>(6000.0 * std::sin(phase) + 100.0 * rng.normal());
    }
    io::write_pcm(in / ("a" + std::to_string(i) + ".pcm"), pcm);
  }
  {
    std::ofstream os(in / "manifest.txt");
    os << "kind=s2st-fwd src_feat=f.sasf src_codes=c.sasq tgt_feat=f.sasf tgt_codes=c.sasq src_text=1,2 tgt_text=3\n"
          "kind=asr-tts src_feat=f.sasf src_codes=c.sasq src_text=4,5,6\n"
          "kind=st-rev src_feat=f.sasf src_codes=c.sasq src_text=1 tgt_text=2,3 confidence=0.4\n";
  }

  const std::string cli = S2ST_CLI_PATH;
  const std::string i = in.string();
  // Shared inputs produced once.
  const std::string prep =
      "(" + cli + " codec featurize --pcm " + i + "/a0.pcm --out " + i + "/f.sasf --feature-dim 16 && " + cli +
      " codec fit --pcm " + i + "/a0.pcm " + i + "/a1.pcm --feature-dim 16 --layers 4 --codebook-size 16 --iters 5 --out " +
      i + "/codec.sasb --seed 1 && " + cli + " codec encode --codec " + i + "/codec.sasb --features " + i + "/f.sasf --out " +
      i + "/c.sasq && " + cli + " model init --out " + i + "/m.tvtm --d-model 16 --ffn-hidden 16 --n-text 6" +
      " --codebook-size 16 --feature-dim 16 --codec-layers 4 --seed 2) > /dev/null";
  if (run(prep) != 0) return {false, "input preparation failed"};

  const std::vector<std::string> commands = {
      "codec featurize --pcm " + i + "/a2.pcm --out @/feat.sasf --feature-dim 16",
      "codec fit --pcm " + i + "/a0.pcm " + i + "/a1.pcm " + i +
          "/a2.pcm --feature-dim 16 --layers 4 --codebook-size 16 --iters 5 --out @/codec.sasb --seed 7",
      "codec encode --codec " + i + "/codec.sasb --pcm " + i + "/a2.pcm --out @/codes.sasq",
      "codec decode --codec " + i + "/codec.sasb --codes " + i + "/c.sasq --out @/dec.sasf --reference " + i + "/f.sasf",
      "codec distill --codec " + i + "/codec.sasb --codes " + i + "/c.sasq --teacher " + i + "/f.sasf",
      "model init --out @/model.tvtm --d-model 16 --ffn-hidden 16 --n-text 6 --codebook-size 16 --feature-dim 16 "
      "--codec-layers 4 --seed 5",
      "translate --model " + i + "/m.tvtm --semantic " + i + "/f.sasf --prompt " + i + "/f.sasf --iso-pcm " + i +
          "/a0.pcm --beam 4 --max-text 4 --out @/hyps.json --codes-out @/first.sasq --seed 3",
      "translate --model " + i + "/m.tvtm --semantic " + i + "/f.sasf --duration 0.3 --force-frames 2 --max-text 3 " +
          "--out @/hyps_forced.json",
      "nar --model " + i + "/m.tvtm --first " + i + "/c.sasq --prompt " + i + "/c.sasq --out @/nar_lbs.sasq --seed 9",
      "nar --model " + i + "/m.tvtm --first " + i + "/c.sasq --greedy --out @/nar_greedy.sasq --seed 9",
      "metrics --src " + i + "/a0.pcm " + i + "/a1.pcm --gen " + i + "/a1.pcm " + i + "/a2.pcm --report @/metrics.json",
      "data build --manifest " + i + "/manifest.txt --codebook-size 16 --n-text 8 --min-confidence 0.5 --out " +
          "@/examples.json --seed 4",
      "selftest",
  };

  std::vector<std::string> runs = {"t1a", "t1b", "t4"};
  for (const auto& r : runs) {
    fs::create_directories(root / r);
    const std::string threads = r == "t4" ? "4" : "1";
    for (std::size_t c = 0; c < commands.size(); ++c) {
      std::string cmd = commands[c];
      for (std::size_t pos; (pos = cmd.find('@')) != std::string::npos;) cmd.replace(pos, 1, (root / r).string());
      const std::string full = cli + " " + cmd + " --threads " + threads + " > " + (root / r).string() + "/stdout_" +
                               std::to_string(c) + ".txt 2>&1";
      if (run(full) != 0) return {false, "command failed: " + cmd};
    }
  }
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(root / "t1a")) {
    const auto name = e.path().filename();
    const std::string a = slurp(e.path());
    if (a != slurp(root / "t1b" / name)) return {false, name.string() + " differs between runs"};
    if (a != slurp(root / "t4" / name)) return {false, name.string() + " differs between thread counts"};
    ++files;
  }
  fs::remove_all(root);
  return {true, std::to_string(commands.size()) + " commands, " + std::to_string(files) + " files byte-identical"};
}

// 12 --------------------------------------------------------------------------
Outcome file_formats() {
  SeededRng rng(120);
  const FeatureSequence feat = random_features(37, 12, rng);
  const CodeSequence codes = random_codes(5, 23, 300, rng);
  RvqConfig cfg;
  cfg.n_layers = 3;
  cfg.codebook_size = 16;
  cfg.feature_dim = 12;
  std::vector<FeatureSequence> train{feat};
  const RvqCodec codec = fit_codebooks(train, cfg, 3, SeededRng(121));
  ToyDims d;
  d.d_model = 16;
  d.ffn_hidden = 24;
  d.codebook_size = 16;
  d.feature_dim = 12;
  d.n_codec_layers = 3;
  const ToyModel model = init_toy_model(122, d);

  const auto f1 = io::features_to_bytes(feat);
  const auto c1 = io::codes_to_bytes(codes);
  const auto b1 = io::codec_to_bytes(codec);
  const auto m1 = io::model_to_bytes(model);
  const bool ok = io::features_to_bytes(io::features_from_bytes(f1)) == f1 &&
                  io::codes_to_bytes(io::codes_from_bytes(c1)) == c1 &&
                  io::codec_to_bytes(io::codec_from_bytes(b1)) == b1 &&
                  io::model_to_bytes(io::model_from_bytes(m1)) == m1;
  return {ok, ok ? "features, codes, codec, model stable" : "a format changed on rewrite"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> fn;
    double budget_s;  // 0 = no runtime bound
  };
  const std::vector<Criterion> criteria = {
      {"1  LBS(1,1,1) equals greedy", lbs_degenerate, 30.0},
      {"2  LBS attains exhaustive oracle", lbs_oracle, 120.0},
      {"3  LBS mean score >= greedy", lbs_dominance, 60.0},
      {"4  joint beam search equals enumeration", joint_oracle, 120.0},
      {"5  text-phase log-probs ignore acoustic SEP input", sep_masking, 0.0},
      {"6  RVQ error monotone, unit-norm entries", rvq_monotone, 60.0},
      {"7  RVQ capacity roundtrip", rvq_capacity, 0.0},
      {"8  distillation zero case", distill_zero, 0.0},
      {"9  isochrony tracks, SLC, forced length", isochrony, 0.0},
      {"10 loss-mask counts", loss_masks, 0.0},
      {"11 CLI determinism across runs and threads", cli_determinism, 0.0},
      {"12 file formats rewrite bit-exactly", file_formats, 0.0},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (c.budget_s > 0.0 && secs > c.budget_s) {
      o.passed = false;
      o.detail += ", over time budget";
    }
    std::cout << (o.passed ? "[PASS] " : "[FAIL] ") << c.name << ": " << o.detail << " (" << fmt(secs) << " s)"
              << std::endl;
    failures += !o.passed;
  }
  return failures == 0 ? 0 : 1;
}
