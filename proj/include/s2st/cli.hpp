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

// Command-line front end.
//
//   s2st codec featurize|fit|encode|decode|distill
//   s2st model init
//   s2st translate
//   s2st nar
//   s2st metrics
//   s2st data build
//   s2st selftest
//
// Every leaf subcommand takes --seed and --threads. --seed falls back to
// the TVIP_SEED environment variable, then 0. `--config FILE` reads
// key=value lines (sections or dotted keys address subcommands, e.g.
// `nar.beam=4`); flags on the command line win over the file.
//
// Exit status: 0 success, 2 usage error, 1 runtime error.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "s2st/data_pipeline.hpp"
#include "s2st/error.hpp"
#include "s2st/file_format.hpp"
#include "s2st/isochrony.hpp"
#include "s2st/joint_decoder.hpp"
#include "s2st/layer_beam_search.hpp"
#include "s2st/report.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/selftest.hpp"
#include "s2st/toy_model.hpp"

namespace s2st::cli {

/// Bad flag combination detected after parsing; exits with status 2.
class UsageError : public std::runtime_error {
 public:
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

struct CommonOptions {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
};

/// Parses a 0/1 string into VAD bits.
inline std::vector<std::uint8_t> parse_bits_arg(const std::string& s) {
  std::vector<std::uint8_t> out;
  for (char c : s) {
    if (c != '0' && c != '1') throw UsageError("--iso-vad must be a string of 0 and 1");
    out.push_back(c == '1' ? 1 : 0);
  }
  return out;
}

namespace detail {

namespace fs = std::filesystem;

inline void add_common(CLI::App* sub, CommonOptions& c) {
  sub->add_option("--seed", c.seed, "Random seed")->envname("TVIP_SEED");
  sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
}

inline void write_json(const fs::path& p, const nlohmann::json& j) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw FormatError("cannot open " + p.string() + " for writing");
  os << j.dump(2) << '\n';
  if (!os) throw FormatError("write failed: " + p.string());
}

inline std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw FormatError("cannot open " + p.string());
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// ---------------------------------------------------------------------------
// codec
// ---------------------------------------------------------------------------

struct CodecOptions {
  CommonOptions common;
  std::string pcm, features, codec, codes, out, reference, teacher;
  std::vector<std::string> train_features, train_pcm;
  RvqConfig cfg;
  std::size_t iters = 20;
  std::size_t layers = 0;  // 0 = every layer in the codec
};

inline FeatureSequence load_input(const CodecOptions& o, const RvqConfig& cfg) {
  if (!o.pcm.empty() && !o.features.empty()) throw UsageError("give either --pcm or --features, not both");
  if (!o.pcm.empty()) return featurize(io::read_pcm(o.pcm), cfg);
  if (!o.features.empty()) return io::read_features(o.features);
  throw UsageError("one of --pcm or --features is required");
}

inline std::size_t layer_count(std::size_t requested, const RvqCodec& codec) {
  return requested == 0 ? codec.config.n_layers : requested;
}

inline void register_codec(CLI::App& app, CodecOptions& o, std::ostream& out) {
  auto* codec = app.add_subcommand("codec", "Residual vector quantizer");
  codec->require_subcommand(1);

  auto* feat = codec->add_subcommand("featurize", "PCM (s16le mono 16 kHz) to a feature file");
  add_common(feat, o.common);
  feat->add_option("--pcm", o.pcm, "Input PCM")->required();
  feat->add_option("--out", o.out, "Output feature file")->required();
  feat->add_option("--feature-dim", o.cfg.feature_dim, "Feature bands");
  feat->callback([&] {
    io::write_features(o.out, featurize(io::read_pcm(o.pcm), o.cfg));
  });

  auto* fit = codec->add_subcommand("fit", "Fit codebooks");
  add_common(fit, o.common);
  fit->add_option("--features", o.train_features, "Training feature files");
  fit->add_option("--pcm", o.train_pcm, "Training PCM files");
  fit->add_option("--out", o.out, "Output codec file")->required();
  fit->add_option("--layers", o.cfg.n_layers, "RVQ layers");
  fit->add_option("--codebook-size", o.cfg.codebook_size, "Entries per codebook");
  fit->add_option("--feature-dim", o.cfg.feature_dim, "Feature bands");
  fit->add_option("--code-dim", o.cfg.code_dim, "Code space dimension");
  fit->add_option("--iters", o.iters, "k-means iterations per layer");
  fit->add_option("--ema-decay", o.cfg.ema_decay, "EMA decay");
  fit->add_option("--dead-threshold", o.cfg.dead_threshold, "Re-seed entries whose EMA count falls below this");
  fit->add_option("--distill-weight", o.cfg.distill_l1_weight, "L1 weight in the distillation loss");
  fit->callback([&] {
    if (o.train_features.empty() && o.train_pcm.empty()) throw UsageError("codec fit needs --features or --pcm");
    std::vector<FeatureSequence> train;
    for (const auto& p : o.train_features) train.push_back(io::read_features(p));
    for (const auto& p : o.train_pcm) train.push_back(featurize(io::read_pcm(p), o.cfg));
    const RvqCodec c = fit_codebooks(train, o.cfg, o.iters, SeededRng(o.common.seed));
    io::write_codec(o.out, c);
    std::size_t frames = 0;
    for (const auto& t : train) frames += t.n_frames();
    out << "frames=" << frames << '\n';
  });

  auto* enc = codec->add_subcommand("encode", "Features or PCM to codes");
  add_common(enc, o.common);
  enc->add_option("--codec", o.codec, "Codec file")->required();
  enc->add_option("--features", o.features, "Input feature file");
  enc->add_option("--pcm", o.pcm, "Input PCM");
  enc->add_option("--out", o.out, "Output code file")->required();
  enc->add_option("--layers", o.layers, "Layers to emit (0 = all)");
  enc->callback([&] {
    const RvqCodec c = io::read_codec(o.codec);
    const FeatureSequence f = load_input(o, c.config);
    io::write_codes(o.out, encode(f, c, layer_count(o.layers, c), o.common.threads));
  });

  auto* dec = codec->add_subcommand("decode", "Codes to features");
  add_common(dec, o.common);
  dec->add_option("--codec", o.codec, "Codec file")->required();
  dec->add_option("--codes", o.codes, "Input code file")->required();
  dec->add_option("--out", o.out, "Output feature file")->required();
  dec->add_option("--layers", o.layers, "Layers to sum (0 = all in the code file)");
  dec->add_option("--reference", o.reference, "Feature file to report MSE against");
  dec->callback([&] {
    const RvqCodec c = io::read_codec(o.codec);
    const CodeSequence codes = io::read_codes(o.codes);
    const FeatureSequence f = decode(codes, c, o.layers == 0 ? codes.n_layers() : o.layers);
    io::write_features(o.out, f);
    if (!o.reference.empty()) {
      std::ostringstream os;
      os.precision(17);
      os << "mse=" << mean_squared_error(f, io::read_features(o.reference)) << '\n';
      out << os.str();
    }
  });

  auto* dist = codec->add_subcommand("distill", "First-layer distillation loss against teacher features");
  add_common(dist, o.common);
  dist->add_option("--codec", o.codec, "Codec file")->required();
  dist->add_option("--codes", o.codes, "Code file")->required();
  dist->add_option("--teacher", o.teacher, "Teacher feature file")->required();
  dist->callback([&] {
    const auto loss = distillation_loss(io::read_codes(o.codes), io::read_codec(o.codec), io::read_features(o.teacher));
    std::ostringstream os;
    os.precision(17);
    os << "cosine=" << loss.cosine_term << "\nl1=" << loss.l1_term << "\ntotal=" << loss.total << '\n';
    out << os.str();
  });
}

// ---------------------------------------------------------------------------
// model
// ---------------------------------------------------------------------------

struct ModelOptions {
  CommonOptions common;
  std::string out;
  ToyDims dims;
};

inline void register_model(CLI::App& app, ModelOptions& o, std::ostream& out) {
  auto* model = app.add_subcommand("model", "Toy model files");
  model->require_subcommand(1);
  auto* init = model->add_subcommand("init", "Write a randomly initialized toy model");
  add_common(init, o.common);
  init->add_option("--out", o.out, "Output model file")->required();
  init->add_option("--d-model", o.dims.d_model, "Hidden size");
  init->add_option("--heads", o.dims.heads, "Attention heads");
  init->add_option("--blocks", o.dims.blocks, "Transformer blocks per stack");
  init->add_option("--ffn-hidden", o.dims.ffn_hidden, "Feed-forward hidden size");
  init->add_option("--acoustic-blocks", o.dims.acoustic_blocks, "Acoustic encoder blocks");
  init->add_option("--n-text", o.dims.n_text, "Text vocabulary size");
  init->add_option("--codebook-size", o.dims.codebook_size, "Codec entries per layer");
  init->add_option("--feature-dim", o.dims.feature_dim, "Input feature dimension");
  init->add_option("--codec-layers", o.dims.n_codec_layers, "RVQ layers");
  init->add_option("--max-iso-frames", o.dims.max_iso_frames, "Longest isochrony track");
  init->add_option("--acoustic-positions", o.dims.acoustic_positions, "Positions in the acoustic encoder");
  init->callback([&] {
    o.dims.validate();
    const ToyModel m = init_toy_model(o.common.seed, o.dims);
    io::write_model(o.out, m);
    out << "parameters=" << parameter_count(m) << '\n';
  });
}

// ---------------------------------------------------------------------------
// translate
// ---------------------------------------------------------------------------

struct TranslateOptions {
  CommonOptions common;
  std::string model, semantic, prompt, iso_pcm, iso_vad, out, codes_out;
  std::optional<double> duration;
  BeamConfig beam;
  std::optional<std::size_t> force_frames;
};

inline nlohmann::json hypothesis_json(const JointHypothesis& h, const VocabLayout& vocab, std::size_t rank) {
  nlohmann::json j;
  j["rank"] = rank;
  j["text"] = h.text();
  j["codec"] = h.codec(vocab);
  j["text_logp"] = h.text_logp;
  j["codec_logp"] = h.codec_logp;
  j["joint_logp"] = h.joint_logp;
  return j;
}

inline void register_translate(CLI::App& app, TranslateOptions& o, std::ostream& out) {
  auto* tr = app.add_subcommand("translate", "Joint text and first-layer codec beam search");
  add_common(tr, o.common);
  tr->add_option("--model", o.model, "Model file")->required();
  tr->add_option("--semantic", o.semantic, "Source semantic feature file")->required();
  tr->add_option("--prompt", o.prompt, "Acoustic prompt feature file (clipped to 10 s)");
  auto* pcm = tr->add_option("--iso-pcm", o.iso_pcm, "Source PCM; VAD gives the isochrony track");
  auto* vad = tr->add_option("--iso-vad", o.iso_vad, "Isochrony track as a 0/1 string, one bit per 160 ms");
  auto* dur = tr->add_option("--duration", o.duration, "Isochrony track of this many seconds, all active");
  pcm->excludes(vad)->excludes(dur);
  vad->excludes(dur);
  tr->add_option("--beam", o.beam.beam_size, "Beam size");
  tr->add_option("--min-text", o.beam.min_text_len, "Minimum text tokens");
  tr->add_option("--max-text", o.beam.max_text_len, "Maximum text tokens");
  tr->add_option("--min-codec", o.beam.min_codec_len, "Minimum codec tokens");
  tr->add_option("--max-codec", o.beam.max_codec_frames, "Maximum codec tokens");
  tr->add_option("--force-frames", o.force_frames, "Force EOS after exactly 8 codec tokens per frame");
  tr->add_flag("--length-normalize", o.beam.length_normalize, "Rank finished hypotheses by mean log-prob");
  tr->add_option("--out", o.out, "Output hypotheses (JSON)")->required();
  tr->add_option("--codes-out", o.codes_out, "First-layer codes of the best hypothesis");
  tr->callback([&] {
    const ToyModel m = io::read_model(o.model);
    const FeatureSequence semantic = io::read_features(o.semantic);
    std::optional<IsochronyTrack> iso;
    if (!o.iso_pcm.empty()) iso = IsochronyTrack::from_vad(vad_frames(io::read_pcm(o.iso_pcm)));
    if (!o.iso_vad.empty()) iso = IsochronyTrack::from_vad(parse_bits_arg(o.iso_vad));
    if (o.duration) iso = IsochronyTrack::active(duration_frames(*o.duration));
    std::optional<std::vector<double>> acoustic;
    if (!o.prompt.empty())
      acoustic = pool_acoustic_embedding(clip_prompt(io::read_features(o.prompt), PromptPurpose::Joint), m.joint);

    BeamConfig cfg = o.beam;
    cfg.force_frames = o.force_frames;
    cfg.threads = o.common.threads;
    const auto hyps = beam_search_joint(semantic, iso ? &*iso : nullptr, acoustic ? &*acoustic : nullptr, m.joint, cfg);
    const VocabLayout vocab = m.dims.vocab();

    nlohmann::json j;
    j["schema"] = "s2st.hyps/1";
    j["hypotheses"] = nlohmann::json::array();
    for (std::size_t i = 0; i < hyps.size(); ++i) j["hypotheses"].push_back(hypothesis_json(hyps[i], vocab, i));
    write_json(o.out, j);
    if (!o.codes_out.empty()) {
      const auto codec = hyps.front().codec(vocab);
      io::write_codes(o.codes_out, CodeSequence(1, codec.size(), vocab.codebook_size, codec));
    }
    std::ostringstream os;
    os.precision(17);
    os << "best_joint_logp=" << hyps.front().joint_logp << "\ntext_len=" << hyps.front().text_len
       << "\ncodec_len=" << hyps.front().codec_len << '\n';
    out << os.str();
  });
}

// ---------------------------------------------------------------------------
// nar
// ---------------------------------------------------------------------------

struct NarOptions {
  CommonOptions common;
  std::string model, first, prompt, out;
  bool greedy = false;
  LbsConfig lbs;
  std::size_t layers = 0;  // 0 = every layer of the model
};

inline void register_nar(CLI::App& app, NarOptions& o, std::ostream& out) {
  auto* nar = app.add_subcommand("nar", "Generate RVQ layers 1..N-1 from the first layer");
  add_common(nar, o.common);
  nar->add_option("--model", o.model, "Model file")->required();
  nar->add_option("--first", o.first, "Code file; its layer 0 is the first layer")->required();
  nar->add_option("--prompt", o.prompt, "Prompt code file with every layer (clipped to 5 s)");
  auto* greedy = nar->add_flag("--greedy", o.greedy, "Per-position argmax instead of layer beam search");
  nar->add_option("--beam", o.lbs.beam_size, "Layer beam size")->excludes(greedy);
  nar->add_option("--samples", o.lbs.n_sample, "Sampled fillings per beam entry")->excludes(greedy);
  nar->add_option("--topk", o.lbs.top_k, "Top-K per position")->excludes(greedy);
  nar->add_option("--layers", o.layers, "Total layers to produce (0 = model's)");
  nar->add_option("--out", o.out, "Output code file")->required();
  nar->callback([&] {
    const ToyModel m = io::read_model(o.model);
    const CodeSequence first = io::read_codes(o.first).prefix(1);
    CodeSequence prompt(m.dims.n_codec_layers, 0, m.dims.codebook_size);
    if (!o.prompt.empty()) {
      const CodeSequence p = io::read_codes(o.prompt);
      const std::size_t frames = std::min(p.n_frames(), kNarPromptFrames);
      std::vector<CodeIndex> grid;
      for (std::size_t l = 0; l < p.n_layers(); ++l)
        for (std::size_t f = 0; f < frames; ++f) grid.push_back(p.at(l, f));
      prompt = CodeSequence(p.n_layers(), frames, p.codebook_size(), std::move(grid));
    }
    const std::size_t layers = o.layers == 0 ? m.dims.n_codec_layers : o.layers;
    CodeSequence result;
    double score = 0.0;
    if (o.greedy) {
      result = greedy_generate(first, prompt, m.nar, layers);
      score = sequence_score(result, prompt, m.nar);
    } else {
      LbsConfig cfg = o.lbs;
      cfg.n_codebook = layers;
      cfg.seed = o.common.seed;
      cfg.threads = o.common.threads;
      const LbsResult r = lbs_generate(first, prompt, m.nar, cfg);
      result = r.codes;
      score = r.total_score;
    }
    io::write_codes(o.out, result);
    std::ostringstream os;
    os.precision(17);
    os << "score=" << score << '\n';
    out << os.str();
  });
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct MetricsOptions {
  CommonOptions common;
  std::vector<std::string> src, gen;
  std::vector<double> src_durations, gen_durations;
  std::string report;
};

inline void register_metrics(CLI::App& app, MetricsOptions& o, std::ostream& out) {
  auto* met = app.add_subcommand("metrics", "Speech length compliance and pause counts");
  add_common(met, o.common);
  auto* src = met->add_option("--src", o.src, "Source PCM files");
  auto* gen = met->add_option("--gen", o.gen, "Generated PCM files, paired with --src");
  auto* sd = met->add_option("--src-durations", o.src_durations, "Source durations in seconds");
  auto* gd = met->add_option("--gen-durations", o.gen_durations, "Generated durations in seconds");
  src->excludes(sd)->excludes(gd);
  gen->excludes(sd)->excludes(gd);
  met->add_option("--report", o.report, "Write the JSON report here");
  met->callback([&] {
    std::vector<MetricsItem> items;
    if (!o.src.empty() || !o.gen.empty()) {
      if (o.src.size() != o.gen.size()) throw UsageError("--src and --gen must pair up");
      for (std::size_t i = 0; i < o.src.size(); ++i) {
        const auto a = io::read_pcm(o.src[i]);
        const auto b = io::read_pcm(o.gen[i]);
        MetricsItem it;
        it.src_duration = static_cast<double>(a.size()) / 16000.0;
        it.gen_duration = static_cast<double>(b.size()) / 16000.0;
        it.src_pauses = pause_count(vad_frames(a));
        it.gen_pauses = pause_count(vad_frames(b));
        items.push_back(it);
      }
    } else {
      if (o.src_durations.size() != o.gen_durations.size() || o.src_durations.empty())
        throw UsageError("give paired --src/--gen or --src-durations/--gen-durations");
      for (std::size_t i = 0; i < o.src_durations.size(); ++i)
        items.push_back({o.src_durations[i], o.gen_durations[i], std::nullopt, std::nullopt});
    }
    const MetricsReport r = compute_metrics(std::move(items));
    out << metrics_to_text(r);
    if (!o.report.empty()) write_json(o.report, metrics_to_json(r));
  });
}

// ---------------------------------------------------------------------------
// data build
// ---------------------------------------------------------------------------

struct DataOptions {
  CommonOptions common;
  std::string manifest, out;
  double min_confidence = 0.0;
  std::size_t n_text = 32;
  std::size_t codebook_size = 256;
  double dropout = 0.5;
};

inline Utterance load_utterance(const fs::path& base, const std::string& feat, const std::string& codes,
                                const std::vector<std::uint8_t>& vad, const std::vector<Token>& text) {
  Utterance u;
  if (!feat.empty()) u.features = io::read_features(base / feat);
  if (!codes.empty()) u.codes = io::read_codes(base / codes);
  u.vad = vad;
  u.text = text;
  return u;
}

inline nlohmann::json build_one(const ManifestRecord& rec, const fs::path& base, const DataOptions& o,
                                const SeededRng& root) {
  const VocabLayout vocab{o.n_text, o.codebook_size};
  const Utterance src = load_utterance(base, rec.src_feat, rec.src_codes, rec.src_vad, rec.src_text);
  const Utterance tgt = load_utterance(base, rec.tgt_feat, rec.tgt_codes, rec.tgt_vad, rec.tgt_text);
  SeededRng rng = root.child(rec.line);

  auto region_for = [&](const Utterance& u) {
    if (rec.prompt) return *rec.prompt;
    s2st::detail::require(u.codes.has_value(), "data build: speech label needs codes");
    return sample_prompt_region(u.codes->n_frames(), rng);
  };

  TrainingExample ex;
  FrameInterval region{};
  switch (rec.kind) {
    case ExampleKind::S2stForward:
    case ExampleKind::S2stReverse: {
      const Direction d = rec.kind == ExampleKind::S2stForward ? Direction::Forward : Direction::Reverse;
      region = region_for(d == Direction::Forward ? tgt : src);
      ex = build_example_s2st(src, tgt, region, d, rec.input, vocab);
      break;
    }
    case ExampleKind::StForward: ex = build_example_st(src, tgt.text, Direction::Forward, vocab); break;
    case ExampleKind::StReverse: ex = build_example_st(src, tgt.text, Direction::Reverse, vocab); break;
    case ExampleKind::AsrAsTts:
      region = region_for(src);
      ex = build_example_asr(src, region, vocab);
      break;
  }
  ex.confidence = rec.confidence;
  const std::size_t masked_before_dropout = ex.masked_count();
  if (ex.acoustic_prompt) ex = acoustic_dropout(std::move(ex), rng, o.dropout);

  nlohmann::json j;
  j["line"] = rec.line;
  j["kind"] = kind_name(ex.kind);
  j["input"] = ex.text_input() ? "text" : "speech";
  j["label"] = ex.label;
  j["loss_mask"] = ex.loss_mask;
  j["masked"] = masked_before_dropout;
  j["prompt_region"] = region.empty() ? nlohmann::json(nullptr) : nlohmann::json::array({region.begin, region.end});
  j["acoustic_prompt"] = ex.acoustic_prompt.has_value();
  j["iso_frames"] = ex.iso ? nlohmann::json(ex.iso->n_frames()) : nlohmann::json(nullptr);
  j["confidence"] = ex.confidence;
  j["phase_legal"] = label_is_phase_legal(ex.label, vocab);
  return j;
}

inline void register_data(CLI::App& app, DataOptions& o, std::ostream& out) {
  auto* data = app.add_subcommand("data", "Training-example construction");
  data->require_subcommand(1);
  auto* build = data->add_subcommand("build", "Manifest to a training-example report");
  add_common(build, o.common);
  build->add_option("--manifest", o.manifest, "Manifest file (paths relative to it)")->required();
  build->add_option("--out", o.out, "Output report (JSON)")->required();
  build->add_option("--min-confidence", o.min_confidence, "Skip records below this confidence");
  build->add_option("--n-text", o.n_text, "Text vocabulary size");
  build->add_option("--codebook-size", o.codebook_size, "Codec entries per layer");
  build->add_option("--dropout", o.dropout, "Acoustic prompt dropout probability")->check(CLI::Range(0.0, 1.0));
  build->callback([&] {
    const fs::path base = fs::path(o.manifest).parent_path();
    const SeededRng root(o.common.seed);
    const auto lines = read_lines(o.manifest);

    std::vector<ManifestRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
      const auto first = lines[i].find_first_not_of(" \t\r");
      if (first == std::string::npos || lines[i][first] == '#') continue;
      records.push_back(parse_manifest_line(lines[i], i + 1));
    }
    std::vector<nlohmann::json> built(records.size());
    std::vector<std::uint8_t> kept(records.size(), 0);
    parallel_for(records.size(), o.common.threads, [&](std::size_t i) {
      if (records[i].confidence < o.min_confidence) return;
      built[i] = build_one(records[i], base, o, root);
      kept[i] = 1;
    });

    nlohmann::json report;
    report["schema"] = "s2st.examples/1";
    report["examples"] = nlohmann::json::array();
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (kept[i]) {
        report["examples"].push_back(std::move(built[i]));
      } else {
        ++skipped;
      }
    }
    report["skipped"] = skipped;
    write_json(o.out, report);
    out << "examples=" << report["examples"].size() << "\nskipped=" << skipped << '\n';
  });
}

}  // namespace detail

inline int dispatch(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"Toy joint speech-to-speech translation pipeline", "s2st"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value configuration file; flags override it");
  app.fallthrough();

  detail::CodecOptions codec;
  detail::ModelOptions model;
  detail::TranslateOptions translate;
  detail::NarOptions nar;
  detail::MetricsOptions metrics;
  detail::DataOptions data;
  CommonOptions selftest_common;

  detail::register_codec(app, codec, out);
  detail::register_model(app, model, out);
  detail::register_translate(app, translate, out);
  detail::register_nar(app, nar, out);
  detail::register_metrics(app, metrics, out);
  detail::register_data(app, data, out);

  auto* st = app.add_subcommand("selftest", "Run the built-in oracle checks");
  detail::add_common(st, selftest_common);
  bool selftest_failed = false;
  st->callback([&] {
    for (const auto& r : selftest::run_all()) {
      out << (r.passed ? "[PASS] " : "[FAIL] ") << r.name;
      if (!r.detail.empty()) out << " (" << r.detail << ")";
      out << '\n';
      selftest_failed = selftest_failed || !r.passed;
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return selftest_failed ? 1 : 0;
}

}  // namespace s2st::cli
