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

// Multi-task training examples for the joint model.
//
// Every label is written in the combined vocabulary and contains exactly one
// separator: target text, SEP, then (when speech exists) layer-0 codec
// tokens and EOS. The loss mask zeroes label positions the model must not be
// trained on: codec frames inside the acoustic prompt region, and the copied
// source text of ASR-as-TTS examples.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/isochrony.hpp"
#include "s2st/joint_decoder.hpp"
#include "s2st/numerics.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/toy_model.hpp"

namespace s2st {

enum class ExampleKind : std::uint8_t { S2stForward, S2stReverse, StForward, StReverse, AsrAsTts };
enum class Direction : std::uint8_t { Forward, Reverse };
enum class InputModality : std::uint8_t { Speech, Text };
enum class PromptPurpose : std::uint8_t { Joint, Nar };

inline const char* kind_name(ExampleKind k) {
  switch (k) {
    case ExampleKind::S2stForward: return "s2st-fwd";
    case ExampleKind::S2stReverse: return "s2st-rev";
    case ExampleKind::StForward: return "st-fwd";
    case ExampleKind::StReverse: return "st-rev";
    case ExampleKind::AsrAsTts: return "asr-tts";
  }
  return "?";
}

inline std::optional<ExampleKind> parse_kind(std::string_view s) {
  for (auto k : {ExampleKind::S2stForward, ExampleKind::S2stReverse, ExampleKind::StForward, ExampleKind::StReverse,
                 ExampleKind::AsrAsTts})
    if (s == kind_name(k)) return k;
  return std::nullopt;
}

/// Half-open range of 50 Hz codec frames.
struct FrameInterval {
  std::size_t begin = 0;
  std::size_t end = 0;

  bool empty() const { return end <= begin; }
  std::size_t size() const { return empty() ? 0 : end - begin; }
  friend bool operator==(const FrameInterval&, const FrameInterval&) = default;
};

/// One side of a speech pair. `codes` is absent for text-only corpora; an
/// empty `vad` means "treat every 160 ms frame as active".
struct Utterance {
  FeatureSequence features;
  std::optional<CodeSequence> codes;
  std::vector<std::uint8_t> vad;
  std::vector<Token> text;
};

struct TrainingExample {
  ExampleKind kind = ExampleKind::S2stForward;
  std::variant<std::vector<Token>, FeatureSequence> input;
  std::optional<IsochronyTrack> iso;
  std::optional<FeatureSequence> acoustic_prompt;
  std::vector<Token> label;
  std::vector<std::uint8_t> loss_mask;
  double confidence = 1.0;

  bool text_input() const { return std::holds_alternative<std::vector<Token>>(input); }
  std::size_t masked_count() const {
    return static_cast<std::size_t>(std::count(loss_mask.begin(), loss_mask.end(), std::uint8_t{0}));
  }
};

namespace detail {

inline void check_text(std::span<const Token> text, const VocabLayout& vocab) {
  for (Token t : text) require(vocab.is_text(t), "training example: text token outside text range");
}

inline const CodeSequence& speech_codes(const Utterance& u, const VocabLayout& vocab) {
  require(u.codes.has_value() && u.codes->n_frames() > 0 && u.codes->n_layers() >= 1,
          "training example: speech label is empty");
  require(u.codes->codebook_size() == vocab.codebook_size, "training example: codebook size mismatch");
  return *u.codes;
}

inline IsochronyTrack iso_for(const Utterance& u, const CodeSequence& codes) {
  if (!u.vad.empty()) return IsochronyTrack::from_vad(u.vad);
  return IsochronyTrack::active(duration_frames(static_cast<double>(codes.n_frames()) / codes.token_rate_hz()));
}

/// text + SEP [+ codec0 + EOS], mask 1 everywhere except masked codec frames.
inline void write_label(TrainingExample& ex, std::span<const Token> text, const CodeSequence* codes,
                        FrameInterval masked_frames, const VocabLayout& vocab) {
  ex.label.assign(text.begin(), text.end());
  ex.label.push_back(vocab.sep_id());
  ex.loss_mask.assign(ex.label.size(), 1);
  if (codes == nullptr) return;
  for (std::size_t f = 0; f < codes->n_frames(); ++f) {
    ex.label.push_back(vocab.codec_token(codes->at(0, f)));
    const bool masked = f >= masked_frames.begin && f < masked_frames.end;
    ex.loss_mask.push_back(masked ? 0 : 1);
  }
  ex.label.push_back(vocab.eos_id());
  ex.loss_mask.push_back(1);
}

inline void check_region(FrameInterval region, const CodeSequence& codes) {
  require(region.empty() || region.end <= codes.n_frames(), "training example: prompt region outside speech label");
}

}  // namespace detail

/// Forward: source speech (or source text) in, target text + target codes
/// out; isochrony and acoustic prompt come from the target. Reverse swaps
/// the roles of source and target.
inline TrainingExample build_example_s2st(const Utterance& source, const Utterance& target, FrameInterval prompt_region,
                                          Direction direction, InputModality modality, const VocabLayout& vocab) {
  const Utterance& in = direction == Direction::Forward ? source : target;
  const Utterance& out = direction == Direction::Forward ? target : source;
  const CodeSequence& codes = detail::speech_codes(out, vocab);
  detail::check_region(prompt_region, codes);
  detail::check_text(in.text, vocab);
  detail::check_text(out.text, vocab);

  TrainingExample ex;
  ex.kind = direction == Direction::Forward ? ExampleKind::S2stForward : ExampleKind::S2stReverse;
  if (modality == InputModality::Speech) {
    ex.input = in.features;
  } else {
    ex.input = in.text;
  }
  ex.iso = detail::iso_for(out, codes);
  if (!prompt_region.empty()) ex.acoustic_prompt = out.features.slice(prompt_region.begin, prompt_region.end);
  detail::write_label(ex, out.text, &codes, prompt_region, vocab);
  return ex;
}

/// Forward: speech in, target text terminated by SEP; no isochrony, no
/// acoustic prompt. Reverse: target text in, source text + SEP followed by
/// the source codes when the corpus has them.
inline TrainingExample build_example_st(const Utterance& source, std::span<const Token> target_text,
                                        Direction direction, const VocabLayout& vocab) {
  detail::check_text(source.text, vocab);
  detail::check_text(target_text, vocab);
  TrainingExample ex;
  if (direction == Direction::Forward) {
    ex.kind = ExampleKind::StForward;
    ex.input = source.features;
    detail::write_label(ex, target_text, nullptr, {}, vocab);
    return ex;
  }
  ex.kind = ExampleKind::StReverse;
  ex.input = std::vector<Token>(target_text.begin(), target_text.end());
  if (source.codes && source.codes->n_frames() > 0) {
    const CodeSequence& codes = detail::speech_codes(source, vocab);
    ex.iso = detail::iso_for(source, codes);
    detail::write_label(ex, source.text, &codes, {}, vocab);
  } else {
    detail::write_label(ex, source.text, nullptr, {}, vocab);
  }
  return ex;
}

/// ASR data used for speech generation: source text in, source text + SEP +
/// source codes + EOS out, with the copied text span and the prompt region
/// excluded from the loss. There is deliberately no recognition-direction
/// constructor.
inline TrainingExample build_example_asr(const Utterance& source, FrameInterval prompt_region,
                                         const VocabLayout& vocab) {
  const CodeSequence& codes = detail::speech_codes(source, vocab);
  detail::check_region(prompt_region, codes);
  detail::check_text(source.text, vocab);
  TrainingExample ex;
  ex.kind = ExampleKind::AsrAsTts;
  ex.input = source.text;
  ex.iso = detail::iso_for(source, codes);
  if (!prompt_region.empty()) ex.acoustic_prompt = source.features.slice(prompt_region.begin, prompt_region.end);
  detail::write_label(ex, source.text, &codes, prompt_region, vocab);
  std::fill(ex.loss_mask.begin(), ex.loss_mask.begin() + static_cast<std::ptrdiff_t>(source.text.size()), 0);
  return ex;
}

/// Masked label positions implied by the constructors above.
inline std::size_t expected_masked_count(ExampleKind kind, std::size_t text_len, FrameInterval region) {
  switch (kind) {
    case ExampleKind::S2stForward:
    case ExampleKind::S2stReverse: return region.size();
    case ExampleKind::AsrAsTts: return text_len + region.size();
    case ExampleKind::StForward:
    case ExampleKind::StReverse: return 0;
  }
  return 0;
}

/// Replays `label` through the decoder's phase machine; true when every
/// token is legal for the phase it arrives in and SEP appears exactly once.
inline bool label_is_phase_legal(std::span<const Token> label, const VocabLayout& vocab) {
  Phase phase = Phase::Text;
  std::size_t seps = 0;
  for (Token t : label) {
    if (t >= vocab.size()) return false;
    const auto allowed = phase_mask(phase, vocab);
    if (!allowed[t]) return false;
    if (t == vocab.sep_id()) {
      ++seps;
      phase = Phase::Codec;
    } else if (t == vocab.eos_id()) {
      phase = Phase::Done;
    }
  }
  return seps == 1;
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

inline constexpr std::size_t kJointPromptFrames = 500;  // 10 s at 50 Hz
inline constexpr std::size_t kNarPromptFrames = 250;    // 5 s at 50 Hz

inline FeatureSequence clip_prompt(const FeatureSequence& feat, PromptPurpose purpose) {
  detail::require(feat.n_frames() >= 1, "clip_prompt: empty input");
  const std::size_t cap = purpose == PromptPurpose::Joint ? kJointPromptFrames : kNarPromptFrames;
  return feat.slice(0, std::min(cap, feat.n_frames()));
}

struct PromptRegionConfig {
  double max_seconds = 3.0;
  double max_fraction = 0.5;
  double frame_rate_hz = 50.0;
};

/// Uniform start; length = min(max_seconds, max_fraction of the utterance).
inline FrameInterval sample_prompt_region(std::size_t n_frames, SeededRng& rng, const PromptRegionConfig& cfg = {}) {
  const auto by_time = static_cast<std::size_t>(cfg.max_seconds * cfg.frame_rate_hz);
  const auto by_fraction = static_cast<std::size_t>(cfg.max_fraction * static_cast<double>(n_frames));
  const std::size_t len = std::min(by_time, by_fraction);
  if (len == 0) return {};
  const std::size_t start = static_cast<std::size_t>(rng.below(n_frames - len + 1));
  return {start, start + len};
}

/// Drops the acoustic prompt with probability p, leaving SEP with its own
/// embedding. Consumes one draw.
inline TrainingExample acoustic_dropout(TrainingExample example, SeededRng& rng, double p = 0.5) {
  detail::require(p >= 0.0 && p <= 1.0, "acoustic_dropout: p must be in [0, 1]");
  const double u = rng.uniform();
  if (u < p) example.acoustic_prompt.reset();
  return example;
}

// ---------------------------------------------------------------------------
// Manifest
//
// One record per line, whitespace-separated key=value fields:
//   kind=s2st-fwd src_feat=a.sasf src_codes=a.sasq tgt_feat=b.sasf
//   tgt_codes=b.sasq src_text=1,2,3 tgt_text=4,5 src_vad=0110
//   tgt_vad=111 prompt=2:4 confidence=0.93 input=speech|text
// Blank lines and lines starting with '#' are skipped.
// ---------------------------------------------------------------------------

struct ManifestRecord {
  ExampleKind kind = ExampleKind::S2stForward;
  std::string src_feat, src_codes, tgt_feat, tgt_codes;
  std::vector<Token> src_text, tgt_text;
  std::vector<std::uint8_t> src_vad, tgt_vad;
  std::optional<FrameInterval> prompt;
  double confidence = 1.0;
  InputModality input = InputModality::Speech;
  std::size_t line = 0;
};

namespace detail {

inline std::vector<Token> parse_token_list(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    std::size_t j = s.find(',', i);
    if (j == std::string_view::npos) j = s.size();
    const std::string item(s.substr(i, j - i));
    require(!item.empty() && item.find_first_not_of("0123456789") == std::string::npos,
            "manifest: bad token id '" + item + "'");
    out.push_back(static_cast<Token>(std::stoul(item)));
    i = j + 1;
  }
  return out;
}

inline std::vector<std::uint8_t> parse_bits(std::string_view s) {
  std::vector<std::uint8_t> out;
  for (char c : s) {
    require(c == '0' || c == '1', "manifest: vad must be a string of 0/1");
    out.push_back(c == '1' ? 1 : 0);
  }
  return out;
}

}  // namespace detail

inline ManifestRecord parse_manifest_line(std::string_view line, std::size_t line_no = 0) {
  ManifestRecord rec;
  rec.line = line_no;
  bool have_kind = false;
  std::istringstream in{std::string(line)};
  std::string field;
  while (in >> field) {
    const auto eq = field.find('=');
    detail::require(eq != std::string::npos, "manifest line " + std::to_string(line_no) + ": expected key=value");
    const std::string key = field.substr(0, eq);
    const std::string value = field.substr(eq + 1);
    if (key == "kind") {
      auto k = parse_kind(value);
      detail::require(k.has_value(), "manifest: unknown kind '" + value + "'");
      rec.kind = *k;
      have_kind = true;
    } else if (key == "src_feat") {
      rec.src_feat = value;
    } else if (key == "src_codes") {
      rec.src_codes = value;
    } else if (key == "tgt_feat") {
      rec.tgt_feat = value;
    } else if (key == "tgt_codes") {
      rec.tgt_codes = value;
    } else if (key == "src_text") {
      rec.src_text = detail::parse_token_list(value);
    } else if (key == "tgt_text") {
      rec.tgt_text = detail::parse_token_list(value);
    } else if (key == "src_vad") {
      rec.src_vad = detail::parse_bits(value);
    } else if (key == "tgt_vad") {
      rec.tgt_vad = detail::parse_bits(value);
    } else if (key == "prompt") {
      const auto colon = value.find(':');
      detail::require(colon != std::string::npos, "manifest: prompt must be begin:end");
      rec.prompt = FrameInterval{std::stoul(value.substr(0, colon)), std::stoul(value.substr(colon + 1))};
    } else if (key == "confidence") {
      rec.confidence = std::stod(value);
    } else if (key == "input") {
      detail::require(value == "speech" || value == "text", "manifest: input must be speech or text");
      rec.input = value == "speech" ? InputModality::Speech : InputModality::Text;
    } else {
      throw InvalidArgument("manifest: unknown key '" + key + "'");
    }
  }
  detail::require(have_kind, "manifest line " + std::to_string(line_no) + ": missing kind");
  return rec;
}

}  // namespace s2st
