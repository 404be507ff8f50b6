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

// Consecutive text -> codec beam search over the joint scorer.
//
// A hypothesis first emits text tokens, then one separator, then first-layer
// codec tokens, then EOS. Ranking uses the summed log-probability of every
// emitted token, so the best finished hypothesis maximizes
// log P(codec | input, text) + log P(text | input) over the text prefixes
// that survived the beam.

#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/numerics.hpp"
#include "s2st/toy_model.hpp"

namespace s2st {

enum class Phase : std::uint8_t { Text, Codec, Done };

inline const char* phase_name(Phase p) {
  switch (p) {
    case Phase::Text: return "text";
    case Phase::Codec: return "codec";
    case Phase::Done: return "done";
  }
  return "?";
}

struct JointHypothesis {
  std::vector<Token> tokens;
  Phase phase = Phase::Text;
  double text_logp = 0.0;
  double codec_logp = 0.0;
  double joint_logp = 0.0;
  std::size_t text_len = 0;
  std::size_t codec_len = 0;

  std::vector<Token> text() const { return {tokens.begin(), tokens.begin() + static_cast<std::ptrdiff_t>(text_len)}; }

  /// Codec indices (layer-0 codes) emitted after the separator.
  std::vector<CodeIndex> codec(const VocabLayout& vocab) const {
    std::vector<CodeIndex> out;
    for (Token t : tokens)
      if (vocab.is_codec(t)) out.push_back(vocab.codec_index(t));
    return out;
  }

  /// Appends `t` scored `logp` and advances the phase.
  JointHypothesis extended(Token t, double logp, const VocabLayout& vocab) const {
    JointHypothesis h = *this;
    h.tokens.push_back(t);
    if (phase == Phase::Text) {
      h.text_logp += logp;
      if (t == vocab.sep_id()) {
        h.phase = Phase::Codec;
      } else {
        ++h.text_len;
      }
    } else {
      h.codec_logp += logp;
      if (t == vocab.eos_id()) {
        h.phase = Phase::Done;
      } else {
        ++h.codec_len;
      }
    }
    h.joint_logp = h.text_logp + h.codec_logp;
    return h;
  }
};

struct BeamConfig {
  std::size_t beam_size = 5;
  std::size_t min_text_len = 1;
  std::size_t max_text_len = 32;
  std::size_t min_codec_len = 1;
  /// Codec tokens (one per 20 ms frame).
  std::size_t max_codec_frames = 512;
  /// When set, EOS is forbidden before and forced at force_frames * 8 codec tokens.
  std::optional<std::size_t> force_frames;
  bool length_normalize = false;
  std::size_t threads = 1;

  void validate() const {
    detail::require(beam_size >= 1, "BeamConfig: beam_size must be >= 1");
    detail::require(min_text_len <= max_text_len, "BeamConfig: min_text_len > max_text_len");
    if (force_frames) {
      detail::require(*force_frames >= 1, "BeamConfig: force_frames must be >= 1");
    } else {
      detail::require(min_codec_len <= max_codec_frames, "BeamConfig: min_codec_len > max_codec_frames");
    }
  }

  std::size_t codec_limit() const { return force_frames ? *force_frames * kCodecTokensPerIsoFrame : max_codec_frames; }
};

/// 1 where the phase allows the token. Text: text ids and SEP. Codec: codec
/// ids and EOS. Done: nothing.
inline std::vector<std::uint8_t> phase_mask(Phase phase, const VocabLayout& vocab) {
  std::vector<std::uint8_t> allowed(vocab.size(), 0);
  if (phase == Phase::Text) {
    for (Token t = 0; t < vocab.n_text; ++t) allowed[t] = 1;
    allowed[vocab.sep_id()] = 1;
  } else if (phase == Phase::Codec) {
    for (Token t = vocab.codec_base(); t < vocab.eos_id(); ++t) allowed[t] = 1;
    allowed[vocab.eos_id()] = 1;
  }
  return allowed;
}

inline void apply_mask(std::span<double> logits, std::span<const std::uint8_t> allowed) {
  for (std::size_t i = 0; i < logits.size(); ++i)
    if (!allowed[i]) logits[i] = kNegInf;
}

/// Phase mask narrowed by the length limits in `cfg`.
inline std::vector<std::uint8_t> legal_next_tokens(const JointHypothesis& h, const BeamConfig& cfg,
                                                   const VocabLayout& vocab) {
  auto allowed = phase_mask(h.phase, vocab);
  if (h.phase == Phase::Text) {
    if (h.text_len < cfg.min_text_len) allowed[vocab.sep_id()] = 0;
    if (h.text_len >= cfg.max_text_len) {
      std::fill(allowed.begin(), allowed.end(), 0);
      allowed[vocab.sep_id()] = 1;
    }
  } else if (h.phase == Phase::Codec) {
    const std::size_t limit = cfg.codec_limit();
    const std::size_t minimum = cfg.force_frames ? limit : cfg.min_codec_len;
    if (h.codec_len < minimum) allowed[vocab.eos_id()] = 0;
    if (h.codec_len >= limit) {
      std::fill(allowed.begin(), allowed.end(), 0);
      allowed[vocab.eos_id()] = 1;
    }
  }
  return allowed;
}

namespace detail {

inline double ranking_score(const JointHypothesis& h, bool length_normalize) {
  if (!length_normalize || h.tokens.empty()) return h.joint_logp;
  return h.joint_logp / static_cast<double>(h.tokens.size());
}

}  // namespace detail

/// Beam search over the combined vocabulary. Finished hypotheses leave the
/// beam and the beam is refilled from the next-best candidates; the search
/// stops once `beam_size` hypotheses have finished and no active hypothesis
/// can still beat the worst of them. Returns finished hypotheses ranked by
/// joint log-probability.
inline std::vector<JointHypothesis> beam_search_joint(const JointContext& ctx, const JointScorer& scorer,
                                                      const BeamConfig& cfg) {
  cfg.validate();
  const VocabLayout vocab = scorer.vocab();
  const std::size_t max_steps = cfg.max_text_len + 1 + cfg.codec_limit() + 1;

  std::vector<JointHypothesis> active(1);
  std::vector<JointState> states{joint_begin(ctx, scorer)};
  std::vector<JointHypothesis> finished;

  struct Candidate {
    double score;
    std::size_t hyp;
    Token token;
    double logp;
  };

  for (std::size_t step = 0; step < max_steps && !active.empty(); ++step) {
    std::vector<Candidate> cands;
    for (std::size_t i = 0; i < active.size(); ++i) {
      const auto allowed = legal_next_tokens(active[i], cfg, vocab);
      for (Token t = 0; t < vocab.size(); ++t) {
        if (!allowed[t]) continue;
        const double lp = states[i].next_logp[t];
        if (!std::isfinite(lp)) continue;
        cands.push_back({active[i].joint_logp + lp, i, t, lp});
      }
    }
    std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) {
      if (a.score != b.score) return a.score > b.score;
      if (a.hyp != b.hyp) return a.hyp < b.hyp;
      return a.token < b.token;
    });

    std::vector<JointHypothesis> next;
    std::vector<const Candidate*> origin;
    for (const auto& c : cands) {
      if (next.size() >= cfg.beam_size) break;
      JointHypothesis h = active[c.hyp].extended(c.token, c.logp, vocab);
      if (h.phase == Phase::Done) {
        finished.push_back(std::move(h));
      } else {
        next.push_back(std::move(h));
        origin.push_back(&c);
      }
    }
    std::vector<JointState> next_states(next.size());
    parallel_for(next.size(), cfg.threads, [&](std::size_t i) {
      next_states[i] = joint_advance(states[origin[i]->hyp], origin[i]->token, ctx, scorer);
    });
    active = std::move(next);
    states = std::move(next_states);

    std::stable_sort(finished.begin(), finished.end(), [&](const JointHypothesis& a, const JointHypothesis& b) {
      return detail::ranking_score(a, cfg.length_normalize) > detail::ranking_score(b, cfg.length_normalize);
    });
    if (finished.size() > cfg.beam_size) finished.resize(cfg.beam_size);

    if (!cfg.length_normalize && finished.size() >= cfg.beam_size && !active.empty()) {
      double best_active = active.front().joint_logp;
      for (const auto& h : active) best_active = std::max(best_active, h.joint_logp);
      if (best_active <= finished.back().joint_logp) break;
    }
  }

  if (finished.empty()) throw DecodeTimeout("beam_search_joint: no hypothesis finished within the length limits");
  return finished;
}

inline std::vector<JointHypothesis> beam_search_joint(const FeatureSequence& semantic, const IsochronyTrack* iso,
                                                      const std::vector<double>* acoustic, const JointScorer& scorer,
                                                      const BeamConfig& cfg) {
  return beam_search_joint(prepare_joint_context(semantic, iso, acoustic, scorer), scorer, cfg);
}

// ---------------------------------------------------------------------------
// Exhaustive oracle
// ---------------------------------------------------------------------------

inline constexpr double kMaxOracleSequences = 1e6;

/// Number of complete legal sequences under `cfg`.
inline double count_joint_sequences(const VocabLayout& vocab, const BeamConfig& cfg) {
  double texts = 0.0, power = 1.0;
  for (std::size_t len = 0; len <= cfg.max_text_len; ++len) {
    if (len >= cfg.min_text_len) texts += power;
    power *= static_cast<double>(vocab.n_text);
  }
  const std::size_t limit = cfg.codec_limit();
  const std::size_t minimum = cfg.force_frames ? limit : cfg.min_codec_len;
  double codecs = 0.0;
  power = 1.0;
  for (std::size_t len = 0; len <= limit; ++len) {
    if (len >= minimum) codecs += power;
    power *= static_cast<double>(vocab.codebook_size);
  }
  return texts * codecs;
}

/// Scores every legal phased sequence and returns the joint maximizer
/// (first in token order on ties).
inline JointHypothesis enumerate_joint_oracle(const JointContext& ctx, const JointScorer& scorer,
                                              const BeamConfig& limits) {
  limits.validate();
  const VocabLayout vocab = scorer.vocab();
  detail::require(count_joint_sequences(vocab, limits) <= kMaxOracleSequences,
                  "enumerate_joint_oracle: search space exceeds 1e6 sequences");

  std::optional<JointHypothesis> best;
  auto visit = [&](auto&& self, const JointHypothesis& h, const JointState& st) -> void {
    const auto allowed = legal_next_tokens(h, limits, vocab);
    for (Token t = 0; t < vocab.size(); ++t) {
      if (!allowed[t] || !std::isfinite(st.next_logp[t])) continue;
      JointHypothesis next = h.extended(t, st.next_logp[t], vocab);
      if (next.phase == Phase::Done) {
        if (!best || next.joint_logp > best->joint_logp) best = std::move(next);
      } else {
        self(self, next, joint_advance(st, t, ctx, scorer));
      }
    }
  };
  visit(visit, JointHypothesis{}, joint_begin(ctx, scorer));
  if (!best) throw DecodeTimeout("enumerate_joint_oracle: no legal sequence");
  return *best;
}

inline JointHypothesis enumerate_joint_oracle(const FeatureSequence& semantic, const IsochronyTrack* iso,
                                              const std::vector<double>* acoustic, const JointScorer& scorer,
                                              const BeamConfig& limits) {
  return enumerate_joint_oracle(prepare_joint_context(semantic, iso, acoustic, scorer), scorer, limits);
}

}  // namespace s2st
