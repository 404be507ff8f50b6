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

// Duration features for the decoder's isochrony memory, an energy VAD, and
// the duration-compliance metrics.

#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/numerics.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/transformer.hpp"

namespace s2st {

inline constexpr double kIsoFrameSeconds = 0.16;
inline constexpr std::size_t kIsoWindowSamples = 2560;  // 160 ms at 16 kHz
inline constexpr std::size_t kCodecTokensPerIsoFrame = 8;  // 0.16 s * 50 Hz
inline constexpr double kVadRelativeDb = -40.0;
inline constexpr double kVadAbsoluteFloor = 1e-4;

/// Per-160ms-frame activity bits with forward and reversed positions.
struct IsochronyTrack {
  std::vector<std::uint8_t> vad;
  std::vector<std::size_t> pos;
  std::vector<std::size_t> rpos;

  std::size_t n_frames() const { return vad.size(); }

  static IsochronyTrack from_vad(std::vector<std::uint8_t> bits) {
    IsochronyTrack t;
    const std::size_t n = bits.size();
    t.vad = std::move(bits);
    for (auto& b : t.vad) b = b ? 1 : 0;
    t.pos.resize(n);
    t.rpos.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      t.pos[i] = i;
      t.rpos[i] = n - 1 - i;
    }
    return t;
  }

  /// All-active track covering `frames` frames.
  static IsochronyTrack active(std::size_t frames) {
    return from_vad(std::vector<std::uint8_t>(frames, 1));
  }

  friend bool operator==(const IsochronyTrack&, const IsochronyTrack&) = default;
};

struct IsoEmbeddings {
  Matrix pos;   // max_frames x dim
  Matrix rpos;  // max_frames x dim
  Matrix vad;   // 2 x dim

  std::size_t capacity() const { return pos.rows(); }
  std::size_t dim() const { return pos.cols(); }

  static IsoEmbeddings random(std::size_t max_frames, std::size_t dim, SeededRng& rng) {
    return {nn::random_matrix(max_frames, dim, rng), nn::random_matrix(max_frames, dim, rng),
            nn::random_matrix(2, dim, rng)};
  }

  friend bool operator==(const IsoEmbeddings&, const IsoEmbeddings&) = default;
};

inline std::size_t duration_frames(double duration_s) {
  detail::require(duration_s > 0.0 && std::isfinite(duration_s), "duration_frames: duration must be positive");
  // Guard against 1.6 / 0.16 = 10.000000000000002.
  const double ratio = duration_s / kIsoFrameSeconds;
  const double nearest = std::round(ratio);
  if (std::abs(ratio - nearest) < 1e-9) return static_cast<std::size_t>(nearest);
  return static_cast<std::size_t>(std::ceil(ratio));
}

/// RMS of each 2560-sample window, trailing partial window zero-padded,
/// samples scaled to [-1, 1).
inline std::vector<double> window_rms(std::span<const std::int16_t> pcm) {
  const std::size_t n_windows = (pcm.size() + kIsoWindowSamples - 1) / kIsoWindowSamples;
  std::vector<double> rms(n_windows, 0.0);
  for (std::size_t w = 0; w < n_windows; ++w) {
    double s = 0.0;
    const std::size_t end = std::min(pcm.size(), (w + 1) * kIsoWindowSamples);
    for (std::size_t i = w * kIsoWindowSamples; i < end; ++i) {
      const double x = static_cast<double>(pcm[i]) / 32768.0;
      s += x * x;
    }
    rms[w] = std::sqrt(s / static_cast<double>(kIsoWindowSamples));
  }
  return rms;
}

/// Active iff window RMS exceeds max(peak RMS at -40 dB, 1e-4 full scale).
inline std::vector<std::uint8_t> vad_frames(std::span<const std::int16_t> pcm) {
  detail::require(!pcm.empty(), "vad_frames: empty input");
  const auto rms = window_rms(pcm);
  double peak = 0.0;
  for (double r : rms) peak = std::max(peak, r);
  const double threshold = std::max(peak * std::pow(10.0, kVadRelativeDb / 20.0), kVadAbsoluteFloor);
  std::vector<std::uint8_t> bits(rms.size());
  for (std::size_t i = 0; i < rms.size(); ++i) bits[i] = rms[i] > threshold ? 1 : 0;
  return bits;
}

/// Per-frame E_pos[pos] + E_rpos[rpos] + E_vad[bit].
inline Matrix build_icm_features(const IsochronyTrack& track, const IsoEmbeddings& tables) {
  detail::require(track.n_frames() <= tables.capacity(), "build_icm_features: track longer than embedding tables");
  detail::require(track.pos.size() == track.n_frames() && track.rpos.size() == track.n_frames(),
                  "build_icm_features: inconsistent track");
  Matrix out(track.n_frames(), tables.dim());
  for (std::size_t i = 0; i < track.n_frames(); ++i) {
    detail::require(track.pos[i] < tables.capacity() && track.rpos[i] < tables.capacity(),
                    "build_icm_features: position outside table");
    auto o = out.row(i);
    auto p = tables.pos.row(track.pos[i]);
    auto r = tables.rpos.row(track.rpos[i]);
    auto v = tables.vad.row(track.vad[i] ? 1 : 0);
    for (std::size_t c = 0; c < o.size(); ++c) o[c] = p[c] + r[c] + v[c];
  }
  return out;
}

/// Fraction of pairs whose duration ratio gen/src lies in [1-p, 1+p].
inline double slc(std::span<const double> durations_src, std::span<const double> durations_gen, double p) {
  detail::require(durations_src.size() == durations_gen.size(), "slc: length mismatch");
  detail::require(p > 0.0 && p < 1.0, "slc: p must be in (0, 1)");
  if (durations_src.empty()) return 0.0;
  std::size_t ok = 0;
  for (std::size_t i = 0; i < durations_src.size(); ++i) {
    detail::require(durations_src[i] > 0.0, "slc: source durations must be positive");
    const double ratio = durations_gen[i] / durations_src[i];
    if (ratio >= 1.0 - p && ratio <= 1.0 + p) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(durations_src.size());
}

/// Inactive runs strictly between the first and last active frame.
inline std::size_t pause_count(std::span<const std::uint8_t> vad) {
  std::size_t first = vad.size(), last = 0;
  for (std::size_t i = 0; i < vad.size(); ++i) {
    if (!vad[i]) continue;
    if (first == vad.size()) first = i;
    last = i;
  }
  if (first == vad.size()) return 0;
  std::size_t runs = 0;
  for (std::size_t i = first + 1; i <= last; ++i)
    if (!vad[i] && vad[i - 1]) ++runs;
  return runs;
}

}  // namespace s2st
