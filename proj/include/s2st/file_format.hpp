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

// Little-endian binary containers.
//
//   SASF  features   "SASF" u32 version=1, u32 n_frames, u32 feature_dim,
//                    f32[n_frames * feature_dim] row-major
//   SASQ  codes      "SASQ" u32 version=1, u16 n_layers, u32 codebook_size,
//                    f32 token_rate_hz, u32 n_frames,
//                    u16[n_layers * n_frames] layer-major
//   SASB  codec      "SASB" u32 version=1, config block (u32 n_layers,
//                    u32 codebook_size, u32 feature_dim, u32 code_dim,
//                    f32 token_rate_hz, u32 downsample, f32 ema_decay,
//                    f32 dead_threshold, f32 distill_l1_weight), then per
//                    layer f32 entries[C*code_dim], in_proj[feature_dim*code_dim],
//                    out_proj[C*feature_dim], ema_counts[C]
//   TVTM  toy model  "TVTM" u32 version=1, config block (u32 d_model, heads,
//                    blocks, ffn_hidden, acoustic_blocks, n_text,
//                    codebook_size, feature_dim, n_codec_layers,
//                    max_iso_frames, acoustic_positions), u32 tensor_count,
//                    then per tensor u32 rows, u32 cols, f32[rows*cols] in
//                    for_each_tensor order
//
// Raw PCM is headerless 16-bit little-endian mono at 16 kHz.

#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "s2st/error.hpp"
#include "s2st/rvq_codec.hpp"
#include "s2st/toy_model.hpp"

namespace s2st::io {

inline constexpr std::uint32_t kFormatVersion = 1;

/// Append-only little-endian byte buffer.
class ByteWriter {
 public:
  void u16(std::uint16_t v) {
    bytes_.push_back(static_cast<std::uint8_t>(v));
    bytes_.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void magic(const char (&m)[5]) { bytes_.insert(bytes_.end(), m, m + 4); }

  const std::vector<std::uint8_t>& bytes() const { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::vector<std::uint8_t> bytes) : bytes_(std::move(bytes)) {}

  std::uint16_t u16() {
    need(2);
    const auto v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  void expect_magic(const char (&m)[5]) {
    need(4);
    if (std::memcmp(bytes_.data() + pos_, m, 4) != 0) throw FormatError(std::string("bad magic, expected ") + m);
    pos_ += 4;
  }
  void expect_version() {
    const auto v = u32();
    if (v != kFormatVersion) throw FormatError("unsupported format version " + std::to_string(v));
  }
  void expect_end() const {
    if (pos_ != bytes_.size()) throw FormatError("trailing bytes after payload");
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("truncated file");
  }

  std::vector<std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------------------
// PCM
// ---------------------------------------------------------------------------

inline std::vector<std::int16_t> pcm_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() % 2 != 0) throw FormatError("PCM byte count is odd");
  std::vector<std::int16_t> pcm(bytes.size() / 2);
  for (std::size_t i = 0; i < pcm.size(); ++i)
    pcm[i] = static_cast<std::int16_t>(static_cast<std::uint16_t>(bytes[2 * i] | (bytes[2 * i + 1] << 8)));
  return pcm;
}

inline std::vector<std::uint8_t> pcm_to_bytes(std::span<const std::int16_t> pcm) {
  ByteWriter w;
  for (auto s : pcm) w.u16(static_cast<std::uint16_t>(s));
  return w.bytes();
}

inline std::vector<std::int16_t> read_pcm(const std::filesystem::path& path) { return pcm_from_bytes(read_file(path)); }
inline void write_pcm(const std::filesystem::path& path, std::span<const std::int16_t> pcm) {
  write_file(path, pcm_to_bytes(pcm));
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> features_to_bytes(const FeatureSequence& fs) {
  ByteWriter w;
  w.magic("SASF");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(fs.n_frames()));
  w.u32(static_cast<std::uint32_t>(fs.feature_dim()));
  for (double v : fs.frames.data()) w.f32(v);
  return w.bytes();
}

inline FeatureSequence features_from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("SASF");
  r.expect_version();
  const std::size_t frames = r.u32();
  const std::size_t dim = r.u32();
  FeatureSequence fs{Matrix(frames, dim), 50.0};
  for (double& v : fs.frames.data()) v = r.f32();
  r.expect_end();
  return fs;
}

inline void write_features(const std::filesystem::path& p, const FeatureSequence& fs) {
  write_file(p, features_to_bytes(fs));
}
inline FeatureSequence read_features(const std::filesystem::path& p) { return features_from_bytes(read_file(p)); }

// ---------------------------------------------------------------------------
// Codes
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> codes_to_bytes(const CodeSequence& cs) {
  if (cs.n_layers() > 0xFFFF) throw FormatError("too many layers for SASQ");
  if (cs.codebook_size() > 65536) throw FormatError("codebook too large for u16 codes");
  ByteWriter w;
  w.magic("SASQ");
  w.u32(kFormatVersion);
  w.u16(static_cast<std::uint16_t>(cs.n_layers()));
  w.u32(static_cast<std::uint32_t>(cs.codebook_size()));
  w.f32(cs.token_rate_hz());
  w.u32(static_cast<std::uint32_t>(cs.n_frames()));
  for (CodeIndex c : cs.codes()) w.u16(static_cast<std::uint16_t>(c));
  return w.bytes();
}

inline CodeSequence codes_from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("SASQ");
  r.expect_version();
  const std::size_t layers = r.u16();
  const std::size_t cb = r.u32();
  const double rate = r.f32();
  const std::size_t frames = r.u32();
  if (cb == 0) throw FormatError("SASQ codebook_size is zero");
  std::vector<CodeIndex> grid(layers * frames);
  for (auto& c : grid) {
    c = r.u16();
    if (c >= cb) throw FormatError("SASQ code outside codebook");
  }
  r.expect_end();
  return {layers, frames, cb, std::move(grid), rate};
}

inline void write_codes(const std::filesystem::path& p, const CodeSequence& cs) { write_file(p, codes_to_bytes(cs)); }
inline CodeSequence read_codes(const std::filesystem::path& p) { return codes_from_bytes(read_file(p)); }

// ---------------------------------------------------------------------------
// Codec
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> codec_to_bytes(const RvqCodec& codec) {
  const RvqConfig& c = codec.config;
  ByteWriter w;
  w.magic("SASB");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(codec.books.size()));
  w.u32(static_cast<std::uint32_t>(c.codebook_size));
  w.u32(static_cast<std::uint32_t>(c.feature_dim));
  w.u32(static_cast<std::uint32_t>(c.code_dim));
  w.f32(c.token_rate_hz);
  w.u32(static_cast<std::uint32_t>(c.downsample));
  w.f32(c.ema_decay);
  w.f32(c.dead_threshold);
  w.f32(c.distill_l1_weight);
  for (const auto& b : codec.books) {
    for (double v : b.entries.data()) w.f32(v);
    for (double v : b.in_proj.data()) w.f32(v);
    for (double v : b.out_proj.data()) w.f32(v);
    for (double v : b.ema_counts) w.f32(v);
  }
  return w.bytes();
}

inline RvqCodec codec_from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("SASB");
  r.expect_version();
  RvqCodec codec;
  RvqConfig& c = codec.config;
  c.n_layers = r.u32();
  c.codebook_size = r.u32();
  c.feature_dim = r.u32();
  c.code_dim = r.u32();
  c.token_rate_hz = r.f32();
  c.downsample = r.u32();
  c.ema_decay = r.f32();
  c.dead_threshold = r.f32();
  c.distill_l1_weight = r.f32();
  try {
    c.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("SASB config: ") + e.what());
  }
  for (std::size_t l = 0; l < c.n_layers; ++l) {
    Codebook b;
    b.layer = l;
    b.entries = Matrix(c.codebook_size, c.code_dim);
    b.in_proj = Matrix(c.feature_dim, c.code_dim);
    b.out_proj = Matrix(c.codebook_size, c.feature_dim);
    b.ema_counts.assign(c.codebook_size, 0.0);
    for (double& v : b.entries.data()) v = r.f32();
    for (double& v : b.in_proj.data()) v = r.f32();
    for (double& v : b.out_proj.data()) v = r.f32();
    for (double& v : b.ema_counts) v = r.f32();
    codec.books.push_back(std::move(b));
  }
  r.expect_end();
  return codec;
}

inline void write_codec(const std::filesystem::path& p, const RvqCodec& codec) { write_file(p, codec_to_bytes(codec)); }
inline RvqCodec read_codec(const std::filesystem::path& p) { return codec_from_bytes(read_file(p)); }

// ---------------------------------------------------------------------------
// Toy model
// ---------------------------------------------------------------------------

inline std::vector<std::uint8_t> model_to_bytes(const ToyModel& m) {
  const ToyDims& d = m.dims;
  ByteWriter w;
  w.magic("TVTM");
  w.u32(kFormatVersion);
  for (std::size_t v : {d.d_model, d.heads, d.blocks, d.ffn_hidden, d.acoustic_blocks, d.n_text, d.codebook_size,
                        d.feature_dim, d.n_codec_layers, d.max_iso_frames})
    w.u32(static_cast<std::uint32_t>(v));
  w.u32(d.acoustic_positions ? 1u : 0u);
  std::uint32_t count = 0;
  for_each_tensor(m, [&](const std::string&, std::size_t, std::size_t, auto) { ++count; });
  w.u32(count);
  for_each_tensor(m, [&](const std::string&, std::size_t rows, std::size_t cols, auto data) {
    w.u32(static_cast<std::uint32_t>(rows));
    w.u32(static_cast<std::uint32_t>(cols));
    for (double v : data) w.f32(v);
  });
  return w.bytes();
}

inline ToyModel model_from_bytes(std::vector<std::uint8_t> bytes) {
  ByteReader r(std::move(bytes));
  r.expect_magic("TVTM");
  r.expect_version();
  ToyDims d;
  d.d_model = r.u32();
  d.heads = r.u32();
  d.blocks = r.u32();
  d.ffn_hidden = r.u32();
  d.acoustic_blocks = r.u32();
  d.n_text = r.u32();
  d.codebook_size = r.u32();
  d.feature_dim = r.u32();
  d.n_codec_layers = r.u32();
  d.max_iso_frames = r.u32();
  d.acoustic_positions = r.u32() != 0;
  try {
    d.validate();
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("TVTM config: ") + e.what());
  }
  // Shapes come from the dims; the stored weights overwrite this skeleton.
  ToyModel m = init_toy_model(0, d);
  std::uint32_t expected = 0;
  for_each_tensor(m, [&](const std::string&, std::size_t, std::size_t, auto) { ++expected; });
  if (r.u32() != expected) throw FormatError("TVTM tensor count does not match config");
  for_each_tensor(m, [&](const std::string& name, std::size_t rows, std::size_t cols, auto data) {
    if (r.u32() != rows || r.u32() != cols) throw FormatError("TVTM shape mismatch for " + name);
    for (double& v : data) v = r.f32();
  });
  r.expect_end();
  return m;
}

inline void write_model(const std::filesystem::path& p, const ToyModel& m) { write_file(p, model_to_bytes(m)); }
inline ToyModel read_model(const std::filesystem::path& p) { return model_from_bytes(read_file(p)); }

}  // namespace s2st::io
