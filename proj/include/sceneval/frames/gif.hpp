#pragma once

// Animated GIF89a assembly. Frames are quantized to a fixed 3-3-2 RGB
// palette so encoding is deterministic and needs no per-frame palette search;
// pure primaries, black and white survive exactly.

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "sceneval/core/error.hpp"
#include "sceneval/frames/image.hpp"
#include "sceneval/frames/video.hpp"

namespace sceneval {

struct GifAnimation {
  int width = 0;
  int height = 0;
  std::vector<Image> frames;
  int delay_ms = 0;   // per frame
  int loop_count = 0; // 0 = loop forever

  int total_duration_ms() const { return delay_ms * static_cast<int>(frames.size()); }
};

inline GifAnimation compose_gif(std::vector<Image> frames, int interval_ms) {
  if (frames.empty()) throw ConfigError("cannot build a GIF from an empty sequence");
  if (interval_ms <= 0 || interval_ms > 655350) throw ConfigError("GIF frame delay out of range");
  const int w = frames.front().width(), h = frames.front().height();
  if (w <= 0 || h <= 0 || w > 65535 || h > 65535) throw ConfigError("GIF dimensions out of range");
  for (const auto &f : frames)
    if (f.width() != w || f.height() != h) throw ConfigError("GIF frames must share one size");
  return GifAnimation{w, h, std::move(frames), interval_ms, 0};
}

inline GifAnimation compose_gif(const FrameSequence &seq, int interval_ms) {
  return compose_gif(seq.frames, interval_ms);
}

namespace gif {

inline std::uint8_t palette_index(Rgb c) {
  const unsigned r = (c.r * 7u + 127u) / 255u;
  const unsigned g = (c.g * 7u + 127u) / 255u;
  const unsigned b = (c.b * 3u + 127u) / 255u;
  return static_cast<std::uint8_t>((r << 5) | (g << 2) | b);
}

inline Rgb palette_color(std::uint8_t index) {
  const unsigned r = index >> 5, g = (index >> 2) & 7u, b = index & 3u;
  return {static_cast<std::uint8_t>((r * 255u + 3u) / 7u), static_cast<std::uint8_t>((g * 255u + 3u) / 7u),
          static_cast<std::uint8_t>(b * 85u)};
}

/// The colour a pixel takes after quantization.
inline Rgb quantize(Rgb c) { return palette_color(palette_index(c)); }

class BitWriter {
public:
  explicit BitWriter(std::vector<std::uint8_t> &out) : out_(out) {}

  void write(unsigned code, int bits) {
    acc_ |= static_cast<std::uint32_t>(code) << nbits_;
    nbits_ += bits;
    while (nbits_ >= 8) {
      push(static_cast<std::uint8_t>(acc_ & 0xFF));
      acc_ >>= 8;
      nbits_ -= 8;
    }
  }

  void finish() {
    if (nbits_ > 0) push(static_cast<std::uint8_t>(acc_ & 0xFF));
    acc_ = 0;
    nbits_ = 0;
    flush_block();
    out_.push_back(0); // block terminator
  }

private:
  void push(std::uint8_t byte) {
    block_.push_back(byte);
    if (block_.size() == 255) flush_block();
  }
  void flush_block() {
    if (block_.empty()) return;
    out_.push_back(static_cast<std::uint8_t>(block_.size()));
    out_.insert(out_.end(), block_.begin(), block_.end());
    block_.clear();
  }

  std::vector<std::uint8_t> &out_;
  std::vector<std::uint8_t> block_;
  std::uint32_t acc_ = 0;
  int nbits_ = 0;
};

inline void lzw_encode(const std::vector<std::uint8_t> &indices, std::vector<std::uint8_t> &out) {
  constexpr int kMinCodeSize = 8;
  constexpr unsigned kClear = 1u << kMinCodeSize;
  constexpr unsigned kEnd = kClear + 1;
  out.push_back(kMinCodeSize);
  BitWriter bits(out);
  std::unordered_map<std::uint32_t, std::uint16_t> dict;
  dict.reserve(4096);
  int code_size = kMinCodeSize + 1;
  unsigned max_code = kEnd;

  bits.write(kClear, code_size);
  if (indices.empty()) {
    bits.write(kEnd, code_size);
    bits.finish();
    return;
  }
  unsigned prefix = indices[0];
  for (std::size_t i = 1; i < indices.size(); ++i) {
    const std::uint8_t c = indices[i];
    const std::uint32_t key = (static_cast<std::uint32_t>(prefix) << 8) | c;
    if (auto it = dict.find(key); it != dict.end()) {
      prefix = it->second;
      continue;
    }
    bits.write(prefix, code_size);
    dict.emplace(key, static_cast<std::uint16_t>(++max_code));
    if (max_code >= (1u << code_size)) ++code_size;
    if (max_code == 4095) {
      bits.write(kClear, code_size);
      dict.clear();
      code_size = kMinCodeSize + 1;
      max_code = kEnd;
    }
    prefix = c;
  }
  bits.write(prefix, code_size);
  bits.write(kEnd, code_size);
  bits.finish();
}

inline void put_u16(std::vector<std::uint8_t> &out, unsigned v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xFF));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xFF));
}

} // namespace gif

/// Serializes to GIF89a bytes: global 256-colour palette, a NETSCAPE2.0 loop
/// block, then one graphic-control block plus image per frame.
inline std::vector<std::uint8_t> encode_gif(const GifAnimation &anim) {
  if (anim.frames.empty()) throw ConfigError("cannot encode an empty GIF");
  std::vector<std::uint8_t> out;
  const std::string header = "GIF89a";
  out.insert(out.end(), header.begin(), header.end());
  gif::put_u16(out, static_cast<unsigned>(anim.width));
  gif::put_u16(out, static_cast<unsigned>(anim.height));
  out.push_back(0xF7); // global table, 8-bit colour resolution, 256 entries
  out.push_back(0);    // background index
  out.push_back(0);    // pixel aspect ratio
  for (unsigned i = 0; i < 256; ++i) {
    Rgb c = gif::palette_color(static_cast<std::uint8_t>(i));
    out.push_back(c.r);
    out.push_back(c.g);
    out.push_back(c.b);
  }

  const std::string netscape = "NETSCAPE2.0";
  out.push_back(0x21);
  out.push_back(0xFF);
  out.push_back(0x0B);
  out.insert(out.end(), netscape.begin(), netscape.end());
  out.push_back(0x03);
  out.push_back(0x01);
  gif::put_u16(out, static_cast<unsigned>(anim.loop_count));
  out.push_back(0x00);

  const unsigned delay_cs = static_cast<unsigned>((anim.delay_ms + 5) / 10);
  std::vector<std::uint8_t> indices;
  for (const auto &frame : anim.frames) {
    out.push_back(0x21);
    out.push_back(0xF9);
    out.push_back(0x04);
    out.push_back(0x04); // disposal: leave in place, no transparency
    gif::put_u16(out, delay_cs);
    out.push_back(0x00);
    out.push_back(0x00);

    out.push_back(0x2C);
    gif::put_u16(out, 0);
    gif::put_u16(out, 0);
    gif::put_u16(out, static_cast<unsigned>(frame.width()));
    gif::put_u16(out, static_cast<unsigned>(frame.height()));
    out.push_back(0x00);

    indices.clear();
    indices.reserve(std::size_t(frame.width()) * frame.height());
    const auto &px = frame.data();
    for (std::size_t i = 0; i < px.size(); i += 3) indices.push_back(gif::palette_index({px[i], px[i + 1], px[i + 2]}));
    gif::lzw_encode(indices, out);
  }
  out.push_back(0x3B);
  return out;
}

} // namespace sceneval
