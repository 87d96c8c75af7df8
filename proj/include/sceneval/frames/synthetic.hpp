#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>

#include "sceneval/core/random.hpp"
#include "sceneval/core/scenario.hpp"
#include "sceneval/frames/video.hpp"

namespace sceneval {

/// Procedural clip: a scenario-coloured background with a bar that advances
/// one column per frame. Frames are generated on demand.
class SyntheticClip : public FrameReader {
public:
  SyntheticClip(std::string_view seed_text, int width = 320, int height = 180, double fps = 30.0,
                std::int64_t frame_count = 360)
      : width_(width), height_(height), fps_(fps), count_(frame_count) {
    const std::uint64_t h = mix64(fnv1a64(seed_text));
    base_ = {static_cast<std::uint8_t>(h), static_cast<std::uint8_t>(h >> 8), static_cast<std::uint8_t>(h >> 16)};
  }

  double fps() const override { return fps_; }
  std::int64_t frame_count() const override { return count_; }

  Image frame(std::int64_t index) const {
    Image img(width_, height_, base_);
    const int bar = static_cast<int>(index % width_);
    for (int y = 0; y < height_; ++y) img.set(bar, y, Rgb{255, 255, 255});
    return img;
  }

  std::vector<Image> read(std::span<const std::int64_t> indices) override {
    std::vector<Image> out;
    for (auto i : indices) {
      if (i < 0 || i >= count_) throw InsufficientDuration("synthetic clip has no frame " + std::to_string(i));
      out.push_back(frame(i));
    }
    return out;
  }

private:
  int width_, height_;
  double fps_;
  std::int64_t count_;
  Rgb base_;
};

inline constexpr std::string_view kSyntheticPrefix = "synthetic:";

/// Opens `video_ref`; refs of the form "synthetic:<text>" yield a SyntheticClip.
inline std::unique_ptr<FrameReader> open_video(const ScenarioSource &s) {
  if (std::string_view(s.video_ref).starts_with(kSyntheticPrefix))
    return std::make_unique<SyntheticClip>(std::string_view(s.video_ref).substr(kSyntheticPrefix.size()));
  return std::make_unique<CvVideoReader>(s.video_ref);
}

} // namespace sceneval
