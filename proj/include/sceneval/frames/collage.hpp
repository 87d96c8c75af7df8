#pragma once

#include <vector>

#include "sceneval/core/config.hpp"
#include "sceneval/frames/image.hpp"
#include "sceneval/frames/scale.hpp"
#include "sceneval/frames/video.hpp"

namespace sceneval {

struct Collage {
  Image image;
  SamplingConfig config;
  std::vector<Box> tile_boxes; // indexed by frame
};

/// Box of tile k in a row-major grid of tile_w x tile_h cells.
inline Box tile_box(int k, const GridLayout &grid, int tile_w, int tile_h) {
  return {(k % grid.cols) * tile_w, (k / grid.cols) * tile_h, tile_w, tile_h};
}

/// Places already-scaled tiles chronologically left to right, then top to
/// bottom, with no gaps.
inline Collage compose_tiles(const std::vector<Image> &tiles, const SamplingConfig &config) {
  if (static_cast<int>(tiles.size()) != config.frame_count)
    throw ConfigError("collage needs " + std::to_string(config.frame_count) + " frames, got " +
                      std::to_string(tiles.size()));
  if (config.grid.cells() != config.frame_count)
    throw ConfigError("grid " + config.grid.to_string() + " does not hold " + std::to_string(config.frame_count) +
                      " frames");
  const int tw = config.resolution.width;
  const int th = config.resolution.height;
  Collage c{Image(config.grid.cols * tw, config.grid.rows * th), config, {}};
  for (int k = 0; k < config.frame_count; ++k) {
    const auto &tile = tiles[static_cast<std::size_t>(k)];
    if (tile.width() != tw || tile.height() != th) throw ConfigError("tile size does not match the resolution");
    Box b = tile_box(k, config.grid, tw, th);
    c.image.paste(tile, b.x, b.y);
    c.tile_boxes.push_back(b);
  }
  return c;
}

/// Scales each frame to the configured per-tile resolution and composes them.
inline Collage compose_collage(const std::vector<Image> &frames, const SamplingConfig &config) {
  std::vector<Image> tiles;
  tiles.reserve(frames.size());
  for (const auto &f : frames) tiles.push_back(scale_frame(f, config.resolution));
  return compose_tiles(tiles, config);
}

inline Collage compose_collage(const FrameSequence &seq, const SamplingConfig &config) {
  return compose_collage(seq.frames, config);
}

} // namespace sceneval
