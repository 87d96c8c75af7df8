#pragma once

#include <vector>

#include "sceneval/core/config.hpp"

namespace sceneval {

/// Every rows x cols factorization of frame_count, rows ascending.
inline std::vector<GridLayout> enumerate_grids(int frame_count) {
  if (frame_count < 1 || frame_count > SamplingConfig::kMaxFrames)
    throw ConfigError("frame_count must be in 1..10, got " + std::to_string(frame_count));
  std::vector<GridLayout> out;
  for (int rows = 1; rows <= frame_count; ++rows)
    if (frame_count % rows == 0) out.push_back({rows, frame_count / rows});
  return out;
}

/// All layouts for frame counts 1..10.
inline std::vector<GridLayout> enumerate_all_grids() {
  std::vector<GridLayout> out;
  for (int n = 1; n <= SamplingConfig::kMaxFrames; ++n) {
    auto g = enumerate_grids(n);
    out.insert(out.end(), g.begin(), g.end());
  }
  return out;
}

} // namespace sceneval
