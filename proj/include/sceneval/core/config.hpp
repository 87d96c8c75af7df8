#pragma once

// Points in the input-configuration space: per-tile resolution, grid layout,
// temporal interval, frame count and presentation mode.

#include <array>
#include <charconv>
#include <cstdint>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"

namespace sceneval {

struct Resolution {
  int level = 1;
  int width = 160;
  int height = 90;

  static constexpr int kMinLevel = 1;
  static constexpr int kMaxLevel = 6;

  static Resolution from_level(int level) {
    static constexpr std::array<std::array<int, 2>, 6> kSizes{{
        {160, 90}, {320, 180}, {480, 270}, {640, 360}, {960, 540}, {1920, 1080}}};
    if (level < kMinLevel || level > kMaxLevel)
      throw ConfigError("resolution level must be in 1..6, got " + std::to_string(level));
    const auto &wh = kSizes[static_cast<std::size_t>(level - 1)];
    return Resolution{level, wh[0], wh[1]};
  }

  std::int64_t pixels() const { return std::int64_t{width} * height; }
  std::string to_string() const { return std::to_string(width) + "x" + std::to_string(height); }

  friend bool operator==(const Resolution &, const Resolution &) = default;
};

struct GridLayout {
  int rows = 1;
  int cols = 1;

  int cells() const { return rows * cols; }
  bool valid() const { return rows >= 1 && cols >= 1; }

  /// "2x3"; rows first.
  std::string to_string() const { return std::to_string(rows) + "x" + std::to_string(cols); }

  /// Accepts "2x3", "2X3" and "2×3".
  static GridLayout parse(std::string_view text) {
    std::size_t sep = text.find_first_of("xX");
    std::size_t sep_len = 1;
    if (sep == std::string_view::npos) {
      sep = text.find("\xC3\x97"); // U+00D7
      sep_len = 2;
    }
    if (sep == std::string_view::npos)
      throw ConfigError("grid must look like RxC, got '" + std::string(text) + "'");
    GridLayout g{0, 0};
    auto r = text.substr(0, sep);
    auto c = text.substr(sep + sep_len);
    auto r_res = std::from_chars(r.data(), r.data() + r.size(), g.rows);
    auto c_res = std::from_chars(c.data(), c.data() + c.size(), g.cols);
    if (r_res.ec != std::errc{} || c_res.ec != std::errc{} || r_res.ptr != r.data() + r.size() ||
        c_res.ptr != c.data() + c.size() || !g.valid())
      throw ConfigError("grid must look like RxC with positive integers, got '" + std::string(text) + "'");
    return g;
  }

  friend bool operator==(const GridLayout &, const GridLayout &) = default;
  friend auto operator<=>(const GridLayout &, const GridLayout &) = default;
};

enum class PresentationMode { Collage, Separate, Batch };

inline std::string_view to_string(PresentationMode m) {
  switch (m) {
  case PresentationMode::Collage: return "collage";
  case PresentationMode::Separate: return "separate";
  case PresentationMode::Batch: return "batch";
  }
  return "collage";
}

inline PresentationMode parse_presentation_mode(std::string_view s) {
  if (s == "collage" || s == "c") return PresentationMode::Collage;
  if (s == "separate" || s == "s") return PresentationMode::Separate;
  if (s == "batch" || s == "b") return PresentationMode::Batch;
  throw ConfigError("unknown presentation mode '" + std::string(s) + "'");
}

struct SamplingConfig {
  int interval_ms = 200;
  int frame_count = 4;
  Resolution resolution = Resolution::from_level(1);
  GridLayout grid{2, 2};
  PresentationMode mode = PresentationMode::Collage;

  static constexpr int kMinInterval = 100;
  static constexpr int kMaxInterval = 1000;
  static constexpr int kIntervalStep = 100;
  static constexpr int kMaxFrames = 10;

  void validate() const {
    if (interval_ms < kMinInterval || interval_ms > kMaxInterval || interval_ms % kIntervalStep != 0)
      throw ConfigError("interval_ms must be one of 100,200,...,1000, got " + std::to_string(interval_ms));
    if (frame_count < 1 || frame_count > kMaxFrames)
      throw ConfigError("frame_count must be in 1..10, got " + std::to_string(frame_count));
    // Re-derive to reject hand-built resolutions that do not match a level.
    if (Resolution::from_level(resolution.level) != resolution)
      throw ConfigError("resolution does not match level " + std::to_string(resolution.level));
    if (!grid.valid() || grid.cells() > kMaxFrames)
      throw ConfigError("grid " + grid.to_string() + " is not a valid sampling grid");
    if (mode == PresentationMode::Collage && grid.cells() != frame_count)
      throw ConfigError("collage grid " + grid.to_string() + " does not hold " +
                        std::to_string(frame_count) + " frames");
  }

  /// Stable identifier, e.g. "T200-N4-R1-G2x2-collage".
  std::string id() const {
    return "T" + std::to_string(interval_ms) + "-N" + std::to_string(frame_count) + "-R" +
           std::to_string(resolution.level) + "-G" + grid.to_string() + "-" + std::string(to_string(mode));
  }

  friend bool operator==(const SamplingConfig &, const SamplingConfig &) = default;
};

inline void to_json(nlohmann::json &j, const SamplingConfig &c) {
  j = nlohmann::json{{"interval_ms", c.interval_ms},
                     {"frame_count", c.frame_count},
                     {"resolution_level", c.resolution.level},
                     {"width", c.resolution.width},
                     {"height", c.resolution.height},
                     {"grid", c.grid.to_string()},
                     {"mode", to_string(c.mode)}};
}

inline void from_json(const nlohmann::json &j, SamplingConfig &c) {
  c.interval_ms = j.at("interval_ms").get<int>();
  c.frame_count = j.at("frame_count").get<int>();
  c.resolution = Resolution::from_level(j.at("resolution_level").get<int>());
  c.grid = GridLayout::parse(j.at("grid").get<std::string>());
  c.mode = parse_presentation_mode(j.value("mode", std::string("collage")));
  c.validate();
}

/// Configuration axes a sensitivity analysis can group by.
enum class Dimension { Resolution, Frames, Interval, Grid, Mode };

inline std::string_view to_string(Dimension d) {
  switch (d) {
  case Dimension::Resolution: return "resolution";
  case Dimension::Frames: return "frames";
  case Dimension::Interval: return "interval";
  case Dimension::Grid: return "grid";
  case Dimension::Mode: return "mode";
  }
  return "resolution";
}

inline Dimension parse_dimension(std::string_view s) {
  if (s == "resolution") return Dimension::Resolution;
  if (s == "frames" || s == "frame_count") return Dimension::Frames;
  if (s == "interval" || s == "interval_ms") return Dimension::Interval;
  if (s == "grid") return Dimension::Grid;
  if (s == "mode") return Dimension::Mode;
  throw ConfigError("unknown dimension '" + std::string(s) + "'");
}

/// Group label of a config along one dimension, e.g. "L3", "4", "200", "2x2".
inline std::string dimension_value(const SamplingConfig &c, Dimension d) {
  switch (d) {
  case Dimension::Resolution: return "L" + std::to_string(c.resolution.level);
  case Dimension::Frames: return std::to_string(c.frame_count);
  case Dimension::Interval: return std::to_string(c.interval_ms);
  case Dimension::Grid: return c.grid.to_string();
  case Dimension::Mode: return std::string(to_string(c.mode));
  }
  return {};
}

} // namespace sceneval
