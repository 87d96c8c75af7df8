#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace sceneval {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  friend bool operator==(const Rgb &, const Rgb &) = default;
};

struct Box {
  int x = 0, y = 0, w = 0, h = 0;
  bool contains(int px, int py) const { return px >= x && px < x + w && py >= y && py < y + h; }
  friend bool operator==(const Box &, const Box &) = default;
};

inline void to_json(nlohmann::json &j, const Box &b) { j = {b.x, b.y, b.w, b.h}; }
inline void from_json(const nlohmann::json &j, Box &b) {
  b = Box{j.at(0).get<int>(), j.at(1).get<int>(), j.at(2).get<int>(), j.at(3).get<int>()};
}

/// Interleaved 8-bit RGB raster, row-major, no padding.
class Image {
public:
  Image() = default;
  Image(int width, int height, Rgb fill = {})
      : width_(width), height_(height), data_(checked_size(width, height)) {
    for (std::size_t i = 0; i < data_.size(); i += 3) {
      data_[i] = fill.r;
      data_[i + 1] = fill.g;
      data_[i + 2] = fill.b;
    }
  }
  Image(int width, int height, std::vector<std::uint8_t> rgb)
      : width_(width), height_(height), data_(std::move(rgb)) {
    if (data_.size() != checked_size(width, height)) throw std::invalid_argument("pixel buffer size mismatch");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  const std::vector<std::uint8_t> &data() const { return data_; }
  std::vector<std::uint8_t> &data() { return data_; }
  std::uint8_t *row(int y) { return data_.data() + std::size_t(y) * width_ * 3; }
  const std::uint8_t *row(int y) const { return data_.data() + std::size_t(y) * width_ * 3; }

  Rgb at(int x, int y) const {
    const auto *p = row(y) + std::size_t(x) * 3;
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    auto *p = row(y) + std::size_t(x) * 3;
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  Image crop(const Box &b) const {
    if (b.x < 0 || b.y < 0 || b.w < 0 || b.h < 0 || b.x + b.w > width_ || b.y + b.h > height_)
      throw std::out_of_range("crop box outside image");
    Image out(b.w, b.h);
    for (int y = 0; y < b.h; ++y)
      std::copy_n(row(b.y + y) + std::size_t(b.x) * 3, std::size_t(b.w) * 3, out.row(y));
    return out;
  }

  void paste(const Image &src, int x, int y) {
    if (x < 0 || y < 0 || x + src.width() > width_ || y + src.height() > height_)
      throw std::out_of_range("paste outside image");
    for (int r = 0; r < src.height(); ++r)
      std::copy_n(src.row(r), std::size_t(src.width()) * 3, row(y + r) + std::size_t(x) * 3);
  }

  friend bool operator==(const Image &, const Image &) = default;

private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) throw std::invalid_argument("negative image dimension");
    return std::size_t(w) * std::size_t(h) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

} // namespace sceneval
