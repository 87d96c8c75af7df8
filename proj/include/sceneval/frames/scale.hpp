#pragma once

#include <algorithm>
#include <cmath>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/frames/image.hpp"

namespace sceneval {

namespace detail {
inline cv::Mat as_mat(const Image &img) {
  return cv::Mat(img.height(), img.width(), CV_8UC3, const_cast<std::uint8_t *>(img.data().data()));
}
} // namespace detail

/// Resizes to exactly width x height. Inputs of another aspect ratio are
/// fitted and centred on black bars rather than stretched.
inline Image scale_to(const Image &src, int width, int height) {
  if (src.empty()) throw std::invalid_argument("cannot scale an empty image");
  if (width <= 0 || height <= 0) throw std::invalid_argument("target size must be positive");
  if (src.width() == width && src.height() == height) return src;

  const double fit = std::min(double(width) / src.width(), double(height) / src.height());
  const int cw = std::clamp(static_cast<int>(std::lround(src.width() * fit)), 1, width);
  const int ch = std::clamp(static_cast<int>(std::lround(src.height() * fit)), 1, height);

  Image content(cw, ch);
  cv::Mat dst = detail::as_mat(content);
  const int interp = fit < 1.0 ? cv::INTER_AREA : cv::INTER_LINEAR;
  cv::resize(detail::as_mat(src), dst, cv::Size(cw, ch), 0, 0, interp);
  if (cw == width && ch == height) return content;

  Image canvas(width, height);
  canvas.paste(content, (width - cw) / 2, (height - ch) / 2);
  return canvas;
}

inline Image scale_frame(const Image &src, const Resolution &resolution) {
  return scale_to(src, resolution.width, resolution.height);
}

/// Placement of `content` inside the letterboxed canvas scale_to produces.
inline Box letterbox_content_box(int src_w, int src_h, int width, int height) {
  const double fit = std::min(double(width) / src_w, double(height) / src_h);
  const int cw = std::clamp(static_cast<int>(std::lround(src_w * fit)), 1, width);
  const int ch = std::clamp(static_cast<int>(std::lround(src_h * fit)), 1, height);
  return {(width - cw) / 2, (height - ch) / 2, cw, ch};
}

} // namespace sceneval
