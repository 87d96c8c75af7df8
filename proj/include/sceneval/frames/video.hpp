#pragma once

// Temporal sampling of clips: frame k is the native frame nearest to
// start_offset + k * interval (ties go to the earlier frame).

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "sceneval/core/error.hpp"
#include "sceneval/core/scenario.hpp"
#include "sceneval/frames/image.hpp"

namespace sceneval {

struct FrameSequence {
  std::vector<Image> frames;
  std::vector<std::int64_t> timestamps_ms; // requested, not native, times
  std::vector<std::int64_t> native_indices;
  double native_fps = 0.0;

  std::size_t size() const { return frames.size(); }
};

class FrameReader {
public:
  virtual ~FrameReader() = default;
  virtual double fps() const = 0;
  /// Number of frames, or -1 if the container does not say.
  virtual std::int64_t frame_count() const = 0;
  /// Reads the frames at non-decreasing native indices. Throws
  /// InsufficientDuration if the stream ends first.
  virtual std::vector<Image> read(std::span<const std::int64_t> indices) = 0;
};

/// Frames held in memory; used for synthetic clips.
class InMemoryVideo : public FrameReader {
public:
  InMemoryVideo(std::vector<Image> frames, double fps) : frames_(std::move(frames)), fps_(fps) {}

  double fps() const override { return fps_; }
  std::int64_t frame_count() const override { return static_cast<std::int64_t>(frames_.size()); }
  std::vector<Image> read(std::span<const std::int64_t> indices) override {
    std::vector<Image> out;
    for (auto i : indices) {
      if (i < 0 || i >= frame_count()) throw InsufficientDuration("frame index past end of clip");
      out.push_back(frames_[static_cast<std::size_t>(i)]);
    }
    return out;
  }

private:
  std::vector<Image> frames_;
  double fps_;
};

inline Image image_from_bgr(const cv::Mat &bgr) {
  cv::Mat rgb;
  if (bgr.channels() == 1)
    cv::cvtColor(bgr, rgb, cv::COLOR_GRAY2RGB);
  else if (bgr.channels() == 4)
    cv::cvtColor(bgr, rgb, cv::COLOR_BGRA2RGB);
  else
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
  Image out(rgb.cols, rgb.rows);
  for (int y = 0; y < rgb.rows; ++y) std::copy_n(rgb.ptr<std::uint8_t>(y), std::size_t(rgb.cols) * 3, out.row(y));
  return out;
}

/// Decodes container video through OpenCV's videoio backends, reading
/// sequentially rather than seeking so that frame indices are exact.
class CvVideoReader : public FrameReader {
public:
  explicit CvVideoReader(const std::string &path) : path_(path) {
    if (!std::filesystem::is_regular_file(path)) throw VideoError("video not found: " + path);
    if (!cap_.open(path, cv::CAP_FFMPEG) && !cap_.open(path, cv::CAP_ANY))
      throw VideoError("cannot open video " + path);
    fps_ = cap_.get(cv::CAP_PROP_FPS);
    if (!(fps_ > 0.0)) throw VideoError("video " + path + " reports no frame rate");
    const double n = cap_.get(cv::CAP_PROP_FRAME_COUNT);
    count_ = n > 0 ? static_cast<std::int64_t>(n) : -1;
  }

  double fps() const override { return fps_; }
  std::int64_t frame_count() const override { return count_; }

  std::vector<Image> read(std::span<const std::int64_t> indices) override {
    std::vector<Image> out;
    cv::Mat frame;
    Image current;
    std::int64_t have = -1;
    for (auto want : indices) {
      if (want < have) throw VideoError("frame indices must be non-decreasing");
      while (next_ <= want) {
        if (!cap_.grab()) throw InsufficientDuration("video " + path_ + " ended before frame " + std::to_string(want));
        if (next_ == want) {
          cap_.retrieve(frame);
          current = image_from_bgr(frame);
          have = want;
        }
        ++next_;
      }
      if (have != want) throw VideoError("frame " + std::to_string(want) + " already consumed");
      out.push_back(current);
    }
    return out;
  }

private:
  std::string path_;
  cv::VideoCapture cap_;
  double fps_ = 0.0;
  std::int64_t count_ = -1;
  std::int64_t next_ = 0;
};

/// Nearest native frame index for time t_ms; exact halves round down.
inline std::int64_t nearest_frame_index(std::int64_t t_ms, double fps) {
  const double x = static_cast<double>(t_ms) * fps / 1000.0;
  return static_cast<std::int64_t>(std::ceil(x - 0.5));
}

/// Requested sample times start_offset + k * interval for k in [0, count).
inline std::vector<std::int64_t> sample_times(std::int64_t start_offset_ms, int interval_ms, int frame_count) {
  std::vector<std::int64_t> t;
  for (int k = 0; k < frame_count; ++k) t.push_back(start_offset_ms + std::int64_t{k} * interval_ms);
  return t;
}

inline FrameSequence sample_frames(const ScenarioSource &source, int interval_ms, int frame_count,
                                   FrameReader &reader) {
  if (frame_count < 1) throw ConfigError("frame_count must be positive");
  if (interval_ms <= 0) throw ConfigError("interval_ms must be positive");
  FrameSequence seq;
  seq.native_fps = reader.fps();
  seq.timestamps_ms = sample_times(source.start_offset_ms, interval_ms, frame_count);
  const std::int64_t n = reader.frame_count();
  const double duration_ms = n >= 0 ? static_cast<double>(n) * 1000.0 / seq.native_fps : -1.0;
  for (auto t : seq.timestamps_ms) {
    if (duration_ms >= 0.0 && static_cast<double>(t) > duration_ms)
      throw InsufficientDuration("scenario " + source.scenario_id + " needs " + std::to_string(t) +
                                 " ms but the clip lasts " + std::to_string(duration_ms) + " ms");
    auto idx = nearest_frame_index(t, seq.native_fps);
    if (n >= 0 && idx >= n) idx = n - 1; // t lies inside the final frame's display period
    seq.native_indices.push_back(idx);
  }
  seq.frames = reader.read(seq.native_indices);
  return seq;
}

inline FrameSequence sample_frames(const ScenarioSource &source, int interval_ms, int frame_count) {
  CvVideoReader reader(source.video_ref);
  return sample_frames(source, interval_ms, frame_count, reader);
}

} // namespace sceneval
