#include <gtest/gtest.h>

#include <chrono>
#include <filesystem>
#include <set>

#include <opencv2/videoio.hpp>

#include "gif_reader.hpp"
#include "sceneval/frames/assets.hpp"
#include "sceneval/frames/collage.hpp"
#include "sceneval/frames/gif.hpp"
#include "sceneval/frames/grids.hpp"
#include "sceneval/frames/synthetic.hpp"

#include "oracles.hpp"

using namespace sceneval;
using sceneval::oracle::brute_force_layouts;

namespace {

const Rgb kRed{255, 0, 0}, kGreen{0, 255, 0}, kBlue{0, 0, 255}, kWhite{255, 255, 255};

SamplingConfig collage_config(int n, GridLayout g, int level, int interval = 200) {
  return SamplingConfig{interval, n, Resolution::from_level(level), g, PresentationMode::Collage};
}

} // namespace

TEST(EnumerateGrids, Examples) {
  EXPECT_EQ(enumerate_grids(1), (std::vector<GridLayout>{{1, 1}}));
  EXPECT_EQ(enumerate_grids(6), (std::vector<GridLayout>{{1, 6}, {2, 3}, {3, 2}, {6, 1}}));
  EXPECT_THROW(enumerate_grids(0), ConfigError);
  EXPECT_THROW(enumerate_grids(11), ConfigError);
}

TEST(EnumerateGrids, CompleteAgainstBruteForce) {
  std::size_t total = 0;
  for (int n = 1; n <= 10; ++n) {
    auto grids = enumerate_grids(n);
    std::set<std::pair<int, int>> got;
    for (auto g : grids) {
      EXPECT_EQ(g.cells(), n);
      EXPECT_TRUE(got.insert({g.rows, g.cols}).second) << "duplicate layout";
    }
    EXPECT_EQ(got, brute_force_layouts(n));
    EXPECT_TRUE(std::is_sorted(grids.begin(), grids.end()));
    total += grids.size();
  }
  EXPECT_EQ(total, 27u);
  EXPECT_EQ(enumerate_all_grids().size(), 27u);
  // 5x2 is a valid layout for ten frames.
  auto ten = enumerate_grids(10);
  EXPECT_NE(std::find(ten.begin(), ten.end(), GridLayout{5, 2}), ten.end());
}

TEST(SampleFrames, RequestedTimestamps) {
  SyntheticClip clip("s", 64, 36, 30.0, 300);
  ScenarioSource src{"s", "synthetic:s", "caption", 0, ""};
  auto seq = sample_frames(src, 200, 4, clip);
  EXPECT_EQ(seq.timestamps_ms, (std::vector<std::int64_t>{0, 200, 400, 600}));
  EXPECT_EQ(seq.native_indices, (std::vector<std::int64_t>{0, 6, 12, 18}));

  auto single = sample_frames(ScenarioSource{"s", "", "c", 1000, ""}, 500, 1, clip);
  EXPECT_EQ(single.timestamps_ms, (std::vector<std::int64_t>{1000}));
  EXPECT_EQ(single.native_indices, (std::vector<std::int64_t>{30}));
  EXPECT_EQ(single.frames.size(), 1u);
}

TEST(SampleFrames, NearestNativeIndexOracle) {
  // Independent oracle: scan every native frame, keep the closest, earlier on ties.
  auto oracle = [](std::int64_t t, double fps, std::int64_t n) {
    std::int64_t best = 0;
    double best_d = 1e300;
    for (std::int64_t i = 0; i < n; ++i) {
      double d = std::abs(i * 1000.0 / fps - double(t));
      if (d < best_d - 1e-9) {
        best = i;
        best_d = d;
      }
    }
    return best;
  };
  EXPECT_EQ(sample_times(0, 100, 10).size(), 10u);
  SyntheticClip clip30("x", 8, 8, 30.0, 400);
  auto seq = sample_frames(ScenarioSource{"x", "", "c", 0, ""}, 100, 10, clip30);
  EXPECT_EQ(seq.native_indices, (std::vector<std::int64_t>{0, 3, 6, 9, 12, 15, 18, 21, 24, 27}));
  for (double fps : {10.0, 24.0, 25.0, 29.97, 30.0, 60.0}) {
    for (int interval = 100; interval <= 1000; interval += 100) {
      for (std::int64_t offset : {0, 40, 1234}) {
        SyntheticClip clip("x", 8, 8, fps, 900);
        auto s = sample_frames(ScenarioSource{"x", "", "c", offset, ""}, interval, 5, clip);
        for (int k = 0; k < 5; ++k) {
          EXPECT_EQ(s.native_indices[k], oracle(s.timestamps_ms[k], fps, 900)) << fps << " " << interval;
          if (k > 0) {
            EXPECT_GT(s.timestamps_ms[k], s.timestamps_ms[k - 1]);
            EXPECT_GE(s.native_indices[k], s.native_indices[k - 1]);
            if (interval >= 1000.0 / fps) EXPECT_NE(s.native_indices[k], s.native_indices[k - 1]);
          }
        }
      }
    }
  }
}

TEST(SampleFrames, TiesGoToEarlierFrame) {
  // 25 fps: t = 20 ms sits exactly between frames 0 and 1.
  EXPECT_EQ(nearest_frame_index(20, 25.0), 0);
  EXPECT_EQ(nearest_frame_index(21, 25.0), 1);
  EXPECT_EQ(nearest_frame_index(100, 25.0), 2);
}

TEST(SampleFrames, InsufficientDurationSignalsSkip) {
  SyntheticClip clip("x", 8, 8, 30.0, 30); // 1 second
  ScenarioSource src{"x", "", "c", 0, ""};
  EXPECT_NO_THROW(sample_frames(src, 100, 10, clip));
  EXPECT_THROW(sample_frames(src, 200, 10, clip), InsufficientDuration);
  ScenarioSource late{"x", "", "c", 900, ""};
  EXPECT_THROW(sample_frames(late, 100, 3, clip), InsufficientDuration);
}

TEST(SampleFrames, ReadsRealContainerVideo) {
  const std::string path = testing::TempDir() + "/sceneval_clip.avi";
  {
    cv::VideoWriter w(path, cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 30.0, cv::Size(64, 36));
    ASSERT_TRUE(w.isOpened());
    for (int i = 0; i < 60; ++i) w.write(cv::Mat(36, 64, CV_8UC3, cv::Scalar(i * 4, i * 4, i * 4)));
  }
  ScenarioSource src{"v", path, "The ego vehicle is moving.", 0, "test"};
  auto seq = sample_frames(src, 100, 10);
  EXPECT_DOUBLE_EQ(seq.native_fps, 30.0);
  ASSERT_EQ(seq.frames.size(), 10u);
  for (std::size_t k = 0; k < 10; ++k) {
    EXPECT_EQ(seq.native_indices[k], std::int64_t(3 * k));
    // Frame i was written with grey level 4i; MJPEG is lossy, so allow slack.
    EXPECT_NEAR(seq.frames[k].at(32, 18).g, 4 * 3 * int(k), 6);
  }
  EXPECT_NO_THROW(sample_frames(src, 1000, 3)); // last request lands exactly on the clip end
  EXPECT_THROW(sample_frames(src, 1000, 4), InsufficientDuration);
  EXPECT_THROW(sample_frames(ScenarioSource{"v", "/nonexistent.mp4", "c", 0, ""}, 100, 2), VideoError);
}

TEST(ScaleFrame, Examples) {
  Image full(1920, 1080, kGreen);
  auto small = scale_frame(full, Resolution::from_level(1));
  EXPECT_EQ(small.width(), 160);
  EXPECT_EQ(small.height(), 90);
  EXPECT_EQ(small.at(80, 45), kGreen);

  Image exact(160, 90, kRed);
  exact.set(3, 4, kBlue);
  EXPECT_EQ(scale_frame(exact, Resolution::from_level(1)).data(), exact.data());

  EXPECT_THROW(scale_frame(Image(), Resolution::from_level(1)), std::invalid_argument);
}

TEST(ScaleFrame, LetterboxesFourByThree) {
  Image four_three(640, 480, kWhite);
  auto out = scale_frame(four_three, Resolution::from_level(1));
  ASSERT_EQ(out.width(), 160);
  ASSERT_EQ(out.height(), 90);
  // Content 120x90 centred: bars are columns [0,20) and [140,160).
  EXPECT_EQ(letterbox_content_box(640, 480, 160, 90), (Box{20, 0, 120, 90}));
  for (int y = 0; y < 90; ++y) {
    EXPECT_EQ(out.at(0, y), (Rgb{0, 0, 0}));
    EXPECT_EQ(out.at(19, y), (Rgb{0, 0, 0}));
    EXPECT_EQ(out.at(20, y), kWhite);
    EXPECT_EQ(out.at(139, y), kWhite);
    EXPECT_EQ(out.at(140, y), (Rgb{0, 0, 0}));
  }
}

TEST(ComposeCollage, Examples) {
  std::vector<Image> four{Image(160, 90, kRed), Image(160, 90, kGreen), Image(160, 90, kBlue),
                          Image(160, 90, kWhite)};
  auto c = compose_collage(four, collage_config(4, {2, 2}, 1));
  EXPECT_EQ(c.image.width(), 320);
  EXPECT_EQ(c.image.height(), 180);
  EXPECT_EQ(c.tile_boxes[2], (Box{0, 90, 160, 90}));
  EXPECT_EQ(c.image.at(239, 44), kGreen);

  // Tile-box membership oracle for every pixel.
  const Rgb colors[] = {kRed, kGreen, kBlue, kWhite};
  for (int y = 0; y < 180; y += 7)
    for (int x = 0; x < 320; x += 5)
      for (int k = 0; k < 4; ++k)
        if (c.tile_boxes[k].contains(x, y)) EXPECT_EQ(c.image.at(x, y), colors[k]);

  std::vector<Image> three(3, Image(320, 180, kBlue));
  auto wide = compose_collage(three, SamplingConfig{200, 3, Resolution::from_level(2), {1, 3},
                                                    PresentationMode::Collage});
  EXPECT_EQ(wide.image.width(), 960);
  EXPECT_EQ(wide.image.height(), 180);

  EXPECT_THROW(compose_collage(three, collage_config(4, {2, 2}, 1)), ConfigError);
}

TEST(ComposeCollage, CropsReconstructScaledInputs) {
  for (int n = 1; n <= 10; ++n) {
    for (auto g : enumerate_grids(n)) {
      for (int level : {1, 3}) {
        std::vector<Image> frames;
        for (int k = 0; k < n; ++k) {
          Image f(320, 180, Rgb{std::uint8_t(20 * k), std::uint8_t(255 - 20 * k), std::uint8_t(7 * k)});
          f.set(k, k, kWhite); // make each frame distinguishable beyond its fill
          frames.push_back(std::move(f));
        }
        auto cfg = collage_config(n, g, level);
        auto c = compose_collage(frames, cfg);
        ASSERT_EQ(c.image.width(), g.cols * cfg.resolution.width);
        ASSERT_EQ(c.image.height(), g.rows * cfg.resolution.height);
        for (int k = 0; k < n; ++k) {
          EXPECT_EQ(c.tile_boxes[k].x / cfg.resolution.width, k % g.cols);
          EXPECT_EQ(c.tile_boxes[k].y / cfg.resolution.height, k / g.cols);
          EXPECT_EQ(c.image.crop(c.tile_boxes[k]), scale_frame(frames[k], cfg.resolution));
        }
      }
    }
  }
}

TEST(ComposeGif, EncodesDelaysLoopAndPixels) {
  std::vector<Image> four{Image(16, 9, kRed), Image(16, 9, kGreen), Image(16, 9, kBlue), Image(16, 9, kWhite)};
  auto anim = compose_gif(four, 200);
  auto bytes = encode_gif(anim);
  auto g = gif_reader::read(bytes);
  EXPECT_EQ(g.width, 16);
  EXPECT_EQ(g.height, 9);
  EXPECT_TRUE(g.has_loop_block);
  EXPECT_EQ(g.loop_count, 0);
  ASSERT_EQ(g.frames.size(), 4u);
  const Rgb colors[] = {kRed, kGreen, kBlue, kWhite};
  for (std::size_t k = 0; k < 4; ++k) {
    EXPECT_EQ(g.frames[k].delay_cs * 10, 200);
    for (auto idx : g.frames[k].indices) {
      Rgb c{g.palette[idx * 3u], g.palette[idx * 3u + 1], g.palette[idx * 3u + 2]};
      EXPECT_EQ(c, colors[k]);
    }
  }

  auto single = gif_reader::read(encode_gif(compose_gif({Image(4, 4, kRed)}, 500)));
  EXPECT_EQ(single.frames.size(), 1u);

  std::vector<Image> ten(10, Image(4, 4, kBlue));
  auto long_anim = compose_gif(ten, 1000);
  EXPECT_EQ(long_anim.total_duration_ms(), 10000);
  int total_cs = 0;
  for (auto &f : gif_reader::read(encode_gif(long_anim)).frames) total_cs += f.delay_cs;
  EXPECT_EQ(total_cs * 10, 10000);

  EXPECT_THROW(compose_gif(std::vector<Image>{}, 200), ConfigError);
  EXPECT_THROW(compose_gif({Image(4, 4), Image(5, 4)}, 200), ConfigError);
}

TEST(ComposeGif, LzwRoundTripOnNoisyFrames) {
  // Noise forces dictionary resets and every code width up to 12 bits.
  SeededRng rng(3);
  Image noisy(200, 150);
  for (auto &b : noisy.data()) b = static_cast<std::uint8_t>(rng.below(256));
  auto g = gif_reader::read(encode_gif(compose_gif({noisy, Image(200, 150, kGreen)}, 100)));
  ASSERT_EQ(g.frames.size(), 2u);
  for (int y = 0; y < 150; ++y)
    for (int x = 0; x < 200; ++x) {
      auto idx = g.frames[0].indices[std::size_t(y) * 200 + x];
      EXPECT_EQ(idx, gif::palette_index(noisy.at(x, y)));
    }
}

TEST(Assets, DeterministicAndSidecarComplete) {
  ScenarioSource src{"scn/1", "synthetic:scn1", "The ego vehicle is moving.", 0, "synthetic"};
  auto cfg = collage_config(4, {2, 2}, 1);
  auto a = build_assets(src, cfg, AssetKind::Collage);
  auto b = build_assets(src, cfg, AssetKind::Collage);
  ASSERT_EQ(a.files.size(), 1u);
  EXPECT_EQ(a.files[0].bytes, b.files[0].bytes);
  EXPECT_EQ(a.asset_id, "scn_1__T200-N4-R1-G2x2-collage__collage");

  auto png = decode_image(a.files[0].bytes);
  EXPECT_EQ(png.width(), 320);
  EXPECT_EQ(png.height(), 180);

  auto side = a.sidecar();
  EXPECT_EQ(side["tile_boxes"].size(), 4u);
  EXPECT_EQ(side["config"]["grid"], "2x2");
  EXPECT_EQ(side["timestamps_ms"], nlohmann::json({0, 200, 400, 600}));
  EXPECT_EQ(side["frames_sha256"].get<std::string>().size(), 64u);

  auto sep = build_assets(src, SamplingConfig{200, 4, Resolution::from_level(1), {2, 2}, PresentationMode::Separate},
                          AssetKind::Frames);
  EXPECT_EQ(sep.files.size(), 4u);

  auto gif = build_assets(src, cfg, AssetKind::Gif);
  EXPECT_EQ(gif.sidecar()["frame_delay_ms"], 200);
  EXPECT_EQ(gif_reader::read(gif.files[0].bytes).frames.size(), 4u);

  const auto dir = std::filesystem::path(testing::TempDir()) / "sceneval_assets";
  std::filesystem::remove_all(dir);
  write_assets(a, dir);
  EXPECT_TRUE(std::filesystem::exists(dir / (a.asset_id + ".png")));
  EXPECT_TRUE(std::filesystem::exists(dir / (a.asset_id + ".json")));
}
