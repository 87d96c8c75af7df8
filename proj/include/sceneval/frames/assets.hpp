#pragma once

// Turns (scenario, config) into the concrete files a model or evaluator sees,
// plus a JSON sidecar recording how they were made.

#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/config.hpp"
#include "sceneval/core/scenario.hpp"
#include "sceneval/frames/codec.hpp"
#include "sceneval/frames/collage.hpp"
#include "sceneval/frames/gif.hpp"
#include "sceneval/frames/synthetic.hpp"

namespace sceneval {

enum class AssetKind { Collage, Frames, Gif, Video };

inline std::string_view to_string(AssetKind k) {
  switch (k) {
  case AssetKind::Collage: return "collage";
  case AssetKind::Frames: return "frames";
  case AssetKind::Gif: return "gif";
  case AssetKind::Video: return "video";
  }
  return "collage";
}

inline AssetKind parse_asset_kind(std::string_view s) {
  if (s == "collage") return AssetKind::Collage;
  if (s == "frames" || s == "separate" || s == "batch") return AssetKind::Frames;
  if (s == "gif") return AssetKind::Gif;
  if (s == "video") return AssetKind::Video;
  throw ConfigError("unknown asset kind '" + std::string(s) + "'");
}

/// The asset a model endpoint receives for a presentation mode.
inline AssetKind asset_kind_for(PresentationMode m) {
  return m == PresentationMode::Collage ? AssetKind::Collage : AssetKind::Frames;
}

struct EncodedImage {
  std::string mime;
  std::vector<std::uint8_t> bytes;
};

struct AssetBundle {
  std::string asset_id;
  std::string scenario_id;
  AssetKind kind = AssetKind::Collage;
  SamplingConfig config;
  std::vector<EncodedImage> files; // collage/gif/video: 1; frames: N in chronological order
  std::vector<Box> tile_boxes;
  std::vector<std::int64_t> timestamps_ms;
  std::vector<std::int64_t> native_indices;
  double native_fps = 0.0;
  int frame_delay_ms = 0;
  std::string source_hash; // SHA-256 of the video file, empty for procedural clips
  std::string frames_hash; // SHA-256 over the sampled raw frames

  nlohmann::json sidecar() const {
    nlohmann::json files_json = nlohmann::json::array();
    for (std::size_t i = 0; i < files.size(); ++i)
      files_json.push_back({{"name", file_name(i)}, {"mime", files[i].mime}, {"sha256", sha256_hex(files[i].bytes)}});
    nlohmann::json j{{"asset_id", asset_id},
                     {"scenario_id", scenario_id},
                     {"kind", to_string(kind)},
                     {"config", config},
                     {"tile_boxes", tile_boxes},
                     {"timestamps_ms", timestamps_ms},
                     {"native_indices", native_indices},
                     {"native_fps", native_fps},
                     {"source_sha256", source_hash},
                     {"frames_sha256", frames_hash},
                     {"files", files_json}};
    if (kind == AssetKind::Gif) {
      j["frame_delay_ms"] = frame_delay_ms;
      j["loop"] = "infinite";
    }
    return j;
  }

  std::string file_name(std::size_t i) const {
    switch (kind) {
    case AssetKind::Collage: return asset_id + ".png";
    case AssetKind::Gif: return asset_id + ".gif";
    case AssetKind::Frames: return asset_id + "_f" + std::to_string(i + 1) + ".png";
    case AssetKind::Video: {
      auto ext = std::filesystem::path(source_video).extension().string();
      return asset_id + (ext.empty() ? ".bin" : ext);
    }
    }
    return asset_id;
  }

  std::string source_video; // only for AssetKind::Video
};

inline std::string safe_file_stem(std::string_view s) {
  std::string out;
  for (char c : s) out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' ? c : '_');
  return out;
}

inline std::string make_asset_id(const std::string &scenario_id, const SamplingConfig &config, AssetKind kind) {
  return safe_file_stem(scenario_id) + "__" + config.id() + "__" + std::string(to_string(kind));
}

inline std::string video_mime(const std::string &path) {
  auto ext = std::filesystem::path(path).extension().string();
  if (ext == ".mp4" || ext == ".m4v") return "video/mp4";
  if (ext == ".webm") return "video/webm";
  if (ext == ".avi") return "video/x-msvideo";
  if (ext == ".mov") return "video/quicktime";
  if (ext == ".mkv") return "video/x-matroska";
  return "application/octet-stream";
}

inline std::string hash_frames(const std::vector<Image> &frames) {
  std::vector<std::uint8_t> all;
  for (const auto &f : frames) all.insert(all.end(), f.data().begin(), f.data().end());
  return sha256_hex(all);
}

inline AssetBundle build_assets(const ScenarioSource &source, const SamplingConfig &config, AssetKind kind,
                                FrameReader &reader) {
  config.validate();
  AssetBundle b;
  b.scenario_id = source.scenario_id;
  b.kind = kind;
  b.config = config;
  b.asset_id = make_asset_id(source.scenario_id, config, kind);
  if (!std::string_view(source.video_ref).starts_with(kSyntheticPrefix) &&
      std::filesystem::is_regular_file(source.video_ref))
    b.source_hash = sha256_hex(read_file_bytes(source.video_ref));

  FrameSequence seq = sample_frames(source, config.interval_ms, config.frame_count, reader);
  b.timestamps_ms = seq.timestamps_ms;
  b.native_indices = seq.native_indices;
  b.native_fps = seq.native_fps;
  b.frames_hash = hash_frames(seq.frames);

  switch (kind) {
  case AssetKind::Collage: {
    Collage c = compose_collage(seq, config);
    b.tile_boxes = c.tile_boxes;
    b.files.push_back({"image/png", encode_png(c.image)});
    break;
  }
  case AssetKind::Frames:
    for (const auto &f : seq.frames) b.files.push_back({"image/png", encode_png(scale_frame(f, config.resolution))});
    break;
  case AssetKind::Gif: {
    std::vector<Image> scaled;
    for (const auto &f : seq.frames) scaled.push_back(scale_frame(f, config.resolution));
    GifAnimation anim = compose_gif(std::move(scaled), config.interval_ms);
    b.frame_delay_ms = anim.delay_ms;
    b.files.push_back({"image/gif", encode_gif(anim)});
    break;
  }
  case AssetKind::Video:
    // No re-encoding: the source clip is served whole with its segment bounds.
    b.source_video = source.video_ref;
    if (std::filesystem::is_regular_file(source.video_ref))
      b.files.push_back({video_mime(source.video_ref), read_file_bytes(source.video_ref)});
    break;
  }
  return b;
}

inline AssetBundle build_assets(const ScenarioSource &source, const SamplingConfig &config, AssetKind kind) {
  auto reader = open_video(source);
  return build_assets(source, config, kind, *reader);
}

/// Writes the asset files and "<asset_id>.json" sidecar into dir.
inline void write_assets(const AssetBundle &b, const std::filesystem::path &dir) {
  std::filesystem::create_directories(dir);
  for (std::size_t i = 0; i < b.files.size(); ++i) write_file_bytes((dir / b.file_name(i)).string(), b.files[i].bytes);
  std::ofstream side(dir / (b.asset_id + ".json"));
  side << b.sidecar().dump(2) << '\n';
}

} // namespace sceneval
