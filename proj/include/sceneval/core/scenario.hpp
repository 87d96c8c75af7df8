#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"

namespace sceneval {

/// One captioned driving clip. The clip itself is referenced, never copied.
struct ScenarioSource {
  std::string scenario_id;
  std::string video_ref;
  std::string caption;
  std::int64_t start_offset_ms = 0;
  std::string dataset_tag;

  friend bool operator==(const ScenarioSource &, const ScenarioSource &) = default;
};

inline void to_json(nlohmann::json &j, const ScenarioSource &s) {
  j = nlohmann::json{{"scenario_id", s.scenario_id},
                     {"video_ref", s.video_ref},
                     {"caption", s.caption},
                     {"start_offset_ms", s.start_offset_ms},
                     {"dataset_tag", s.dataset_tag}};
}

inline void from_json(const nlohmann::json &j, ScenarioSource &s) {
  s.scenario_id = j.at("scenario_id").get<std::string>();
  s.video_ref = j.value("video_ref", std::string());
  s.caption = j.at("caption").get<std::string>();
  s.start_offset_ms = j.value("start_offset_ms", std::int64_t{0});
  s.dataset_tag = j.value("dataset_tag", std::string());
  if (s.scenario_id.empty()) throw Error("scenario_id must be non-empty");
  if (s.caption.empty()) throw Error("caption must be non-empty");
  if (s.start_offset_ms < 0) throw Error("start_offset_ms must be non-negative");
}

struct LineError {
  std::size_t line = 0; // 1-based
  std::string message;
};

struct Manifest {
  std::vector<ScenarioSource> scenarios;
  std::vector<LineError> errors;

  const ScenarioSource *find(const std::string &id) const {
    for (const auto &s : scenarios)
      if (s.scenario_id == id) return &s;
    return nullptr;
  }
};

/// Parses JSONL; bad lines (including duplicate ids) are collected, not fatal.
inline Manifest parse_manifest(std::istream &in) {
  Manifest m;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto s = nlohmann::json::parse(line).get<ScenarioSource>();
      if (!seen.insert(s.scenario_id).second) {
        m.errors.push_back({n, "duplicate scenario_id '" + s.scenario_id + "'"});
        continue;
      }
      m.scenarios.push_back(std::move(s));
    } catch (const std::exception &e) {
      m.errors.push_back({n, e.what()});
    }
  }
  return m;
}

inline Manifest load_manifest(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open manifest " + path);
  return parse_manifest(in);
}

inline void write_manifest(std::ostream &out, const std::vector<ScenarioSource> &scenarios) {
  for (const auto &s : scenarios) out << nlohmann::json(s).dump() << '\n';
}

} // namespace sceneval
