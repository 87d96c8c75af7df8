#pragma once

// Gathers evaluation records from run directories and exports, and scores
// them per subject. Model runs and human exports share one record format.

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/metrics/score.hpp"
#include "sceneval/runner/store.hpp"

namespace sceneval {

struct RecordSet {
  std::vector<EvaluationRecord> records;
  std::vector<std::filesystem::path> files;
  /// From run.json files found next to the records; all must agree.
  std::optional<AnnotationSchema> schema;
  /// model_id -> family, from the endpoints recorded in run.json.
  std::map<std::string, std::string> families;
};

/// True when the first non-blank line is a record or an export header. Lets
/// directory scans pass over session logs and ground-truth files.
inline bool looks_like_record_file(const std::filesystem::path &path) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    return line.find("\"record_id\"") != std::string::npos || line.rfind("{\"header\"", 0) == 0;
  }
  return false;
}

/// Accepts record files and directories; directories are searched
/// recursively for *.jsonl record files. A record_id seen twice anywhere is
/// corruption.
inline RecordSet load_record_set(const std::vector<std::filesystem::path> &inputs) {
  namespace fs = std::filesystem;
  RecordSet out;
  std::vector<fs::path> files, run_files;
  for (const auto &in : inputs) {
    if (!fs::exists(in)) throw ConfigError("no such file or directory: " + in.string());
    if (fs::is_directory(in)) {
      for (const auto &e : fs::recursive_directory_iterator(in)) {
        if (!e.is_regular_file()) continue;
        if (e.path().extension() == ".jsonl" && looks_like_record_file(e.path())) files.push_back(e.path());
        if (e.path().filename() == "run.json") run_files.push_back(e.path());
      }
    } else {
      files.push_back(in);
      if (fs::exists(in.parent_path() / "run.json")) run_files.push_back(in.parent_path() / "run.json");
    }
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  std::sort(run_files.begin(), run_files.end());
  run_files.erase(std::unique(run_files.begin(), run_files.end()), run_files.end());

  std::set<std::string> ids;
  for (const auto &f : files) {
    for (auto &r : read_records(f).records) {
      if (!ids.insert(r.record_id).second)
        throw StoreCorruption(f.string() + ": record_id " + r.record_id + " also appears in another file");
      out.records.push_back(std::move(r));
    }
  }
  out.files = files;

  for (const auto &rf : run_files) {
    std::ifstream in(rf);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
      throw ConfigError(rf.string() + ": " + e.what());
    }
    if (j.contains("endpoint") && j["endpoint"].is_object()) {
      const auto &e = j["endpoint"];
      const auto family = e.value("family", std::string());
      if (!family.empty()) out.families[e.value("model_id", std::string())] = family;
    }
    if (!j.contains("schema")) continue;
    auto s = schema_from_json(j["schema"]);
    if (out.schema && !(*out.schema == s))
      throw ConfigError(rf.string() + ": schema differs from other runs in the same report");
    out.schema = std::move(s);
  }
  return out;
}

/// One report per subject, models before humans, then by id.
inline std::vector<MetricsReport> reports_by_subject(const std::vector<EvaluationRecord> &records,
                                                     const AnnotationSchema &schema, const ScoreWeights &weights,
                                                     ScoreOptions options = {}) {
  std::map<std::pair<int, std::string>, ScoreAccumulator> acc;
  for (const auto &r : records) {
    const std::pair<int, std::string> k{r.subject_kind == SubjectKind::Model ? 0 : 1, r.subject_id};
    acc.try_emplace(k, schema, options).first->second.add(r);
  }
  std::vector<MetricsReport> out;
  for (const auto &[k, a] : acc) out.push_back(a.finish(weights));
  return out;
}

} // namespace sceneval
