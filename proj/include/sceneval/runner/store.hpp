#pragma once

// Append-only JSONL record store. Complete lines are never rewritten; a
// trailing line without its newline is the remnant of an interrupted append
// and is cut off when the store is opened.

#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/core/error.hpp"
#include "sceneval/runner/record.hpp"

namespace sceneval {

struct StoreLoad {
  std::vector<EvaluationRecord> records;
  std::size_t truncated_bytes = 0;
};

/// Reads every complete line. A malformed complete line, or a repeated
/// record_id, is corruption; a header line ({"header": ...}) is skipped.
inline StoreLoad read_records(const std::filesystem::path &path, bool truncate_partial = false) {
  StoreLoad out;
  if (!std::filesystem::exists(path)) return out;
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  in.close();

  const auto last_newline = content.rfind('\n');
  const std::size_t complete = last_newline == std::string::npos ? 0 : last_newline + 1;
  if (complete < content.size()) {
    out.truncated_bytes = content.size() - complete;
    if (truncate_partial) std::filesystem::resize_file(path, complete);
  }

  std::set<std::string> ids;
  std::size_t line_no = 0, begin = 0;
  while (begin < complete) {
    const auto end = content.find('\n', begin);
    ++line_no;
    const std::string line = content.substr(begin, end - begin);
    begin = end + 1;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    EvaluationRecord r;
    try {
      auto j = nlohmann::json::parse(line);
      if (j.contains("header")) continue;
      r = j.get<EvaluationRecord>();
    } catch (const std::exception &e) {
      throw StoreCorruption(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!ids.insert(r.record_id).second)
      throw StoreCorruption(path.string() + " line " + std::to_string(line_no) + ": duplicate record_id " +
                            r.record_id);
    out.records.push_back(std::move(r));
  }
  return out;
}

class RunStore {
public:
  explicit RunStore(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
    auto load = read_records(path_, true);
    truncated_bytes_ = load.truncated_bytes;
    records_ = std::move(load.records);
    for (const auto &r : records_) ids_.insert(r.record_id);
    out_.open(path_, std::ios::binary | std::ios::app);
    if (!out_) throw StoreCorruption("cannot open " + path_.string() + " for appending");
  }

  const std::filesystem::path &path() const { return path_; }
  std::size_t truncated_bytes() const { return truncated_bytes_; }

  /// Snapshot of all records, loaded and appended.
  std::vector<EvaluationRecord> records() const {
    std::lock_guard lock(mu_);
    return records_;
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  bool contains(const std::string &record_id) const {
    std::lock_guard lock(mu_);
    return ids_.count(record_id) > 0;
  }

  /// Appends one line and flushes it. A record_id already present is refused.
  bool append(const EvaluationRecord &r) {
    std::lock_guard lock(mu_);
    if (!ids_.insert(r.record_id).second) return false;
    out_ << nlohmann::json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw StoreCorruption("write to " + path_.string() + " failed");
    records_.push_back(r);
    return true;
  }

private:
  std::filesystem::path path_;
  mutable std::mutex mu_;
  std::ofstream out_;
  std::vector<EvaluationRecord> records_;
  std::set<std::string> ids_;
  std::size_t truncated_bytes_ = 0;
};

} // namespace sceneval
