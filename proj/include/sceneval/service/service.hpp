#pragma once

// Human evaluation sessions. Every piece of state lives in append-only JSONL
// logs under data_dir: sessions.jsonl (one line per created session),
// records.jsonl (one EvaluationRecord per accepted answer) and curation.jsonl.
// A session's cursor is the number of its records, so a restart recovers
// exactly the accepted answers.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/annotate/extractor.hpp"
#include "sceneval/frames/assets.hpp"
#include "sceneval/frames/codec.hpp"
#include "sceneval/runner/plan.hpp"
#include "sceneval/runner/record.hpp"
#include "sceneval/runner/store.hpp"

namespace sceneval {

/// Failure with an HTTP status and a machine-readable code.
class ServiceError : public Error {
public:
  ServiceError(int status, std::string code, const std::string &message, nlohmann::json detail = nullptr)
      : Error(message), status_(status), code_(std::move(code)), detail_(std::move(detail)) {}
  int status() const noexcept { return status_; }
  const std::string &code() const noexcept { return code_; }
  nlohmann::json body() const {
    nlohmann::json j = {{"error", code_}, {"message", what()}};
    if (detail_.is_object())
      for (auto it = detail_.begin(); it != detail_.end(); ++it) j[it.key()] = it.value();
    return j;
  }

private:
  int status_;
  std::string code_;
  nlohmann::json detail_;
};

enum class ViewMode { Collage, Gif, Video };

inline std::string_view to_string(ViewMode m) {
  switch (m) {
  case ViewMode::Collage: return "collage";
  case ViewMode::Gif: return "gif";
  case ViewMode::Video: return "video";
  }
  return "collage";
}

inline ViewMode parse_view_mode(std::string_view s) {
  if (s == "collage") return ViewMode::Collage;
  if (s == "gif") return ViewMode::Gif;
  if (s == "video") return ViewMode::Video;
  throw ConfigError("unknown view mode '" + std::string(s) + "' (expected collage, gif or video)");
}

inline AssetKind asset_kind_for(ViewMode m) {
  switch (m) {
  case ViewMode::Collage: return AssetKind::Collage;
  case ViewMode::Gif: return AssetKind::Gif;
  case ViewMode::Video: return AssetKind::Video;
  }
  return AssetKind::Collage;
}

/// Scenario x config pairs a session covers. `phases` expand to configs and
/// join `configs`; an empty scenario list means every eligible scenario.
struct SessionPlan {
  std::vector<std::string> scenarios;
  std::vector<SamplingConfig> configs;
  std::vector<PhasePlan> phases;
};

inline void to_json(nlohmann::json &j, const SessionPlan &p) {
  j = {{"scenarios", p.scenarios}, {"configs", p.configs}, {"phases", p.phases}};
}

inline void from_json(const nlohmann::json &j, SessionPlan &p) {
  if (!j.is_object()) throw ConfigError("session plan must be a JSON object");
  p.scenarios = j.value("scenarios", std::vector<std::string>{});
  p.configs = j.value("configs", std::vector<SamplingConfig>{});
  p.phases = j.value("phases", std::vector<PhasePlan>{});
}

inline SessionPlan load_session_plan(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open session plan " + path);
  try {
    return nlohmann::json::parse(in).get<SessionPlan>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(path + ": " + e.what());
  }
}

struct AssignmentItem {
  std::string scenario_id;
  SamplingConfig config;
  std::string asset_id;
};

struct Session {
  std::string session_id;
  std::string evaluator_id;
  ViewMode mode = ViewMode::Collage;
  std::uint64_t seed = 0;
  std::vector<AssignmentItem> assignment;
  std::size_t cursor = 0; // items answered; never exceeds assignment.size()
  std::string created;

  bool complete() const { return cursor >= assignment.size(); }
};

/// Public view: no ground truth anywhere.
inline nlohmann::json session_json(const Session &s) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto &a : s.assignment)
    items.push_back({{"scenario_id", a.scenario_id}, {"config", a.config}, {"asset_id", a.asset_id}});
  return {{"session_id", s.session_id}, {"evaluator_id", s.evaluator_id}, {"mode", to_string(s.mode)},
          {"seed", s.seed},             {"created", s.created},           {"total", s.assignment.size()},
          {"cursor", s.cursor},         {"complete", s.complete()},       {"assignment", items}};
}

struct CurationFlag {
  std::string scenario_id;
  std::string evaluator_id;
  std::string verdict;
  std::string note;
  std::string session_id;
  std::string timestamp;
};

inline void to_json(nlohmann::json &j, const CurationFlag &f) {
  j = {{"scenario_id", f.scenario_id}, {"evaluator_id", f.evaluator_id}, {"verdict", f.verdict},
       {"note", f.note},               {"session_id", f.session_id},     {"timestamp", f.timestamp}};
}

inline void from_json(const nlohmann::json &j, CurationFlag &f) {
  f.scenario_id = j.at("scenario_id").get<std::string>();
  f.evaluator_id = j.value("evaluator_id", std::string());
  f.verdict = j.at("verdict").get<std::string>();
  f.note = j.value("note", std::string());
  f.session_id = j.value("session_id", std::string());
  f.timestamp = j.value("timestamp", std::string());
}

struct SubmittedAnswer {
  std::size_t index = 0; // 1-based assignment slot
  std::string key;
  double view_duration_s = 0.0;
  std::vector<CurationFlag> flags; // scenario and session filled in by the service
};

struct ServiceOptions {
  Manifest manifest;
  AnnotationSchema schema;
  std::filesystem::path data_dir;
  /// Generated assets are also written here when set.
  std::optional<std::filesystem::path> assets_dir;
  std::optional<SessionPlan> default_plan;
  bool include_uncurated = false;
};

inline std::string random_session_id() {
  std::random_device rd;
  std::string out;
  char buf[9];
  for (int i = 0; i < 4; ++i) {
    std::snprintf(buf, sizeof buf, "%08x", rd());
    out += buf;
  }
  return out;
}

class BaselineService {
public:
  explicit BaselineService(ServiceOptions opt) : opt_(std::move(opt)) {
    std::filesystem::create_directories(opt_.data_dir);
    for (const auto &g : extract_manifest(opt_.manifest, opt_.schema).truths) truths_[g.scenario_id] = g;
    store_.emplace(opt_.data_dir / "records.jsonl");
    load_state();
  }

  const AnnotationSchema &schema() const { return opt_.schema; }

  Session create_session(const std::string &evaluator_id, ViewMode mode, std::optional<SessionPlan> plan,
                         std::uint64_t seed) {
    if (evaluator_id.empty()) throw ServiceError(400, "invalid_request", "evaluator_id must be non-empty");
    if (!plan) plan = opt_.default_plan;
    if (!plan) throw ServiceError(400, "invalid_plan", "no plan given and the server has no default plan");
    auto pairs = expand_session_plan(*plan);

    Session s;
    s.evaluator_id = evaluator_id;
    s.mode = mode;
    s.seed = seed;
    s.created = utc_timestamp();
    auto rng = SeededRng::derive(seed, "session-assignment");
    rng.shuffle(pairs);

    // Assets exist before the session does; a scenario that cannot be
    // rendered fails the whole creation.
    std::map<std::string, AssetBundle> fresh;
    for (auto &[sid, config] : pairs) {
      const auto kind = asset_kind_for(mode);
      const auto id = make_asset_id(sid, config, kind);
      s.assignment.push_back({sid, config, id});
      if (fresh.count(id) || has_asset(id)) continue;
      fresh.emplace(id, render_asset(sid, config, kind));
    }

    std::lock_guard lock(mu_);
    for (auto &[id, b] : fresh) assets_.try_emplace(id, std::move(b));
    do s.session_id = random_session_id();
    while (sessions_.count(s.session_id));
    append_line(opt_.data_dir / "sessions.jsonl", session_log_json(s));
    sessions_[s.session_id] = s;
    return s;
  }

  Session session(const std::string &session_id) const {
    std::lock_guard lock(mu_);
    return find_session(session_id);
  }

  /// The cursor item, without advancing.
  nlohmann::json next_item(const std::string &session_id) const {
    std::lock_guard lock(mu_);
    const auto &s = find_session(session_id);
    if (s.complete())
      return {{"status", "complete"}, {"session_id", s.session_id}, {"submitted", s.cursor},
              {"total", s.assignment.size()}};
    const auto &item = s.assignment[s.cursor];
    const auto &asset = assets_.at(item.asset_id);
    nlohmann::json a = {{"asset_id", asset.asset_id},
                        {"url", "/assets/" + asset.asset_id},
                        {"kind", to_string(asset.kind)},
                        {"mime", asset.files.at(0).mime},
                        {"interval_ms", item.config.interval_ms},
                        {"frame_count", item.config.frame_count},
                        {"resolution_level", item.config.resolution.level},
                        {"grid", item.config.grid.to_string()}};
    if (asset.kind == AssetKind::Gif) a["frame_delay_ms"] = asset.frame_delay_ms;
    if (asset.kind == AssetKind::Video && !asset.timestamps_ms.empty())
      a["segment_ms"] = {asset.timestamps_ms.front(), asset.timestamps_ms.back()};
    nlohmann::json questions = nlohmann::json::array();
    for (std::size_t i = 0; i < opt_.schema.size(); ++i) {
      const auto &c = opt_.schema.category(i);
      nlohmann::json options = nlohmann::json::array();
      for (const auto &o : c.options) options.push_back({{"letter", std::string(1, o.letter)}, {"label", o.label}});
      questions.push_back(
          {{"index", i + 1}, {"category", c.name}, {"short_name", c.short_name}, {"question", c.question},
           {"options", options}});
    }
    return {{"status", "item"},
            {"session_id", s.session_id},
            {"mode", to_string(s.mode)},
            {"index", s.cursor + 1},
            {"total", s.assignment.size()},
            {"scenario_id", item.scenario_id},
            {"config_id", item.config.id()},
            {"asset", a},
            {"questions", questions},
            {"key_length", opt_.schema.size()}};
  }

  /// Accepts the answer for the cursor slot. Re-sending the stored answer of
  /// an earlier slot is a no-op; a different answer for it is a conflict.
  nlohmann::json submit(const std::string &session_id, const SubmittedAnswer &answer) {
    std::lock_guard lock(mu_);
    auto &s = find_session(session_id);
    const std::size_t n = s.assignment.size();
    if (answer.index < 1 || answer.index > n)
      throw ServiceError(422, "invalid_index", "index must be in 1.." + std::to_string(n));
    const auto record_id = human_record_id(s.session_id, answer.index);

    if (answer.index <= s.cursor) {
      const auto stored = stored_key(record_id);
      if (stored == answer.key) return progress_json(s, "duplicate");
      throw ServiceError(409, "conflict", "slot " + std::to_string(answer.index) + " already holds a different answer",
                         {{"index", answer.index}, {"stored_key", stored}});
    }
    if (answer.index != s.cursor + 1)
      throw ServiceError(409, "not_current", "slot " + std::to_string(answer.index) + " is ahead of the current item " +
                                                  std::to_string(s.cursor + 1),
                         {{"current", s.cursor + 1}});

    auto verdict = validate_key(answer.key, opt_.schema);
    if (!verdict.valid()) {
      nlohmann::json detail = {{"fault", verdict.fault == KeyFault::Length ? "length" : "letter"},
                               {"position", verdict.position}};
      if (verdict.position > 0) detail["category"] = opt_.schema.category(verdict.position - 1).name;
      throw ServiceError(422, "invalid_key", verdict.message, detail);
    }
    if (!(answer.view_duration_s >= 0.0) || !std::isfinite(answer.view_duration_s))
      throw ServiceError(422, "invalid_duration", "view_duration_s must be a finite non-negative number");

    const auto &item = s.assignment[answer.index - 1];
    EvaluationRecord r;
    r.record_id = record_id;
    r.run_id = "human:" + s.session_id;
    r.scenario_id = item.scenario_id;
    r.subject_kind = SubjectKind::Human;
    r.subject_id = s.evaluator_id;
    r.config = item.config;
    r.view_mode = std::string(to_string(s.mode));
    r.position = answer.index - 1;
    r.predicted = ParsedResponse{ParseStatus::Parsed, AnswerKey(answer.key), answer.key, ""};
    r.truth = truths_.at(item.scenario_id);
    r.latency_s = answer.view_duration_s;
    r.outcome.latency_s = answer.view_duration_s;
    r.outcome.attempts = 1;
    r.outcome.requests = 1;
    r.timestamp = utc_timestamp();
    store_->append(r);
    ++s.cursor;
    for (auto f : answer.flags) {
      f.scenario_id = item.scenario_id;
      f.session_id = s.session_id;
      if (f.evaluator_id.empty()) f.evaluator_id = s.evaluator_id;
      add_flag_locked(std::move(f));
    }
    return progress_json(s, "accepted");
  }

  CurationFlag flag(CurationFlag f) {
    std::lock_guard lock(mu_);
    if (!truths_.count(f.scenario_id))
      throw ServiceError(404, "unknown_scenario", "no scenario '" + f.scenario_id + "'");
    if (f.verdict.empty()) throw ServiceError(422, "invalid_flag", "verdict must be non-empty");
    return add_flag_locked(std::move(f));
  }

  std::vector<CurationFlag> flags(const std::string &scenario_id = {}) const {
    std::lock_guard lock(mu_);
    std::vector<CurationFlag> out;
    for (const auto &f : flags_)
      if (scenario_id.empty() || f.scenario_id == scenario_id) out.push_back(f);
    return out;
  }

  /// Header line, then every accepted human record.
  std::string export_jsonl() const {
    std::lock_guard lock(mu_);
    const auto records = store_->records();
    std::string out = nlohmann::json{{"header",
                                      {{"kind", "human-export"},
                                       {"schema_id", opt_.schema.schema_id()},
                                       {"records", records.size()},
                                       {"sessions", sessions_.size()},
                                       {"exported", utc_timestamp()}}}}
                          .dump() +
                      "\n";
    for (const auto &r : records) out += nlohmann::json(r).dump() + "\n";
    return out;
  }

  /// Asset bytes, or nullopt for an unknown id.
  std::optional<EncodedImage> asset_file(const std::string &asset_id) const {
    std::lock_guard lock(mu_);
    auto it = assets_.find(asset_id);
    if (it == assets_.end() || it->second.files.empty()) return std::nullopt;
    return it->second.files.front();
  }

  std::optional<nlohmann::json> asset_sidecar(const std::string &asset_id) const {
    std::lock_guard lock(mu_);
    auto it = assets_.find(asset_id);
    if (it == assets_.end()) return std::nullopt;
    return it->second.sidecar();
  }

  /// (scenario, config) pairs of a plan, in plan order.
  std::vector<std::pair<std::string, SamplingConfig>> expand_session_plan(const SessionPlan &plan) const {
    std::vector<SamplingConfig> configs;
    std::set<std::string> seen;
    auto add = [&](const SamplingConfig &c) {
      if (seen.insert(c.id()).second) configs.push_back(c);
    };
    try {
      for (const auto &c : plan.configs) {
        c.validate();
        add(c);
      }
      for (const auto &pc : expand_protocol(plan.phases)) add(pc.config);
    } catch (const ConfigError &e) {
      throw ServiceError(400, "invalid_plan", e.what());
    }
    std::vector<std::string> scenarios = plan.scenarios;
    if (scenarios.empty()) {
      for (const auto &[id, g] : truths_)
        if (opt_.include_uncurated || !g.needs_curation) scenarios.push_back(id);
    } else {
      for (const auto &id : scenarios)
        if (!truths_.count(id)) throw ServiceError(400, "invalid_plan", "plan names unknown scenario '" + id + "'");
    }
    std::vector<std::pair<std::string, SamplingConfig>> pairs;
    for (const auto &id : scenarios)
      for (const auto &c : configs) pairs.emplace_back(id, c);
    if (pairs.empty()) throw ServiceError(400, "invalid_plan", "plan expands to no (scenario, config) pairs");
    return pairs;
  }

private:
  static std::string human_record_id(const std::string &session_id, std::size_t index) {
    return "h:" + session_id + ":" + std::to_string(index);
  }

  static void append_line(const std::filesystem::path &path, const nlohmann::json &j) {
    std::ofstream out(path, std::ios::app | std::ios::binary);
    out << j.dump() << '\n';
    out.flush();
    if (!out) throw StoreCorruption("write to " + path.string() + " failed");
  }

  /// Complete lines of a JSONL log; a partial tail is cut off.
  static std::vector<nlohmann::json> read_log(const std::filesystem::path &path) {
    std::vector<nlohmann::json> out;
    if (!std::filesystem::exists(path)) return out;
    std::ifstream in(path, std::ios::binary);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    const auto last = content.rfind('\n');
    const std::size_t complete = last == std::string::npos ? 0 : last + 1;
    if (complete < content.size()) std::filesystem::resize_file(path, complete);
    std::size_t begin = 0, line_no = 0;
    while (begin < complete) {
      const auto end = content.find('\n', begin);
      ++line_no;
      const auto line = content.substr(begin, end - begin);
      begin = end + 1;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        out.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::exception &e) {
        throw StoreCorruption(path.string() + " line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    return out;
  }

  static nlohmann::json session_log_json(const Session &s) {
    auto j = session_json(s);
    j.erase("cursor");
    j.erase("complete");
    j.erase("total");
    return j;
  }

  void load_state() {
    for (const auto &j : read_log(opt_.data_dir / "sessions.jsonl")) {
      Session s;
      try {
        s.session_id = j.at("session_id").get<std::string>();
        s.evaluator_id = j.at("evaluator_id").get<std::string>();
        s.mode = parse_view_mode(j.at("mode").get<std::string>());
        s.seed = j.value("seed", std::uint64_t{0});
        s.created = j.value("created", std::string());
        for (const auto &a : j.at("assignment"))
          s.assignment.push_back({a.at("scenario_id").get<std::string>(), a.at("config").get<SamplingConfig>(),
                                  a.at("asset_id").get<std::string>()});
      } catch (const std::exception &e) {
        throw StoreCorruption("sessions.jsonl: " + std::string(e.what()));
      }
      sessions_[s.session_id] = std::move(s);
    }
    for (const auto &r : store_->records()) {
      auto it = sessions_.find(r.run_id.substr(r.run_id.find(':') + 1));
      if (it == sessions_.end() || r.subject_kind != SubjectKind::Human)
        throw StoreCorruption("records.jsonl: record " + r.record_id + " belongs to no session");
      ++it->second.cursor;
    }
    for (const auto &[id, s] : sessions_) {
      if (s.cursor > s.assignment.size()) throw StoreCorruption("session " + id + " has more records than items");
      for (const auto &a : s.assignment)
        if (!assets_.count(a.asset_id)) assets_.emplace(a.asset_id, render_asset(a.scenario_id, a.config, asset_kind_for(s.mode)));
    }
    for (const auto &j : read_log(opt_.data_dir / "curation.jsonl")) flags_.push_back(j.get<CurationFlag>());
  }

  bool has_asset(const std::string &id) const {
    std::lock_guard lock(mu_);
    return assets_.count(id) > 0;
  }

  AssetBundle render_asset(const std::string &scenario_id, const SamplingConfig &config, AssetKind kind) const {
    const auto *source = opt_.manifest.find(scenario_id);
    if (!source) throw ServiceError(400, "invalid_plan", "unknown scenario '" + scenario_id + "'");
    AssetBundle b;
    try {
      b = build_assets(*source, config, kind);
    } catch (const VideoError &e) {
      throw ServiceError(422, "asset_error", "scenario '" + scenario_id + "': " + e.what());
    }
    if (b.files.empty())
      throw ServiceError(422, "asset_error",
                         "scenario '" + scenario_id + "' has no source file to serve in " +
                             std::string(to_string(kind)) + " mode");
    if (opt_.assets_dir) write_assets(b, *opt_.assets_dir);
    return b;
  }

  Session &find_session(const std::string &id) {
    auto it = sessions_.find(id);
    if (it == sessions_.end()) throw ServiceError(404, "unknown_session", "no session '" + id + "'");
    return it->second;
  }
  const Session &find_session(const std::string &id) const { return const_cast<BaselineService *>(this)->find_session(id); }

  std::string stored_key(const std::string &record_id) const {
    for (const auto &r : store_->records())
      if (r.record_id == record_id) return r.predicted.key ? r.predicted.key->str() : std::string();
    return {};
  }

  static nlohmann::json progress_json(const Session &s, const char *status) {
    return {{"status", status},
            {"session_id", s.session_id},
            {"submitted", s.cursor},
            {"total", s.assignment.size()},
            {"complete", s.complete()}};
  }

  CurationFlag add_flag_locked(CurationFlag f) {
    if (f.timestamp.empty()) f.timestamp = utc_timestamp();
    append_line(opt_.data_dir / "curation.jsonl", f);
    flags_.push_back(f);
    return f;
  }

  ServiceOptions opt_;
  mutable std::mutex mu_;
  std::map<std::string, GroundTruth> truths_;
  std::map<std::string, Session> sessions_;
  std::map<std::string, AssetBundle> assets_;
  std::vector<CurationFlag> flags_;
  std::optional<RunStore> store_;
};

} // namespace sceneval
