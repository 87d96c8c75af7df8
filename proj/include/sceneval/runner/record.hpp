#pragma once

// The evaluation record shared by model runs and human sessions: one answer
// to one scenario under one configuration.

#include <chrono>
#include <ctime>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "sceneval/annotate/extractor.hpp"
#include "sceneval/core/config.hpp"
#include "sceneval/gateway/client.hpp"
#include "sceneval/prompt/builder.hpp"
#include "sceneval/prompt/parser.hpp"

namespace sceneval {

enum class SubjectKind { Model, Human };

struct EvaluationRecord {
  std::string record_id;
  std::string run_id;
  int phase = 0; // 0 when not produced by a phase plan
  std::string scenario_id;
  SubjectKind subject_kind = SubjectKind::Model;
  std::string subject_id; // model_id or evaluator_id
  SamplingConfig config;
  std::string view_mode; // presentation the subject saw: collage, separate, batch, gif, video
  std::size_t position = 0;
  std::optional<PromptBundle> prompt;
  ParsedResponse predicted;
  GroundTruth truth;
  double latency_s = 0.0;
  QueryOutcome outcome;
  std::string timestamp;

  /// Excluded from metrics: no answer reached the harness.
  bool failed() const { return !outcome.ok(); }
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms));
  return out;
}

inline void to_json(nlohmann::json &j, const EvaluationRecord &r) {
  j = {{"record_id", r.record_id},
       {"run_id", r.run_id},
       {"phase", r.phase},
       {"scenario_id", r.scenario_id},
       {"subject_kind", r.subject_kind == SubjectKind::Model ? "model" : "human"},
       {r.subject_kind == SubjectKind::Model ? "model_id" : "evaluator_id", r.subject_id},
       {"config", r.config},
       {"config_id", r.config.id()},
       {"view_mode", r.view_mode},
       {"position", r.position},
       {"predicted", r.predicted},
       {"truth", r.truth},
       {"latency_s", r.latency_s},
       {"outcome", r.outcome},
       {"timestamp", r.timestamp}};
  j["prompt"] = r.prompt ? nlohmann::json(*r.prompt) : nlohmann::json(nullptr);
}

inline void from_json(const nlohmann::json &j, EvaluationRecord &r) {
  r.record_id = j.at("record_id").get<std::string>();
  r.run_id = j.value("run_id", std::string());
  r.phase = j.value("phase", 0);
  r.scenario_id = j.at("scenario_id").get<std::string>();
  const std::string kind = j.value("subject_kind", std::string("model"));
  if (kind != "model" && kind != "human") throw ConfigError("record " + r.record_id + ": bad subject_kind");
  r.subject_kind = kind == "model" ? SubjectKind::Model : SubjectKind::Human;
  r.subject_id = j.at(r.subject_kind == SubjectKind::Model ? "model_id" : "evaluator_id").get<std::string>();
  r.config = j.at("config").get<SamplingConfig>();
  r.view_mode = j.value("view_mode", std::string(to_string(r.config.mode)));
  r.position = j.value("position", std::size_t{0});
  r.predicted = j.at("predicted").get<ParsedResponse>();
  r.truth = j.at("truth").get<GroundTruth>();
  r.latency_s = j.value("latency_s", 0.0);
  r.outcome = j.value("outcome", nlohmann::json::object()).get<QueryOutcome>();
  r.timestamp = j.value("timestamp", std::string());
  r.prompt.reset();
  if (auto it = j.find("prompt"); it != j.end() && it->is_object()) r.prompt = it->get<PromptBundle>();
}

} // namespace sceneval
