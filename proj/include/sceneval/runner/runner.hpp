#pragma once

// Runs phase plans against one endpoint: for every phase-tagged config, query
// scenarios from the phase's paired sequence until evaluations_per_config
// answers are stored. Resumable: stored positions are never re-queried.

#include <atomic>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/annotate/extractor.hpp"
#include "sceneval/frames/assets.hpp"
#include "sceneval/frames/codec.hpp"
#include "sceneval/gateway/client.hpp"
#include "sceneval/prompt/builder.hpp"
#include "sceneval/prompt/parser.hpp"
#include "sceneval/runner/plan.hpp"
#include "sceneval/runner/record.hpp"
#include "sceneval/runner/sampler.hpp"
#include "sceneval/runner/store.hpp"

#ifndef SCENEVAL_VERSION
#define SCENEVAL_VERSION "dev"
#endif

namespace sceneval {

struct RunOptions {
  bool include_uncurated = false;
  std::set<std::string> excluded_scenarios;
  int workers = 1;
  /// Failed queries tolerated per config before giving up on it; 0 means
  /// three times evaluations_per_config.
  int max_failures_per_config = 0;
  /// Stop after this many new records (simulated interruption).
  std::optional<std::size_t> stop_after;
  /// When set, generated assets are also written here.
  std::optional<std::filesystem::path> assets_dir;
  std::string run_id = "run";
};

inline void to_json(nlohmann::json &j, const RunOptions &o) {
  j = {{"include_uncurated", o.include_uncurated},
       {"excluded_scenarios", o.excluded_scenarios},
       {"workers", o.workers},
       {"max_failures_per_config", o.max_failures_per_config},
       {"run_id", o.run_id}};
  if (o.assets_dir) j["assets_dir"] = o.assets_dir->string();
}

inline void from_json(const nlohmann::json &j, RunOptions &o) {
  o.include_uncurated = j.value("include_uncurated", false);
  o.excluded_scenarios = j.value("excluded_scenarios", std::set<std::string>{});
  o.workers = j.value("workers", 1);
  o.max_failures_per_config = j.value("max_failures_per_config", 0);
  o.run_id = j.value("run_id", std::string("run"));
  if (j.contains("assets_dir")) o.assets_dir = j["assets_dir"].get<std::string>();
}

struct ConfigProgress {
  int phase = 0;
  std::string config_id;
  std::size_t succeeded = 0;
  std::size_t failed = 0;
  bool complete = false;
};

struct RunSummary {
  std::string run_id;
  std::string model_id;
  std::size_t eligible_scenarios = 0;
  std::size_t existing_records = 0;
  std::size_t new_records = 0;
  std::size_t new_failures = 0;
  std::size_t truncated_bytes = 0;
  bool interrupted = false;
  std::vector<ConfigProgress> configs;

  std::size_t incomplete_configs() const {
    std::size_t n = 0;
    for (const auto &c : configs) n += c.complete ? 0 : 1;
    return n;
  }
};

inline nlohmann::json summary_to_json(const RunSummary &s) {
  nlohmann::json configs = nlohmann::json::array();
  for (const auto &c : s.configs)
    configs.push_back({{"phase", c.phase},
                       {"config_id", c.config_id},
                       {"succeeded", c.succeeded},
                       {"failed", c.failed},
                       {"complete", c.complete}});
  return {{"run_id", s.run_id},
          {"model_id", s.model_id},
          {"eligible_scenarios", s.eligible_scenarios},
          {"existing_records", s.existing_records},
          {"new_records", s.new_records},
          {"new_failures", s.new_failures},
          {"truncated_bytes", s.truncated_bytes},
          {"interrupted", s.interrupted},
          {"incomplete_configs", s.incomplete_configs()},
          {"configs", configs}};
}

struct RunInputs {
  std::vector<PhasePlan> plans;
  Manifest manifest;
  AnnotationSchema schema;
  ModelEndpoint endpoint;
};

inline std::string make_record_id(int phase, const std::string &config_id, const std::string &subject,
                                  std::size_t position) {
  return "p" + std::to_string(phase) + ":" + config_id + ":" + subject + ":" + std::to_string(position);
}

/// Images for one query in the order the mode expects.
inline std::vector<ImageAttachment> attachments_for(const AssetBundle &assets) {
  std::vector<ImageAttachment> out;
  for (const auto &f : assets.files) out.push_back({f.mime, f.bytes});
  return out;
}

class ProtocolRunner {
public:
  explicit ProtocolRunner(VlmClient &client) : client_(client) {}

  RunSummary run(const RunInputs &in, RunStore &store, const RunOptions &opt) {
    RunSummary summary;
    summary.run_id = opt.run_id;
    summary.model_id = in.endpoint.model_id;
    summary.truncated_bytes = store.truncated_bytes();
    if (in.plans.empty()) throw PreconditionError("no phase plans to run");
    if (in.manifest.scenarios.empty()) throw PreconditionError("manifest has no scenarios");

    const auto phase_configs = expand_protocol(in.plans);
    auto extraction = extract_manifest(in.manifest, in.schema);
    std::map<std::string, GroundTruth> truths;
    std::vector<GroundTruth> pool;
    for (const auto &g : extraction.truths) {
      truths[g.scenario_id] = g;
      if ((opt.include_uncurated || !g.needs_curation) && !opt.excluded_scenarios.count(g.scenario_id))
        pool.push_back(g);
    }
    if (pool.empty()) throw PreconditionError("no eligible scenarios: every scenario needs curation or is excluded");
    summary.eligible_scenarios = pool.size();

    std::map<std::string, const ScenarioSource *> sources;
    for (const auto &s : in.manifest.scenarios) sources[s.scenario_id] = &s;

    // Existing records of this subject, by (phase, config) then position.
    std::map<std::pair<int, std::string>, std::map<std::size_t, bool>> done;
    for (const auto &r : store.records()) {
      if (r.subject_kind != SubjectKind::Model || r.subject_id != in.endpoint.model_id) continue;
      done[{r.phase, r.config.id()}][r.position] = !r.failed();
      ++summary.existing_records;
    }

    std::map<int, const PhasePlan *> plan_of;
    std::map<int, ScenarioSampler> samplers;
    for (const auto &p : in.plans) {
      if (plan_of.count(p.phase)) throw ConfigError("two plans for phase " + std::to_string(p.phase));
      plan_of[p.phase] = &p;
      samplers.try_emplace(p.phase, pool, p.seed, p.phase);
    }

    std::atomic<std::size_t> appended{0};
    for (const auto &pc : phase_configs) {
      const auto &plan = *plan_of.at(pc.phase);
      const auto &sampler = samplers.at(pc.phase);
      const std::string config_id = pc.config.id();
      const auto prompt = build_prompt(pc.config, in.schema);
      const std::size_t quota = static_cast<std::size_t>(plan.evaluations_per_config);
      const std::size_t failure_cap = opt.max_failures_per_config > 0
                                          ? static_cast<std::size_t>(opt.max_failures_per_config)
                                          : 3 * quota;

      auto &positions = done[{pc.phase, config_id}];
      ConfigProgress progress{pc.phase, config_id, 0, 0, false};
      for (const auto &[pos, ok] : positions) ++(ok ? progress.succeeded : progress.failed);

      std::size_t cursor = 0;
      while (progress.succeeded < quota && progress.failed < failure_cap && !summary.interrupted) {
        // Next unqueried positions; a batch never exceeds the answers still
        // needed nor the failures still tolerated.
        std::vector<std::size_t> batch;
        const std::size_t need = std::min(quota - progress.succeeded, failure_cap - progress.failed);
        while (batch.size() < need) {
          if (!positions.count(cursor)) batch.push_back(cursor);
          ++cursor;
        }
        std::vector<std::optional<EvaluationRecord>> results(batch.size());
        auto work = [&](std::size_t i) {
          if (opt.stop_after && appended.fetch_add(1) >= *opt.stop_after) return;
          const std::string &sid = sampler.at(batch[i]);
          results[i] = evaluate(in, pc, config_id, prompt, *sources.at(sid), truths.at(sid), batch[i], opt);
        };
        const std::size_t workers = static_cast<std::size_t>(std::max(1, opt.workers));
        for (std::size_t start = 0; start < batch.size(); start += workers) {
          std::vector<std::thread> threads;
          const std::size_t end = std::min(batch.size(), start + workers);
          if (end - start == 1) {
            work(start);
          } else {
            for (std::size_t i = start; i < end; ++i) threads.emplace_back(work, i);
            for (auto &t : threads) t.join();
          }
        }
        for (std::size_t i = 0; i < batch.size(); ++i) {
          if (!results[i]) {
            summary.interrupted = true;
            continue;
          }
          const auto &rec = *results[i];
          store.append(rec);
          positions[rec.position] = !rec.failed();
          ++summary.new_records;
          if (rec.failed()) {
            ++progress.failed;
            ++summary.new_failures;
          } else {
            ++progress.succeeded;
          }
        }
      }
      progress.complete = progress.succeeded >= quota;
      summary.configs.push_back(progress);
    }
    return summary;
  }

private:
  EvaluationRecord evaluate(const RunInputs &in, const PhaseConfig &pc, const std::string &config_id,
                            const PromptBundle &prompt, const ScenarioSource &source, const GroundTruth &truth,
                            std::size_t position, const RunOptions &opt) {
    EvaluationRecord r;
    r.record_id = make_record_id(pc.phase, config_id, in.endpoint.model_id, position);
    r.run_id = opt.run_id;
    r.phase = pc.phase;
    r.scenario_id = source.scenario_id;
    r.subject_kind = SubjectKind::Model;
    r.subject_id = in.endpoint.model_id;
    r.config = pc.config;
    r.view_mode = std::string(to_string(pc.config.mode));
    r.position = position;
    r.prompt = prompt;
    r.truth = truth;

    std::vector<ImageAttachment> images;
    const bool needs_images = in.endpoint.provider != ProviderKind::Mock || opt.assets_dir.has_value();
    if (needs_images) {
      try {
        auto assets = build_assets(source, pc.config, asset_kind_for(pc.config.mode));
        if (opt.assets_dir) write_assets(assets, *opt.assets_dir);
        images = attachments_for(assets);
      } catch (const VideoError &e) {
        r.outcome.transport = TransportStatus::AssetError;
        r.outcome.error = e.what();
        r.predicted = ParsedResponse{ParseStatus::Unparseable, std::nullopt, "", "no query: asset error"};
        r.timestamp = utc_timestamp();
        return r;
      }
    }
    QueryContext ctx{source.scenario_id, config_id, &in.schema, truth.key};
    r.outcome = client_.send(in.endpoint, prompt, images, ctx);
    r.latency_s = r.outcome.latency_s;
    r.predicted = r.outcome.ok() ? parse_response(r.outcome.raw_text, in.schema)
                                 : ParsedResponse{ParseStatus::Unparseable, std::nullopt, "",
                                                  "no response: " + std::string(to_string(r.outcome.transport))};
    r.timestamp = utc_timestamp();
    return r;
  }

  VlmClient &client_;
};

// Run directories -------------------------------------------------------------

/// run.json: everything needed to resume, without secrets.
struct RunManifestFile {
  std::string run_id;
  std::string created;
  std::string code_version = SCENEVAL_VERSION;
  std::vector<PhasePlan> plans;
  nlohmann::json schema;
  ModelEndpoint endpoint;
  std::string manifest_path;
  std::string manifest_sha256;
  RunOptions options;
};

inline void to_json(nlohmann::json &j, const RunManifestFile &m) {
  j = {{"run_id", m.run_id},
       {"created", m.created},
       {"code_version", m.code_version},
       {"plans", m.plans},
       {"schema", m.schema},
       {"endpoint", m.endpoint},
       {"manifest_path", m.manifest_path},
       {"manifest_sha256", m.manifest_sha256},
       {"options", m.options}};
}

inline void from_json(const nlohmann::json &j, RunManifestFile &m) {
  m.run_id = j.at("run_id").get<std::string>();
  m.created = j.value("created", std::string());
  m.code_version = j.value("code_version", std::string());
  m.plans = j.at("plans").get<std::vector<PhasePlan>>();
  m.schema = j.at("schema");
  m.endpoint = j.at("endpoint").get<ModelEndpoint>();
  m.manifest_path = j.at("manifest_path").get<std::string>();
  m.manifest_sha256 = j.value("manifest_sha256", std::string());
  m.options = j.value("options", nlohmann::json::object()).get<RunOptions>();
}

inline std::string file_sha256(const std::string &path) { return sha256_hex(read_file_bytes(path)); }

/// Creates run_dir with run.json (refusing to overwrite a different run) and
/// runs to completion or interruption.
inline RunSummary start_run(const std::filesystem::path &run_dir, const std::vector<PhasePlan> &plans,
                            const std::string &manifest_path, const AnnotationSchema &schema,
                            const ModelEndpoint &endpoint, RunOptions options, VlmClient &client) {
  std::filesystem::create_directories(run_dir);
  const auto manifest_file = run_dir / "run.json";
  if (std::filesystem::exists(manifest_file))
    throw ConfigError(run_dir.string() + " already holds a run; use resume");
  if (options.run_id == "run") options.run_id = run_dir.filename().string();
  RunManifestFile m;
  m.run_id = options.run_id;
  m.created = utc_timestamp();
  m.plans = plans;
  m.schema = schema_to_json(schema);
  m.endpoint = endpoint;
  m.manifest_path = std::filesystem::absolute(manifest_path).string();
  m.manifest_sha256 = file_sha256(manifest_path);
  m.options = options;
  std::ofstream(manifest_file) << nlohmann::json(m).dump(2) << "\n";

  RunStore store(run_dir / "records.jsonl");
  ProtocolRunner runner(client);
  return runner.run({plans, load_manifest(manifest_path), schema, endpoint}, store, options);
}

/// Continues the run in run_dir from its stored records.
inline RunSummary resume_run(const std::filesystem::path &run_dir, VlmClient &client,
                             std::optional<std::size_t> stop_after = std::nullopt) {
  std::ifstream in(run_dir / "run.json");
  if (!in) throw ConfigError("no run.json in " + run_dir.string());
  RunManifestFile m;
  try {
    m = nlohmann::json::parse(in).get<RunManifestFile>();
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("run.json: ") + e.what());
  }
  if (file_sha256(m.manifest_path) != m.manifest_sha256)
    throw ConfigError("scenario manifest " + m.manifest_path + " changed since the run started");
  auto options = m.options;
  options.stop_after = stop_after;
  RunStore store(run_dir / "records.jsonl");
  ProtocolRunner runner(client);
  return runner.run({m.plans, load_manifest(m.manifest_path), schema_from_json(m.schema), m.endpoint}, store,
                    options);
}

} // namespace sceneval
