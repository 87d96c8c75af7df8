// sceneval: command-line front end.
//
//   generate     sample frames and write collage / frame / GIF assets
//   annotate     derive ground-truth answer keys from captions
//   run          evaluate phase plans against a model endpoint
//   resume       continue an interrupted run
//   report       score runs and human exports per subject
//   sensitivity  one-way ANOVA of scores along a configuration dimension
//   serve        human evaluation service

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sceneval/sceneval.hpp"

namespace fs = std::filesystem;
using namespace sceneval;
using nlohmann::json;

namespace {

AnnotationSchema schema_or_default(const std::string &path) {
  return path.empty() ? default_covla_schema() : load_schema(path);
}

Manifest load_manifest_checked(const std::string &path) {
  auto m = load_manifest(path);
  for (const auto &e : m.errors) std::cerr << path << ":" << e.line << ": skipped: " << e.message << "\n";
  return m;
}

void write_json(const std::string &path, const json &j) {
  if (path.empty() || path == "-") {
    std::cout << j.dump(2) << "\n";
    return;
  }
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write " + path);
  out << j.dump(2) << "\n";
}

/// Rows x cols layout for n frames closest to square, rows <= cols.
GridLayout squarest_grid(int n) {
  GridLayout best{1, n};
  for (const auto &g : enumerate_grids(n))
    if (g.rows <= g.cols) best = g;
  return best;
}

/// A registry file plus --model, a single endpoint file, or "mock".
ModelEndpoint resolve_endpoint(const std::string &spec, const std::string &model) {
  if (spec == "mock") {
    MockProfile p;
    return mock_model(p, model.empty() ? "mock" : model);
  }
  std::ifstream in(spec);
  if (!in) throw ConfigError("cannot open endpoint file " + spec);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error &e) {
    throw ConfigError(spec + ": " + e.what());
  }
  if (j.contains("endpoints")) {
    auto reg = registry_from_json(j);
    if (!model.empty()) return reg.get(model);
    if (reg.endpoints.size() == 1) return reg.endpoints.front();
    throw ConfigError(spec + " lists several endpoints; choose one with --model");
  }
  try {
    auto e = j.get<ModelEndpoint>();
    e.validate();
    return e;
  } catch (const json::exception &e) {
    throw ConfigError(spec + ": " + e.what());
  }
}

void print_run_summary(const RunSummary &s) {
  std::cerr << s.run_id << ": " << s.new_records << " new records (" << s.new_failures << " failed), "
            << s.existing_records << " already stored, " << s.eligible_scenarios << " eligible scenarios";
  if (s.truncated_bytes) std::cerr << ", dropped a " << s.truncated_bytes << "-byte partial line";
  std::cerr << "\n";
  if (s.interrupted) std::cerr << "stopped early; continue with `sceneval resume`\n";
  else if (auto n = s.incomplete_configs()) std::cerr << n << " configurations gave up after repeated failures\n";
  std::cout << summary_to_json(s).dump(2) << "\n";
}

/// The built-in phase whose plan varies d.
int phase_varying(Dimension d) {
  for (const auto &p : default_plans())
    if (p.dimension == d) return p.phase;
  return 0;
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Sequential-scene evaluation harness for vision-language models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(SCENEVAL_VERSION));

  // generate ------------------------------------------------------------------
  auto *gen = app.add_subcommand("generate", "Sample frames and write assets with sidecars");
  std::string g_manifest, g_out = "assets", g_grid, g_mode = "collage";
  int g_interval = 200, g_frames = 4, g_level = 1;
  std::uint64_t g_seed = 0;
  std::size_t g_limit = 0;
  gen->add_option("--manifest", g_manifest, "Scenario manifest (JSONL)")->required();
  gen->add_option("--interval", g_interval, "Sampling interval in ms (100..1000, multiple of 100)");
  gen->add_option("--frames", g_frames, "Frames per scenario (1..10)");
  gen->add_option("--resolution-level", g_level, "Per-frame resolution level (1..6)");
  gen->add_option("--grid", g_grid, "Collage grid RxC (default: closest to square)");
  gen->add_option("--mode", g_mode, "collage, separate, batch, gif or video");
  gen->add_option("--out-dir", g_out, "Output directory");
  gen->add_option("--seed", g_seed, "Seed for choosing scenarios when --limit is set");
  gen->add_option("--limit", g_limit, "Only this many scenarios, chosen with --seed (0 = all)");

  // annotate ------------------------------------------------------------------
  auto *ann = app.add_subcommand("annotate", "Derive ground-truth answer keys from captions");
  std::string a_manifest, a_schema, a_out = "-", a_report;
  ann->add_option("--manifest", a_manifest, "Scenario manifest (JSONL)")->required();
  ann->add_option("--schema", a_schema, "Annotation schema JSON (default: built-in CoVLA schema)");
  ann->add_option("--out", a_out, "Ground-truth JSONL ('-' for stdout)");
  ann->add_option("--report", a_report, "Summary JSON");

  // run -----------------------------------------------------------------------
  auto *run = app.add_subcommand("run", "Evaluate phase plans against a model endpoint");
  std::vector<std::string> r_plans;
  std::vector<int> r_phases;
  std::string r_manifest, r_schema, r_endpoint = "mock", r_model, r_out = "runs", r_run_id, r_assets;
  int r_evaluations = 0, r_workers = 1, r_max_failures = 0;
  std::optional<std::uint64_t> r_seed;
  std::optional<std::size_t> r_stop_after;
  bool r_uncurated = false;
  run->add_option("--phase", r_phases, "Built-in phase plan(s) 1..5; repeatable");
  run->add_option("--plan", r_plans, "Phase plan JSON file(s); repeatable");
  run->add_option("--manifest", r_manifest, "Scenario manifest (JSONL)")->required();
  run->add_option("--schema", r_schema, "Annotation schema JSON (default: built-in)");
  run->add_option("--endpoint", r_endpoint, "Endpoint JSON, registry JSON, or 'mock'");
  run->add_option("--model", r_model, "model_id to pick from a registry");
  run->add_option("--out", r_out, "Directory holding run directories");
  run->add_option("--run-id", r_run_id, "Run directory name (default: model_id)");
  run->add_option("--evaluations", r_evaluations, "Override evaluations per configuration");
  run->add_option("--seed", r_seed, "Override every plan's scenario seed");
  run->add_option("--workers", r_workers, "Concurrent queries");
  run->add_option("--max-failures", r_max_failures, "Failed queries tolerated per configuration");
  run->add_option("--stop-after", r_stop_after, "Stop after this many new records");
  run->add_option("--assets-dir", r_assets, "Also write generated assets here");
  run->add_flag("--include-uncurated", r_uncurated, "Sample scenarios whose ground truth needs curation");

  // resume --------------------------------------------------------------------
  auto *res = app.add_subcommand("resume", "Continue an interrupted run");
  std::string s_dir;
  std::optional<std::size_t> s_stop_after;
  res->add_option("--run-dir", s_dir, "Run directory containing run.json")->required();
  res->add_option("--stop-after", s_stop_after, "Stop after this many new records");

  // report --------------------------------------------------------------------
  auto *rep = app.add_subcommand("report", "Score runs and human exports per subject");
  std::vector<std::string> p_runs;
  std::string p_out = "-", p_csv, p_schema;
  std::vector<double> p_weights;
  bool p_strict = false;
  std::optional<int> p_phase;
  rep->add_option("--runs", p_runs, "Run directories or record files")->required();
  rep->add_option("--out", p_out, "Report JSON ('-' for stdout)");
  rep->add_option("--csv", p_csv, "Also write the summary table as CSV");
  rep->add_option("--schema", p_schema, "Schema when no run.json is present");
  rep->add_option("--weights", p_weights, "Category weights (normalized)")->delimiter(',');
  rep->add_option("--phase", p_phase, "Only records of this phase");
  rep->add_flag("--strict", p_strict, "Count refusals and unparseable answers as wrong");

  // sensitivity ---------------------------------------------------------------
  auto *sen = app.add_subcommand("sensitivity", "ANOVA of per-record scores along one dimension");
  std::vector<std::string> n_runs;
  std::string n_dimension, n_out = "-", n_subject;
  int n_phase = -1;
  sen->add_option("--runs", n_runs, "Run directories or record files")->required();
  sen->add_option("--dimension", n_dimension, "resolution, frames, interval, grid or mode")->required();
  sen->add_option("--phase", n_phase, "Phase to analyze (default: the phase varying the dimension; 0 = all)");
  sen->add_option("--subject", n_subject, "Only this model or evaluator");
  sen->add_option("--out", n_out, "Output JSON ('-' for stdout)");

  // serve ---------------------------------------------------------------------
  auto *srv = app.add_subcommand("serve", "Run the human evaluation service");
  std::string v_plan, v_schema, v_manifest, v_assets, v_data = "human", v_host = "127.0.0.1", v_static;
  int v_port = 8080;
  bool v_uncurated = false;
  srv->add_option("--plan", v_plan, "Default session plan JSON");
  srv->add_option("--schema", v_schema, "Annotation schema JSON (default: built-in)");
  srv->add_option("--manifest", v_manifest, "Scenario manifest (JSONL)")->required();
  srv->add_option("--assets", v_assets, "Also write generated assets here");
  srv->add_option("--data", v_data, "Directory for sessions, answers and curation flags");
  srv->add_option("--host", v_host, "Listen address");
  srv->add_option("--port", v_port, "Listen port");
  srv->add_option("--static", v_static, "UI bundle directory, served under /ui");
  srv->add_flag("--include-uncurated", v_uncurated, "Offer scenarios whose ground truth needs curation");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      const auto manifest = load_manifest_checked(g_manifest);
      SamplingConfig c;
      c.interval_ms = g_interval;
      c.frame_count = g_frames;
      c.resolution = Resolution::from_level(g_level);
      c.grid = g_grid.empty() ? squarest_grid(g_frames) : GridLayout::parse(g_grid);
      AssetKind kind = AssetKind::Collage;
      if (g_mode == "gif" || g_mode == "video") {
        kind = parse_asset_kind(g_mode);
      } else {
        c.mode = parse_presentation_mode(g_mode);
        kind = asset_kind_for(c.mode);
      }
      c.validate();
      std::vector<const ScenarioSource *> chosen;
      for (const auto &s : manifest.scenarios) chosen.push_back(&s);
      if (g_limit && g_limit < chosen.size()) {
        auto rng = SeededRng::derive(g_seed, "generate");
        rng.shuffle(chosen);
        chosen.resize(g_limit);
      }
      std::size_t written = 0, failed = 0;
      for (const auto *s : chosen) {
        try {
          write_assets(build_assets(*s, c, kind), g_out);
          ++written;
        } catch (const VideoError &e) {
          ++failed;
          std::cerr << s->scenario_id << ": " << e.what() << "\n";
        }
      }
      std::cerr << written << " assets written to " << g_out << ", " << failed << " scenarios skipped\n";
      return failed && !written ? 1 : 0;
    }

    if (*ann) {
      const auto schema = schema_or_default(a_schema);
      const auto manifest = load_manifest_checked(a_manifest);
      auto result = extract_manifest(manifest, schema);
      std::ostringstream lines;
      for (const auto &g : result.truths) lines << json(g).dump() << "\n";
      if (a_out == "-") {
        std::cout << lines.str();
      } else {
        std::ofstream(a_out) << lines.str();
      }
      if (!a_report.empty()) write_json(a_report, summary_to_json(result.summary, schema));
      std::cerr << result.summary.scenarios << " scenarios, " << result.summary.needs_curation
                << " need curation, " << result.summary.distinct_keys() << " distinct keys\n";
      return 0;
    }

    if (*run) {
      std::vector<PhasePlan> plans;
      for (int p : r_phases) {
        if (p < 1 || p > 5) throw ConfigError("--phase must be in 1..5");
        plans.push_back(default_plans()[static_cast<std::size_t>(p - 1)]);
      }
      for (const auto &path : r_plans) plans.push_back(load_plan(path));
      if (plans.empty()) throw ConfigError("give at least one --phase or --plan");
      for (auto &p : plans) {
        if (r_evaluations > 0) p.evaluations_per_config = r_evaluations;
        if (r_seed) p.seed = *r_seed;
      }
      const auto schema = schema_or_default(r_schema);
      const auto endpoint = resolve_endpoint(r_endpoint, r_model);
      RunOptions opt;
      opt.include_uncurated = r_uncurated;
      opt.workers = r_workers;
      opt.max_failures_per_config = r_max_failures;
      opt.stop_after = r_stop_after;
      if (!r_assets.empty()) opt.assets_dir = r_assets;
      opt.run_id = r_run_id.empty() ? safe_file_stem(endpoint.model_id) : r_run_id;
      VlmClient client(std::make_shared<HttpTransport>());
      auto summary = start_run(fs::path(r_out) / opt.run_id, plans, r_manifest, schema, endpoint, opt, client);
      print_run_summary(summary);
      return 0;
    }

    if (*res) {
      VlmClient client(std::make_shared<HttpTransport>());
      print_run_summary(resume_run(s_dir, client, s_stop_after));
      return 0;
    }

    if (*rep) {
      std::vector<fs::path> inputs(p_runs.begin(), p_runs.end());
      auto set = load_record_set(inputs);
      const auto schema = set.schema ? *set.schema : schema_or_default(p_schema);
      std::vector<EvaluationRecord> records;
      for (auto &r : set.records)
        if (!p_phase || r.phase == *p_phase) records.push_back(std::move(r));
      const auto weights = p_weights.empty() ? ScoreWeights::equal(schema.size()) : ScoreWeights(p_weights);
      const auto reports = reports_by_subject(records, schema, weights, {p_strict});
      const auto table = metrics_table(reports, schema);
      std::map<std::string, double> model_acc;
      for (const auto &r : reports)
        if (r.subject_kind == SubjectKind::Model) model_acc[r.subject_id] = r.accuracy;
      json files = json::array();
      for (const auto &f : set.files) files.push_back(f.string());
      json out = {{"metadata",
                   {{"schema_id", schema.schema_id()},
                    {"averaging", "macro"},
                    {"strict", p_strict},
                    {"weights", weights.alpha()},
                    {"records", records.size()},
                    {"files", files}}},
                  {"reports", reports},
                  {"table", render_json(table)},
                  {"families", family_stats(model_acc, set.families)}};
      write_json(p_out, out);
      if (!p_csv.empty()) std::ofstream(p_csv) << render_csv(table);
      std::cerr << render_text(table);
      return 0;
    }

    if (*sen) {
      const auto dim = parse_dimension(n_dimension);
      if (n_phase < 0) n_phase = phase_varying(dim);
      std::vector<fs::path> inputs(n_runs.begin(), n_runs.end());
      auto set = load_record_set(inputs);
      std::map<std::string, std::vector<EvaluationRecord>> by_subject;
      for (auto &r : set.records) {
        if (n_phase > 0 && r.phase != n_phase) continue;
        if (!n_subject.empty() && r.subject_id != n_subject) continue;
        by_subject[r.subject_id].push_back(std::move(r));
      }
      if (by_subject.empty()) throw PreconditionError("no records match the requested phase and subject");
      json analyses = json::array();
      for (const auto &[subject, rs] : by_subject) {
        json entry = {{"subject_id", subject}, {"phase", n_phase}};
        try {
          entry["anova"] = sensitivity(rs, dim);
          entry["distribution"] = box_summaries(group_scores(rs, dim));
          const auto &s = entry["anova"];
          std::cerr << subject << ": F=" << s["f"].dump() << " p=" << s["p"].get<double>()
                    << " eta^2=" << s["eta_squared"].get<double>() << "\n";
        } catch (const PreconditionError &e) {
          entry["error"] = e.what();
          std::cerr << subject << ": " << e.what() << "\n";
        }
        analyses.push_back(entry);
      }
      write_json(n_out, {{"dimension", to_string(dim)}, {"analyses", analyses}});
      return 0;
    }

    if (*srv) {
      ServiceOptions opt;
      opt.manifest = load_manifest_checked(v_manifest);
      opt.schema = schema_or_default(v_schema);
      opt.data_dir = v_data;
      if (!v_assets.empty()) opt.assets_dir = v_assets;
      if (!v_plan.empty()) opt.default_plan = load_session_plan(v_plan);
      opt.include_uncurated = v_uncurated;
      BaselineService service(std::move(opt));
      httplib::Server server;
      install_routes(server, service, v_static.empty() ? std::nullopt : std::optional<fs::path>(v_static));
      std::cerr << "listening on http://" << v_host << ":" << v_port << "\n";
      if (!server.listen(v_host, v_port)) throw ConfigError("cannot listen on " + v_host + ":" + std::to_string(v_port));
      return 0;
    }
  } catch (const PreconditionError &e) {
    std::cerr << "precondition failed: " << e.what() << "\n";
    return 3;
  } catch (const StoreCorruption &e) {
    std::cerr << "store corruption: " << e.what() << "\n";
    return 4;
  } catch (const std::exception &e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
