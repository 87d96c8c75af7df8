// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sceneval/sceneval.hpp"

#include "oracles.hpp"

using namespace sceneval;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kSource = SCENEVAL_SOURCE_DIR;
const std::string kCaptions = kSource + "/tests/fixtures/captions.jsonl";
const std::string kResponses = kSource + "/tests/fixtures/responses.jsonl";

/// Collects failed expectations; the criterion passes when none failed.
class Check {
public:
  void expect(bool ok, const std::string &what) {
    if (ok) return;
    ++failures_;
    if (failures_ <= 5) messages_.push_back(what);
  }
  void note(const std::string &s) { notes_.push_back(s); }
  bool passed() const { return failures_ == 0; }
  std::string detail() const {
    std::ostringstream out;
    const auto &lines = passed() ? notes_ : messages_;
    for (std::size_t i = 0; i < lines.size(); ++i) out << (i ? "; " : "") << lines[i];
    if (failures_ > 5) out << "; +" << failures_ - 5 << " more";
    return out.str();
  }

private:
  std::size_t failures_ = 0;
  std::vector<std::string> messages_, notes_;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 3) {
  std::ostringstream o;
  o.precision(digits);
  o << std::fixed << v;
  return o.str();
}

fs::path scratch(const std::string &name) {
  auto d = fs::temp_directory_path() / "sceneval_acceptance" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

PhasePlan plan_for(int phase) { return default_plans()[static_cast<std::size_t>(phase - 1)]; }

std::map<std::string, std::string> canonical(const std::vector<EvaluationRecord> &records) {
  std::map<std::string, std::string> out;
  for (const auto &r : records) {
    auto j = json(r);
    j.erase("timestamp");
    out[r.record_id] = j.dump();
  }
  return out;
}

std::vector<json> read_jsonl(const std::string &path) {
  std::ifstream in(path);
  std::vector<json> out;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(json::parse(line));
  return out;
}

// ---------------------------------------------------------------------------

void grid_law(Check &c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t oracle_total = 0, total = 0;
  for (int n = 1; n <= 10; ++n) {
    const auto expected = oracle::brute_force_layouts(n);
    oracle_total += expected.size();
    std::set<std::pair<int, int>> got;
    for (auto g : enumerate_grids(n)) got.insert({g.rows, g.cols});
    c.expect(got == expected, "N=" + std::to_string(n) + " layouts differ from the divisor oracle");
    total += enumerate_grids(n).size();
  }
  c.expect(total == 27 && oracle_total == 27, "total " + std::to_string(total) + ", oracle " +
                                                  std::to_string(oracle_total));
  c.expect(enumerate_all_grids().size() == 27, "enumerate_all_grids size");
  c.expect(enumerate_grids(6) == std::vector<GridLayout>{{1, 6}, {2, 3}, {3, 2}, {6, 1}}, "N=6 set");
  const double s = seconds_since(t0);
  c.expect(s < 1.0, "runtime " + fmt(s) + " s");
  c.note("27 layouts, N=6 {1x6,2x3,3x2,6x1}, " + fmt(s, 4) + " s");
}

void collage_exactness(Check &c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::size_t composites = 0;
  for (int n = 1; n <= SamplingConfig::kMaxFrames; ++n) {
    std::vector<Image> frames;
    std::vector<Rgb> colors;
    for (int k = 0; k < n; ++k) {
      colors.push_back({std::uint8_t(25 * k + 3), std::uint8_t(250 - 23 * k), std::uint8_t((97 * k) % 256)});
      frames.emplace_back(1280, 720, colors.back());
    }
    for (auto g : enumerate_grids(n)) {
      for (int level = Resolution::kMinLevel; level <= Resolution::kMaxLevel; ++level) {
        const auto res = Resolution::from_level(level);
        const SamplingConfig cfg{200, n, res, g, PresentationMode::Collage};
        const auto col = compose_collage(frames, cfg);
        const std::string tag = std::to_string(n) + "@" + g.to_string() + "/L" + std::to_string(level);
        c.expect(col.image.width() == g.cols * res.width && col.image.height() == g.rows * res.height,
                 tag + " size " + std::to_string(col.image.width()) + "x" + std::to_string(col.image.height()));
        std::int64_t area = 0;
        for (int k = 0; k < n; ++k) {
          const auto &b = col.tile_boxes[static_cast<std::size_t>(k)];
          area += std::int64_t{b.w} * b.h;
          c.expect(col.image.crop(b) == Image(res.width, res.height, colors[static_cast<std::size_t>(k)]),
                   tag + " tile " + std::to_string(k) + " not pixel-identical");
        }
        c.expect(area == std::int64_t{col.image.width()} * col.image.height(), tag + " tiles leave gaps");
        ++composites;
      }
    }
  }
  const double s = seconds_since(t0);
  c.expect(composites == 27 * 6, "composites " + std::to_string(composites));
  c.expect(s < 30.0, "runtime " + fmt(s) + " s");
  c.note(std::to_string(composites) + " composites exact, " + fmt(s, 2) + " s");
}

void annotation_oracle(Check &c) {
  const auto schema = default_covla_schema();
  const auto gt = extract("The ego vehicle is moving straight at a high speed", schema);
  c.expect(gt.key.str() == "AABACBB", "worked example gave " + gt.key.str());
  const auto fixtures = read_jsonl(kCaptions);
  std::size_t matched = 0;
  for (const auto &f : fixtures) {
    const auto key = extract(f.at("caption").get<std::string>(), schema).key.str();
    const bool ok = key == f.at("expected_key").get<std::string>();
    matched += ok;
    c.expect(ok, f.at("scenario_id").get<std::string>() + " gave " + key);
  }
  c.expect(fixtures.size() >= 20, "only " + std::to_string(fixtures.size()) + " fixture captions");
  c.note("AABACBB; " + std::to_string(matched) + "/" + std::to_string(fixtures.size()) + " captions match");
}

void response_parsing(Check &c) {
  const auto schema = default_covla_schema();
  const auto fixtures = read_jsonl(kResponses);
  std::set<std::string> statuses;
  std::size_t matched = 0;
  bool saw_duplicate = false, saw_empty = false, saw_lowercase = false;
  for (const auto &f : fixtures) {
    const std::string text = f.at("text");
    const auto p = parse_response(text, schema);
    bool ok = to_string(p.status) == f.at("status").get<std::string>();
    if (f.at("key").is_string()) ok = ok && p.key && p.key->str() == f.at("key").get<std::string>();
    else ok = ok && !p.key;
    matched += ok;
    c.expect(ok, "mislabeled: " + text.substr(0, 40));
    statuses.insert(f.at("status").get<std::string>());
    saw_empty |= text.empty();
    saw_lowercase |= f.at("status") == "parsed" && std::regex_search(text, std::regex(R"(\d[.)]\s*[a-e]\b)"));
    if (text.find("Initial guess") != std::string::npos) {
      saw_duplicate = true;
      c.expect(p.key && p.key->str() == "CAAAAAA", "duplicated-key fixture did not take the last complete key");
    }
  }
  c.expect(fixtures.size() >= 10, "only " + std::to_string(fixtures.size()) + " fixtures");
  c.expect(saw_duplicate && saw_empty && saw_lowercase, "fixture corpus lacks a duplicated, empty or lowercase case");
  c.expect(statuses.count("refusal") && statuses.count("unparseable") && statuses.count("parsed"),
           "fixture corpus lacks a status class");
  c.note(std::to_string(matched) + "/" + std::to_string(fixtures.size()) + " responses; last key CAAAAAA");
}

void metric_oracle(Check &c) {
  const auto &schema = oracle::schema();
  const auto rs = oracle::synthetic_records(1000, 2025);
  const auto m = score(rs, schema);
  double worst = 0.0;
  auto near = [&](double a, double b, const std::string &what) {
    worst = std::max(worst, std::abs(a - b));
    c.expect(std::abs(a - b) <= 1e-12, what + " off by " + std::to_string(a - b));
  };
  double acc_sum = 0.0;
  for (std::size_t i = 0; i < schema.size(); ++i) {
    const auto o = oracle::oracle_category(rs, i);
    const auto &got = m.categories[i];
    const auto &name = schema.category(i).name;
    near(got.accuracy, o.accuracy, name + " accuracy");
    near(got.precision, o.precision, name + " precision");
    near(got.recall, o.recall, name + " recall");
    near(got.f1, o.f1, name + " f1");
    acc_sum += o.accuracy;
  }
  near(m.score, acc_sum / static_cast<double>(schema.size()), "score");
  double mean = 0.0;
  for (const auto &cat : m.categories) mean += cat.accuracy;
  mean /= static_cast<double>(m.categories.size());
  c.expect(m.score == mean, "equal-weight score is not exactly the mean of category accuracies");
  std::ostringstream dev;
  dev << std::scientific << std::setprecision(1) << worst;
  c.note("1000 records, max deviation " + dev.str() + ", score == mean exactly");
}

void statistics_oracle(Check &c) {
  // Means 0.3, 0.6, 0.8; grand mean 17/30. SS_between = 19/30, SS_within = 3/10.
  const auto r = one_way_anova({{"a", {0.2, 0.4, 0.3, 0.5, 0.1}},
                                {"b", {0.6, 0.5, 0.7, 0.8, 0.4}},
                                {"c", {0.9, 0.7, 0.8, 1.0, 0.6}}},
                               "fixture");
  c.expect(std::abs(r.ss_between - 19.0 / 30.0) <= 1e-9, "SS_between " + std::to_string(r.ss_between));
  c.expect(std::abs(r.ss_within - 0.3) <= 1e-9, "SS_within " + std::to_string(r.ss_within));
  c.expect(std::abs(r.eta_squared - 19.0 / 28.0) <= 1e-9, "eta^2 " + std::to_string(r.eta_squared));
  // Dyadic values keep every mean exactly 0.5.
  const auto equal = one_way_anova({{"a", {0.25, 0.75}}, {"b", {0.5, 0.5, 0.5}}, {"c", {0.375, 0.625}}}, "equal");
  c.expect(equal.eta_squared == 0.0, "equal means eta^2 " + std::to_string(equal.eta_squared));
  const auto split = one_way_anova({{"a", {0.2, 0.2}}, {"b", {0.8, 0.8, 0.8}}}, "split");
  c.expect(split.eta_squared == 1.0, "zero within variance eta^2 " + std::to_string(split.eta_squared));
  double prev = 2.0;
  std::size_t steps = 0;
  for (double f = 0.0; f <= 60.0; f += 0.25, ++steps) {
    const double p = f_survival(f, 4, 45);
    c.expect(p < prev || (p == 0.0 && prev == 0.0), "p not decreasing at F=" + std::to_string(f));
    prev = p;
  }
  c.note("SS 19/30 and 0.3, eta^2 19/28, 0 and 1; p monotone over " + std::to_string(steps) + " F values");
}

void protocol_expansion(Check &c) {
  const std::size_t expected[] = {6, 20, 20, 54, 6};
  for (int phase = 1; phase <= 5; ++phase) {
    const auto plan = plan_for(phase);
    const auto n = expand_phase(plan).size();
    c.expect(n == expected[phase - 1], "phase " + std::to_string(phase) + " expands to " + std::to_string(n));
    c.expect(plan.evaluations_per_config == 10, "phase " + std::to_string(phase) + " evaluations");
  }

  VlmClient client;
  MockProfile profile;
  profile.seed = 3;
  profile.default_accuracy = 0.6;
  const auto endpoint = mock_model(profile, "mock-accept");

  // Both runs share a run id so their records are comparable field by field.
  RunOptions plain;
  plain.run_id = "phase1";
  const auto whole = scratch("phase1-whole");
  start_run(whole, {plan_for(1)}, kCaptions, default_covla_schema(), endpoint, plain, client);
  const auto full = read_records(whole / "records.jsonl").records;
  c.expect(full.size() == 60, "phase 1 run emitted " + std::to_string(full.size()));

  const auto cut = scratch("phase1-resumed");
  RunOptions stop = plain;
  stop.stop_after = 37;
  const auto first = start_run(cut, {plan_for(1)}, kCaptions, default_covla_schema(), endpoint, stop, client);
  c.expect(first.interrupted && first.new_records == 37, "interruption left " + std::to_string(first.new_records));
  resume_run(cut, client);
  const auto resumed = read_records(cut / "records.jsonl").records;
  std::set<std::string> ids;
  for (const auto &r : resumed) ids.insert(r.record_id);
  c.expect(resumed.size() == 60 && ids.size() == 60,
           "resume gave " + std::to_string(resumed.size()) + " records, " + std::to_string(ids.size()) + " distinct");
  c.expect(canonical(resumed) == canonical(full), "resumed run differs from the uninterrupted run");
  c.note("6/20/20/54/6 at 10 per config; 60 records; 37 + resume = 60 distinct");
}

void end_to_end_recovery(Check &c) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::map<std::string, double> planted = {{"motion_state", 0.9},  {"direction", 0.75}, {"velocity", 0.6},
                                                 {"following", 0.5},     {"acceleration", 0.1},
                                                 {"traffic_light", 0.3}, {"curvature", 0.8}};
  MockProfile profile;
  profile.seed = 2025;
  profile.category_accuracy = planted;
  profile.latency_s = 2.0;
  profile.latency_jitter_s = 0.5;
  const auto endpoint = mock_model(profile, "mock-planted");
  const auto schema = default_covla_schema();

  auto run_once = [&](const std::string &name) {
    const auto dir = scratch(name);
    VlmClient client;
    RunOptions opt;
    opt.workers = 2;
    opt.run_id = "e2e";
    start_run(dir, default_plans(), kCaptions, schema, endpoint, opt, client);
    auto set = load_record_set({dir});
    auto report = score(set.records, *set.schema);
    return std::make_pair(set.records, report);
  };
  const auto [records, report] = run_once("e2e-a");
  const auto [again, report_again] = run_once("e2e-b");

  c.expect(records.size() == 1060, "records " + std::to_string(records.size()));
  double worst = 0.0;
  std::string detail;
  for (const auto &cat : report.categories) {
    const double want = planted.at(cat.name);
    c.expect(cat.counted >= 400, cat.name + " only " + std::to_string(cat.counted) + " records");
    const double err = std::abs(cat.accuracy - want);
    worst = std::max(worst, err);
    c.expect(err <= 0.05, cat.name + " recovered " + fmt(cat.accuracy) + " for planted " + fmt(want, 2));
    detail += (detail.empty() ? "" : " ") + cat.short_name + "=" + fmt(cat.accuracy);
  }
  c.expect(canonical(records) == canonical(again), "records differ between seeded runs");
  c.expect(json(report).dump() == json(report_again).dump(), "metrics differ between seeded runs");
  const double s = seconds_since(t0);
  c.expect(s < 300.0, "runtime " + fmt(s, 1) + " s");
  c.note(std::to_string(records.size()) + " records/category; " + detail + "; max error " + fmt(worst) +
         "; rerun identical; " + fmt(s, 1) + " s for two runs");
}

void human_model_symmetry(Check &c) {
  const auto dir = scratch("symmetry");
  const auto schema = default_covla_schema();

  // Model side: a Phase 1 mock run.
  VlmClient vlm;
  MockProfile profile;
  profile.seed = 5;
  profile.default_accuracy = 0.7;
  start_run(dir / "runs" / "mock", {plan_for(1)}, kCaptions, schema, mock_model(profile, "mock-model"), {}, vlm);

  // Human side: two scripted evaluators over HTTP. One reads the captions to
  // answer perfectly, the other always answers the same key.
  std::map<std::string, std::string> truth;
  for (const auto &f : read_jsonl(kCaptions)) truth[f.at("scenario_id")] = f.at("expected_key");
  BaselineService service(
      ServiceOptions{load_manifest(kCaptions), schema, dir / "service", std::nullopt, std::nullopt, false});
  BackgroundServer server(service);
  httplib::Client http("127.0.0.1", server.port());

  json configs = json::array();
  for (const auto &cfg : expand_phase(plan_for(1)))
    if (cfg.resolution.level <= 2) configs.push_back(cfg);
  const json plan = {{"configs", configs}};
  std::size_t answered = 0;
  for (const std::string evaluator : {"oracle-human", "fixed-human"}) {
    auto created = http.Post("/sessions", json{{"evaluator_id", evaluator}, {"mode", "collage"}, {"plan", plan}}.dump(),
                             "application/json");
    if (!created || created->status != 201) {
      c.expect(false, "session creation failed for " + evaluator);
      return;
    }
    const std::string sid = json::parse(created->body).at("session_id");
    for (;;) {
      auto next = http.Get("/sessions/" + sid + "/next");
      if (!next || next->status != 200) {
        c.expect(false, "next failed");
        return;
      }
      const auto item = json::parse(next->body);
      if (item.at("status") == "complete") break;
      const std::string key = evaluator == "oracle-human" ? truth.at(item.at("scenario_id")) : "AABACBB";
      auto res = http.Post("/sessions/" + sid + "/answers",
                           json{{"index", item.at("index")}, {"key", key}, {"view_duration_s", 4.25}}.dump(),
                           "application/json");
      c.expect(res && res->status == 200, "answer rejected");
      ++answered;
    }
  }
  auto exported = http.Get("/export");
  if (!exported || exported->status != 200) {
    c.expect(false, "export failed");
    return;
  }
  fs::create_directories(dir / "humans");
  std::ofstream(dir / "humans" / "export.jsonl") << exported->body;

  // The export goes to the metrics side byte for byte.
  const auto set = load_record_set({dir / "runs", dir / "humans" / "export.jsonl"});
  std::size_t humans = 0, models = 0;
  std::map<std::string, json> exported_lines;
  for (const auto &j : read_jsonl((dir / "humans" / "export.jsonl").string()))
    if (j.contains("record_id")) exported_lines[j.at("record_id")] = j;
  for (const auto &r : set.records) {
    if (r.subject_kind == SubjectKind::Human) {
      ++humans;
      c.expect(exported_lines.count(r.record_id) && json(r) == exported_lines.at(r.record_id),
               "human record " + r.record_id + " changed on load");
    } else {
      ++models;
    }
  }
  c.expect(humans == answered && models == 60,
           "loaded " + std::to_string(humans) + " human and " + std::to_string(models) + " model records");
  c.expect(set.schema.has_value(), "schema not recovered from run.json");

  const auto reports = reports_by_subject(set.records, set.schema.value_or(schema), ScoreWeights::equal(schema.size()));
  const auto table = metrics_table(reports, schema);
  std::vector<std::string> subjects;
  for (const auto &row : table.rows) {
    subjects.push_back(row.at(0).get<std::string>());
    c.expect(row.size() == table.headers.size(), "ragged row for " + subjects.back());
  }
  c.expect(subjects == std::vector<std::string>{"mock-model", "fixed-human", "oracle-human"},
           "table rows out of order or missing");
  c.expect(table.headers.size() == 5 + schema.size() + 1, "table has " + std::to_string(table.headers.size()) +
                                                              " columns");
  for (const auto &r : reports)
    if (r.subject_id == "oracle-human") c.expect(r.score == 1.0, "perfect evaluator scored " + fmt(r.score));
  c.note(std::to_string(answered) + " human answers via HTTP + 60 model records in one " +
         std::to_string(table.headers.size()) + "-column table");
}

} // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check &)>>> criteria = {
      {"grid-law", grid_law},
      {"collage-exactness", collage_exactness},
      {"annotation-oracle", annotation_oracle},
      {"response-parsing", response_parsing},
      {"metric-oracle", metric_oracle},
      {"statistics-oracle", statistics_oracle},
      {"protocol-expansion", protocol_expansion},
      {"end-to-end-recovery", end_to_end_recovery},
      {"human-model-symmetry", human_model_symmetry},
  };
  int failed = 0;
  for (const auto &[name, run] : criteria) {
    Check c;
    try {
      run(c);
    } catch (const std::exception &e) {
      c.expect(false, std::string("threw: ") + e.what());
    }
    std::cout << (c.passed() ? "PASS " : "FAIL ") << name << ": " << c.detail() << std::endl;
    failed += c.passed() ? 0 : 1;
  }
  std::cout << criteria.size() - static_cast<std::size_t>(failed) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
