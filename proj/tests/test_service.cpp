#include <gtest/gtest.h>

#include <opencv2/videoio.hpp>

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>

#include "sceneval/metrics/loader.hpp"
#include "sceneval/metrics/score.hpp"
#include "sceneval/service/server.hpp"

using namespace sceneval;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kCaptions = {
    "The ego vehicle is moving straight at a moderate speed.",
    "The ego vehicle is turning left at a low speed while a traffic light is green.",
    "The ego vehicle is stopped at a red traffic light.",
    "The ego vehicle is driving on a curved road and following a car ahead.",
    "The ego vehicle is accelerating on a straight road at a high speed.",
    "The ego vehicle is decelerating while turning right."};

/// n synthetic scenarios cycling through the captions above.
Manifest synthetic_manifest(int n) {
  Manifest m;
  for (int i = 0; i < n; ++i) {
    ScenarioSource s;
    s.scenario_id = "scn" + std::to_string(i);
    s.video_ref = "synthetic:scn" + std::to_string(i);
    s.caption = kCaptions[static_cast<std::size_t>(i) % kCaptions.size()];
    m.scenarios.push_back(s);
  }
  return m;
}

/// 6 level-1 configs: 1..6 frames in a single row at 200 ms.
json six_config_plan(std::vector<std::string> scenarios = {}) {
  json configs = json::array();
  for (int n = 1; n <= 6; ++n) {
    SamplingConfig c;
    c.frame_count = n;
    c.grid = {1, n};
    configs.push_back(c);
  }
  return {{"scenarios", scenarios}, {"configs", configs}};
}

fs::path fresh_dir(const std::string &name) {
  auto d = fs::path(testing::TempDir()) / ("sceneval_service_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

struct Fixture {
  explicit Fixture(const std::string &name, Manifest manifest = synthetic_manifest(18))
      : dir(fresh_dir(name)),
        service(ServiceOptions{std::move(manifest), default_covla_schema(), dir / "data", std::nullopt, std::nullopt,
                               true}),
        server(service), client("127.0.0.1", server.port()) {}

  json post(const std::string &path, const json &body, int expect) {
    auto r = client.Post(path, body.dump(), "application/json");
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }
  json get(const std::string &path, int expect = 200) {
    auto r = client.Get(path);
    EXPECT_TRUE(r) << path;
    if (!r) return {};
    EXPECT_EQ(r->status, expect) << path << " " << r->body;
    return json::parse(r->body);
  }
  std::string create(const std::string &evaluator, const std::string &mode = "collage", std::uint64_t seed = 1,
                     json plan = six_config_plan()) {
    return post("/sessions", {{"evaluator_id", evaluator}, {"mode", mode}, {"seed", seed}, {"plan", plan}}, 201)
        ["session_id"];
  }
  json answer(const std::string &sid, std::size_t index, const std::string &key, int expect, double dur = 3.5) {
    return post("/sessions/" + sid + "/answers", {{"index", index}, {"key", key}, {"view_duration_s", dur}}, expect);
  }

  fs::path dir;
  BaselineService service;
  BackgroundServer server;
  httplib::Client client;
};

std::vector<std::string> assignment_order(const json &session) {
  std::vector<std::string> out;
  for (const auto &a : session["assignment"]) out.push_back(a["asset_id"]);
  return out;
}

} // namespace

TEST(Sessions, AssignmentCoversPlanInSeededOrder) {
  Fixture f("assign");
  const auto a = f.create("e1", "collage", 7);
  const auto b = f.create("e2", "collage", 7);
  const auto c = f.create("e3", "collage", 8);
  auto sa = f.get("/sessions/" + a), sb = f.get("/sessions/" + b), sc = f.get("/sessions/" + c);
  EXPECT_EQ(sa["total"], 108);
  EXPECT_EQ(sa["cursor"], 0);
  EXPECT_EQ(assignment_order(sa), assignment_order(sb));
  EXPECT_NE(assignment_order(sa), assignment_order(sc));
  auto order = assignment_order(sa);
  EXPECT_EQ(std::set<std::string>(order.begin(), order.end()).size(), 108u);
  EXPECT_NE(a, b);
  EXPECT_GE(a.size(), 32u);
}

TEST(Sessions, RejectsBadRequests) {
  Fixture f("bad");
  auto empty = f.post("/sessions", {{"evaluator_id", "e"}, {"plan", {{"scenarios", json::array()}, {"configs", json::array()}}}}, 400);
  EXPECT_EQ(empty["error"], "invalid_plan");
  EXPECT_EQ(f.post("/sessions", {{"mode", "collage"}, {"plan", six_config_plan()}}, 400)["error"], "invalid_request");
  EXPECT_EQ(f.post("/sessions", {{"evaluator_id", "e"}, {"plan", six_config_plan({"nope"})}}, 400)["error"],
            "invalid_plan");
  EXPECT_EQ(f.post("/sessions", {{"evaluator_id", "e"}, {"mode", "hologram"}, {"plan", six_config_plan()}}, 400)["error"],
            "invalid_request");
  EXPECT_EQ(f.post("/sessions", {{"evaluator_id", "e"}}, 400)["error"], "invalid_plan"); // no default plan
  EXPECT_EQ(f.get("/sessions/abc123/next", 404)["error"], "unknown_session");
  auto r = f.client.Post("/sessions", "{not json", "application/json");
  ASSERT_TRUE(r);
  EXPECT_EQ(r->status, 400);
}

TEST(Sessions, NextPeeksWithoutAdvancingAndNeverLeaksTruth) {
  Fixture f("next");
  const auto sid = f.create("e1");
  auto first = f.get("/sessions/" + sid + "/next");
  auto again = f.get("/sessions/" + sid + "/next");
  EXPECT_EQ(first, again);
  EXPECT_EQ(first["status"], "item");
  EXPECT_EQ(first["index"], 1);
  EXPECT_EQ(first["total"], 108);
  EXPECT_EQ(first["key_length"], 7);
  ASSERT_EQ(first["questions"].size(), 7u);
  const auto schema = default_covla_schema();
  for (std::size_t i = 0; i < 7; ++i) {
    EXPECT_EQ(first["questions"][i]["category"], schema.category(i).name);
    EXPECT_EQ(first["questions"][i]["options"].size(), schema.category(i).options.size());
  }
  const auto text = first.dump();
  EXPECT_EQ(text.find("truth"), std::string::npos);
  EXPECT_EQ(text.find("caption"), std::string::npos);
  EXPECT_EQ(text.find("expected"), std::string::npos);

  auto asset = f.client.Get(first["asset"]["url"].get<std::string>());
  ASSERT_TRUE(asset);
  EXPECT_EQ(asset->status, 200);
  EXPECT_EQ(asset->get_header_value("Content-Type"), "image/png");
  EXPECT_EQ(asset->body.substr(1, 3), "PNG");
  EXPECT_EQ(f.get("/assets/nope", 404)["error"], "unknown_asset");
}

TEST(Sessions, SubmitAdvancesIsIdempotentAndValidates) {
  Fixture f("submit");
  const auto sid = f.create("e1");
  auto p = f.answer(sid, 1, "AABACBB", 200);
  EXPECT_EQ(p["status"], "accepted");
  EXPECT_EQ(p["submitted"], 1);
  EXPECT_EQ(f.answer(sid, 1, "AABACBB", 200)["status"], "duplicate");
  EXPECT_EQ(f.get("/sessions/" + sid)["cursor"], 1);
  auto conflict = f.answer(sid, 1, "AAAAAAA", 409);
  EXPECT_EQ(conflict["error"], "conflict");
  EXPECT_EQ(conflict["stored_key"], "AABACBB");

  auto length = f.answer(sid, 2, "AAB", 422);
  EXPECT_EQ(length["error"], "invalid_key");
  EXPECT_EQ(length["fault"], "length");
  auto letter = f.answer(sid, 2, "AABACBZ", 422);
  EXPECT_EQ(letter["fault"], "letter");
  EXPECT_EQ(letter["position"], 7);
  EXPECT_EQ(letter["category"], default_covla_schema().category(6).name);
  EXPECT_EQ(f.answer(sid, 4, "AABACBB", 409)["error"], "not_current");
  EXPECT_EQ(f.answer(sid, 109, "AABACBB", 422)["error"], "invalid_index");
  EXPECT_EQ(f.answer(sid, 2, "AABACBB", 422, -1.0)["error"], "invalid_duration");
  EXPECT_EQ(f.post("/sessions/" + sid + "/answers", {{"key", "AABACBB"}}, 400)["error"], "invalid_request");
  EXPECT_EQ(f.get("/sessions/" + sid + "/next")["index"], 2);
}

TEST(Sessions, CompletedSessionSignalsCompletion) {
  Fixture f("complete");
  const auto sid = f.create("e1", "collage", 3, six_config_plan({"scn0"}));
  for (std::size_t i = 1; i <= 6; ++i) f.answer(sid, i, "AABACBB", 200);
  auto done = f.get("/sessions/" + sid + "/next");
  EXPECT_EQ(done["status"], "complete");
  EXPECT_EQ(done["submitted"], 6);
  EXPECT_FALSE(done.contains("asset"));
  EXPECT_EQ(f.answer(sid, 6, "AABACBB", 200)["status"], "duplicate");
}

TEST(Sessions, GifModeDeclaresIntervalAsFrameDelay) {
  Fixture f("gif");
  const auto sid = f.create("e1", "gif", 2, six_config_plan({"scn1", "scn2"}));
  auto session = f.get("/sessions/" + sid);
  for (const auto &a : session["assignment"]) {
    auto meta = f.get("/assets/" + a["asset_id"].get<std::string>() + "/meta");
    EXPECT_EQ(meta["kind"], "gif");
    EXPECT_EQ(meta["frame_delay_ms"], 200);
  }
  auto item = f.get("/sessions/" + sid + "/next");
  EXPECT_EQ(item["asset"]["frame_delay_ms"], 200);
  auto bytes = f.client.Get(item["asset"]["url"].get<std::string>());
  ASSERT_TRUE(bytes);
  EXPECT_EQ(bytes->body.substr(0, 6), "GIF89a");
}

TEST(Sessions, VideoModeServesTheSourceClip) {
  Fixture synthetic("video_synth");
  auto err = synthetic.post("/sessions", {{"evaluator_id", "e"}, {"mode", "video"}, {"plan", six_config_plan({"scn0"})}}, 422);
  EXPECT_EQ(err["error"], "asset_error");

  const auto clip = fresh_dir("clip") / "clip.avi";
  {
    cv::VideoWriter w(clip.string(), cv::VideoWriter::fourcc('M', 'J', 'P', 'G'), 30.0, cv::Size(64, 36));
    ASSERT_TRUE(w.isOpened());
    for (int i = 0; i < 90; ++i) w.write(cv::Mat(36, 64, CV_8UC3, cv::Scalar(i, 255 - i, 40)));
  }
  Manifest m;
  m.scenarios.push_back({"real", clip.string(), kCaptions[0], 0, ""});
  Fixture f("video", m);
  const auto sid = f.create("e1", "video", 1, six_config_plan({"real"}));
  auto item = f.get("/sessions/" + sid + "/next");
  EXPECT_EQ(item["asset"]["kind"], "video");
  EXPECT_EQ(item["asset"]["mime"], "video/x-msvideo");
  ASSERT_TRUE(item["asset"].contains("segment_ms"));
  auto bytes = f.client.Get(item["asset"]["url"].get<std::string>());
  ASSERT_TRUE(bytes);
  EXPECT_EQ(bytes->body.size(), fs::file_size(clip));
}

TEST(Curation, FlagsRoundTripAndAppend) {
  Fixture f("curation");
  f.post("/curation/scn3", {{"evaluator_id", "e1"}, {"verdict", "ambiguous-direction"}, {"note", "left or straight"}},
         201);
  f.post("/curation/scn3", {{"evaluator_id", "e2"}, {"verdict", "ambiguous-direction"}}, 201);
  f.post("/curation/scn4", {{"evaluator_id", "e2"}, {"verdict", "wrong-speed"}}, 201);
  EXPECT_EQ(f.post("/curation/ghost", {{"verdict", "x"}}, 404)["error"], "unknown_scenario");
  EXPECT_EQ(f.post("/curation/scn3", {{"evaluator_id", "e1"}}, 422)["error"], "invalid_flag");
  auto all = f.get("/curation");
  EXPECT_EQ(all["flags"].size(), 3u);
  auto scn3 = f.get("/curation?scenario_id=scn3");
  ASSERT_EQ(scn3["flags"].size(), 2u);
  EXPECT_EQ(scn3["flags"][0]["evaluator_id"], "e1");
  EXPECT_EQ(scn3["flags"][0]["note"], "left or straight");
  EXPECT_EQ(scn3["flags"][1]["evaluator_id"], "e2");

  const auto sid = f.create("e5", "collage", 1, six_config_plan({"scn0"}));
  f.post("/sessions/" + sid + "/answers",
         {{"index", 1}, {"key", "AABACBB"}, {"view_duration_s", 2.0}, {"flags", {{{"verdict", "blurry"}}}}}, 200);
  auto scn0 = f.get("/curation?scenario_id=scn0");
  ASSERT_EQ(scn0["flags"].size(), 1u);
  EXPECT_EQ(scn0["flags"][0]["evaluator_id"], "e5");
  EXPECT_EQ(scn0["flags"][0]["session_id"], sid);
}

TEST(Export, EmptyThenEveryAcceptedAnswerExactlyOnce) {
  Fixture f("export");
  auto empty = f.client.Get("/export");
  ASSERT_TRUE(empty);
  EXPECT_EQ(std::count(empty->body.begin(), empty->body.end(), '\n'), 1);
  EXPECT_EQ(json::parse(empty->body)["header"]["records"], 0);

  std::map<std::string, std::string> submitted; // record_id -> key
  const std::string letters[] = {"AABACBB", "CDECDAC", "ABCABCA", "BBBBBBB", "AAAAAAA"};
  for (int e = 0; e < 5; ++e) {
    const auto sid = f.create("evaluator-" + std::to_string(e), "collage", static_cast<std::uint64_t>(e));
    for (std::size_t i = 1; i <= 108; ++i) {
      const auto &key = letters[(i + static_cast<std::size_t>(e)) % 5];
      f.answer(sid, i, key, 200, 1.0 + static_cast<double>(i) / 100);
      submitted["h:" + sid + ":" + std::to_string(i)] = key;
    }
    f.answer(sid, 3, letters[(3 + static_cast<std::size_t>(e)) % 5], 200); // replay
  }
  auto r = f.client.Get("/export");
  ASSERT_TRUE(r);
  const auto path = f.dir / "export.jsonl";
  std::ofstream(path) << r->body;
  auto records = read_records(path).records;
  ASSERT_EQ(records.size(), 540u);
  for (const auto &rec : records) {
    ASSERT_TRUE(submitted.count(rec.record_id));
    EXPECT_EQ(rec.predicted.key->str(), submitted[rec.record_id]);
    EXPECT_EQ(rec.predicted.raw_text, submitted[rec.record_id]);
    EXPECT_EQ(rec.subject_kind, SubjectKind::Human);
    EXPECT_GT(rec.latency_s, 1.0);
    EXPECT_EQ(rec.view_mode, "collage");
  }
  auto line = r->body.substr(r->body.find('\n') + 1);
  auto first = json::parse(line.substr(0, line.find('\n')));
  EXPECT_TRUE(first.contains("evaluator_id"));
  EXPECT_FALSE(first.contains("model_id"));

  auto reports = reports_by_subject(records, default_covla_schema(), ScoreWeights::equal(7));
  EXPECT_EQ(reports.size(), 5u);
}

TEST(Persistence, RestartRestoresCursorsFlagsAndRecords) {
  const auto dir = fresh_dir("persist");
  std::string sid;
  std::string exported;
  {
    BaselineService s(ServiceOptions{synthetic_manifest(4), default_covla_schema(), dir, std::nullopt, std::nullopt, true});
    sid = s.create_session("e1", ViewMode::Gif, SessionPlan{{"scn0", "scn1"}, {SamplingConfig{}}, {}}, 9).session_id;
    s.submit(sid, {1, "AABACBB", 4.0, {}});
    s.flag({"scn1", "e1", "unclear", "", "", ""});
    exported = s.export_jsonl();
  }
  std::ofstream(dir / "records.jsonl", std::ios::app) << R"({"record_id":"h:partial)";
  BaselineService s(ServiceOptions{synthetic_manifest(4), default_covla_schema(), dir, std::nullopt, std::nullopt, true});
  EXPECT_EQ(s.session(sid).cursor, 1u);
  EXPECT_EQ(s.session(sid).mode, ViewMode::Gif);
  EXPECT_EQ(s.flags().size(), 1u);
  EXPECT_EQ(s.next_item(sid)["index"], 2);
  EXPECT_EQ(s.submit(sid, {1, "AABACBB", 4.0, {}})["status"], "duplicate");
  auto strip = [](std::string e) { return e.substr(e.find('\n')); };
  EXPECT_EQ(strip(s.export_jsonl()), strip(exported));
}

TEST(Concurrency, RacingSubmissionsAcceptEachSlotOnce) {
  Fixture f("race");
  const auto sid = f.create("e1", "collage", 5, six_config_plan({"scn0", "scn1"}));
  std::atomic<int> accepted{0}, duplicate{0}, other{0};
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&] {
      httplib::Client c("127.0.0.1", f.server.port());
      for (std::size_t i = 1; i <= 12; ++i) {
        for (;;) {
          auto r = c.Post("/sessions/" + sid + "/answers",
                          json{{"index", i}, {"key", "AABACBB"}, {"view_duration_s", 1.0}}.dump(), "application/json");
          if (!r) continue;
          if (r->status == 409) { // slot not yet current: another thread is behind
            std::this_thread::yield();
            continue;
          }
          auto s = json::parse(r->body).value("status", "");
          (s == "accepted" ? accepted : s == "duplicate" ? duplicate : other)++;
          break;
        }
      }
    });
  for (auto &t : threads) t.join();
  EXPECT_EQ(accepted.load(), 12);
  EXPECT_EQ(duplicate.load(), 36);
  EXPECT_EQ(other.load(), 0);
  auto r = f.client.Get("/export");
  ASSERT_TRUE(r);
  EXPECT_EQ(std::count(r->body.begin(), r->body.end(), '\n'), 13);
}
