#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gridlayout/io.hpp"
#include "gridlayout/scoring.hpp"
#include "gridlayout/service.hpp"
#include "service_harness.hpp"

using namespace gridlayout;
using namespace gridlayout::service;
using gridlayout::testing::Harness;
using nlohmann::json;

namespace {

LayoutProblem fixture(const std::string& name) { return load_problem("tests/fixtures/" + name + ".json"); }

// Every event is ordered, its layout valid, and a summary closes the stream.
void check_stream(const LayoutProblem& p, const std::vector<Harness::Frame>& frames, int k) {
  REQUIRE(!frames.empty());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    CHECK(frames[i].seq == static_cast<long>(i) + 1);
    CHECK(frames[i].data["seq"] == frames[i].seq);
  }
  const auto& last = frames.back();
  CHECK(last.type == "summary");
  CHECK(last.data["count"] == static_cast<int>(frames.size()) - 1);
  CHECK(static_cast<int>(frames.size()) - 1 <= k);
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    CHECK(frames[i].type == "solution");
    const auto s = parse_solution(frames[i].data["solution"].dump());
    CHECK(validate_solution(p, s).empty());
    CHECK(frames[i].data["stats"] == frames[i].data["solution"]["stats"]);
  }
}

}  // namespace

TEST_CASE("request errors map to 404, 409 and 422") {
  Harness h;
  auto p = fixture("template");
  const auto sid = h.session(p);

  CHECK(h.call("GET", "/sessions/nope").status == 404);
  CHECK(h.call("GET", "/sessions/" + sid + "/jobs/job-9").status == 404);
  CHECK(h.call("DELETE", "/sessions/" + sid + "/jobs/job-9").status == 404);
  CHECK(h.call("GET", "/sessions/" + sid + "/jobs/job-9/events").status == 404);
  CHECK(h.call("POST", "/sessions/nope/suggest", json{{"mode", "explore"}}).status == 404);

  auto bad = p;
  bad.elements[0].min_width = bad.elements[0].max_width + 1;
  auto r = h.call("POST", "/sessions", json{{"problem", json::parse(dump_problem(bad))}});
  CHECK(r.status == 422);
  CHECK(r.body["error"]["violations"].size() >= 1);
  CHECK(h.call("POST", "/sessions", std::string("{oops")).status == 422);
  r = h.call("POST", "/sessions", json{{"problem", {{"canvas", {{"width", 10}}}, {"elements", json::array()}}}});
  CHECK(r.status == 422);
  CHECK(r.body["error"]["path"] == "$.problem.canvas.height");
  CHECK(h.call("PUT", "/sessions/" + sid + "/problem", json{{"problem", json::parse(dump_problem(bad))}}).status == 422);

  const auto suggest = "/sessions/" + sid + "/suggest";
  CHECK(h.call("POST", suggest, json{{"mode", "sideways"}}).status == 422);
  CHECK(h.call("POST", suggest, json{{"mode", "explore"}, {"k", "five"}}).status == 422);
  CHECK(h.call("POST", suggest, json{{"mode", "explore"}, {"colour", 1}}).status == 422);
  CHECK(h.call("POST", suggest, json{{"mode", "explore"}, {"k", 0}}).status == 422);
  CHECK(h.call("POST", suggest, json{{"mode", "nearby"}}).status == 422);
  CHECK(h.call("POST", suggest, json{{"mode", "nearby"}, {"seedSolutionId", "sol-42"}}).status == 404);
  CHECK(h.call("POST", "/sessions/" + sid + "/saved", json{{"solutionId", "sol-42"}}).status == 404);
  CHECK(h.call("GET", "/sessions/" + sid + "/saved").body["items"].empty());
}

TEST_CASE("explore streams k layouts, resumes after a sequence number and seeds nearby") {
  Harness h;
  const auto p = fixture("template");
  const auto sid = h.session(p);
  const auto job = h.suggest(sid, {{"mode", "explore"}, {"k", 5}});
  CHECK(h.call("POST", "/sessions/" + sid + "/suggest", json{{"mode", "explore"}}).status == 409);

  const auto frames = h.stream(h.events_path(sid, job));
  REQUIRE(frames.size() == 6);
  check_stream(p, frames, 5);
  const auto& summary = frames.back().data;
  CHECK(summary["status"] == "completed");
  CHECK(summary["count"] == 5);
  CHECK(summary["bound"].is_object());
  CHECK(summary["bound"]["gammaMin"] <= summary["bound"]["gammaMax"]);

  // Replay from the log.
  const auto tail = h.stream(h.events_path(sid, job, 3));
  REQUIRE(tail.size() == 3);
  CHECK(tail[0].seq == 4);
  CHECK(tail[0].data == frames[3].data);
  CHECK(tail.back().type == "summary");
  CHECK(h.stream(h.events_path(sid, job, 6)).empty());
  CHECK(h.call("GET", "/sessions/" + sid + "/jobs/" + job).body["status"] == "completed");

  // Nearby alternatives of the first streamed layout.
  const std::string seed_id = frames[0].data["solutionId"];
  const auto seed = parse_solution(frames[0].data["solution"].dump());
  const auto near = h.suggest(sid, {{"mode", "nearby"}, {"k", 2}, {"radius", 3}, {"seedSolutionId", seed_id}});
  const auto nf = h.stream(h.events_path(sid, near));
  check_stream(p, nf, 2);
  CHECK(nf.back().data["status"] == "completed");
  CHECK(nf.back().data["bound"].is_null());
  CHECK(nf.size() >= 2);
  for (std::size_t i = 0; i + 1 < nf.size(); ++i) {
    const int d = distance(seed, parse_solution(nf[i].data["solution"].dump()));
    CHECK(d >= 1);
    CHECK(d <= 3);
  }

  // Saved timeline, in order of saving.
  auto r = h.call("POST", "/sessions/" + sid + "/saved", json{{"solutionId", seed_id}});
  REQUIRE(r.status == 201);
  CHECK(r.body["origin"] == "optimiser");
  auto edited = seed;
  r = h.call("POST", "/sessions/" + sid + "/saved",
             json{{"solution", json::parse(dump_solution(edited))}, {"origin", "edited"}});
  CHECK(r.status == 201);
  edited.placements[0].r = p.canvas.width + 50;
  CHECK(h.call("POST", "/sessions/" + sid + "/saved", json{{"solution", json::parse(dump_solution(edited))}}).status ==
        422);
  CHECK(h.call("POST", "/sessions/" + sid + "/saved", json{{"solutionId", seed_id}, {"origin", "robot"}}).status == 422);
  const auto items = h.call("GET", "/sessions/" + sid + "/saved").body["items"];
  REQUIRE(items.size() == 2);
  CHECK(items[0]["origin"] == "optimiser");
  CHECK(items[1]["origin"] == "edited");
  CHECK(items[0]["timestamp"] <= items[1]["timestamp"]);
  CHECK(items[0]["solution"] == frames[0].data["solution"]);
}

TEST_CASE("complete and constrained keep locked rectangles") {
  Harness h;
  auto p = fixture("template");
  const auto sid = h.session(p);
  // One layout, then lock three of its elements in place.
  const auto first = h.stream(h.events_path(sid, h.suggest(sid, {{"mode", "explore"}, {"k", 1}})));
  REQUIRE(first.size() == 2);
  const auto anchor = parse_solution(first[0].data["solution"].dump());
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& pe = *anchor.find(p.elements[i].id);
    p.elements[i].locked = Rect{pe.l, pe.t, pe.width(), pe.height()};
  }
  REQUIRE(h.call("PUT", "/sessions/" + sid + "/problem", json{{"problem", json::parse(dump_problem(p))}}).status == 200);

  for (const char* mode : {"complete", "constrained"}) {
    CAPTURE(mode);
    const auto frames = h.stream(h.events_path(sid, h.suggest(sid, {{"mode", mode}, {"k", 2}})));
    check_stream(p, frames, 2);
    CHECK(frames.back().data["status"] == "completed");
    CHECK(frames.size() >= 2);
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
      const auto s = parse_solution(frames[i].data["solution"].dump());
      for (std::size_t e = 0; e < 3; ++e) CHECK(*s.find(p.elements[e].id) == *anchor.find(p.elements[e].id));
    }
  }
}

TEST_CASE("cancellation ends the stream promptly and keeps partial events") {
  using Clock = std::chrono::steady_clock;
  Harness h;
  const auto p = fixture("landing");
  const auto sid = h.session(p);
  const auto job = h.suggest(sid, {{"mode", "explore"}, {"k", 5}});
  // Cancel once the first layout is out.
  bool early = false;
  REQUIRE(h.service.events(sid, job, 0, std::chrono::seconds(120), early).size() >= 1);
  REQUIRE_FALSE(early);

  const auto t0 = Clock::now();
  auto r = h.call("DELETE", "/sessions/" + sid + "/jobs/" + job);
  CHECK(r.status == 202);
  bool finished = false;
  std::vector<Event> log;
  while (!finished && Clock::now() - t0 < std::chrono::seconds(5))
    log = h.service.events(sid, job, 0, std::chrono::milliseconds(10), finished);
  const auto latency = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  MESSAGE("cancellation latency " << latency << " ms");
  CHECK(finished);
  CHECK(latency <= 250);

  const auto frames = h.stream(h.events_path(sid, job));
  check_stream(p, frames, 5);
  CHECK(frames.back().data["status"] == "cancelled");
  CHECK(frames.size() == log.size());
  CHECK(frames.size() >= 2);

  // A replaced problem cancels the running job; the session accepts new work.
  const auto next = h.suggest(sid, {{"mode", "explore"}, {"k", 5}});
  CHECK(h.call("PUT", "/sessions/" + sid + "/problem", json{{"problem", json::parse(dump_problem(p))}}).status == 200);
  const auto nf = h.stream(h.events_path(sid, next));
  CHECK(nf.back().data["status"] == "cancelled");
  CHECK(h.call("GET", "/sessions/" + sid).body["activeJob"].is_null());
}

TEST_CASE("sessions and saved layouts survive a restart through the snapshot") {
  const auto file = std::filesystem::temp_directory_path() / "gridlayout-snapshot-test.json";
  std::filesystem::remove(file);
  ServiceOptions o;
  o.snapshot_path = file.string();
  const auto p = fixture("template");
  std::string sid;
  json items;
  {
    Harness h(o);
    sid = h.session(p);
    const auto frames = h.stream(h.events_path(sid, h.suggest(sid, {{"mode", "explore"}, {"k", 1}})));
    REQUIRE(frames.size() == 2);
    REQUIRE(h.call("POST", "/sessions/" + sid + "/saved", json{{"solutionId", frames[0].data["solutionId"]}}).status ==
            201);
    items = h.call("GET", "/sessions/" + sid + "/saved").body["items"];
  }
  REQUIRE(std::filesystem::exists(file));
  {
    Harness h(o);
    CHECK(h.call("GET", "/sessions/" + sid + "/saved").body["items"] == items);
    CHECK(load_problem("tests/fixtures/template.json") ==
          parse_problem(h.call("GET", "/sessions/" + sid).body["problem"].dump()));
    // Saved layouts stay usable as nearby seeds; new sessions get fresh ids.
    CHECK(h.session(p) != sid);
    const auto job = h.suggest(sid, {{"mode", "nearby"}, {"k", 1}, {"seedSolutionId", items[0]["id"]}});
    const auto frames = h.stream(h.events_path(sid, job));
    check_stream(p, frames, 1);
  }
  std::filesystem::remove(file);
}
