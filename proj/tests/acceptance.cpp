// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any
// fails. Pass criterion numbers as arguments to run a subset.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "corpus.hpp"
#include "gridlayout/diversifier.hpp"
#include "gridlayout/io.hpp"
#include "gridlayout/milp.hpp"
#include "gridlayout/scoring.hpp"
#include "oracle.hpp"
#include "service_harness.hpp"
#include "support.hpp"

using namespace gridlayout;
using namespace gridlayout::testing;
using Clock = std::chrono::steady_clock;
using nlohmann::json;

namespace {

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

struct Verdict {
  bool pass = true;
  std::ostringstream detail;
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (failures.size() < 8) failures.push_back(what);
    }
  }
};

using Criterion = std::function<void(Verdict&)>;

// ---------------------------------------------------------------------------

void validity(Verdict& v) {
  FuzzOptions fuzz;
  fuzz.min_n = 2;
  fuzz.max_n = 6;
  fuzz.lock_probability = 0.2;
  fuzz.pref_probability = 0.25;
  std::mt19937 rng(20240517);

  // Light per-solve limits: this gate checks validity, not layout quality.
  DiversifyConfig cfg;
  cfg.count = 3;
  cfg.per_solve_nodes = 80;
  cfg.per_solve_stall = 40;

  long layouts = 0, violations = 0, infeasible = 0, empty = 0;
  auto check = [&](const LayoutProblem& p, const LayoutSolution& s, const char* op, int i) {
    ++layouts;
    const auto issues = validate_solution(p, s);
    violations += static_cast<long>(issues.size());
    v.expect(issues.empty(), std::string(op) + " on problem " + std::to_string(i) + ": " +
                                 (issues.empty() ? "" : issues[0].message));
  };

  const auto t0 = Clock::now();
  for (int i = 0; i < 200; ++i) {
    const auto p = random_problem(rng, fuzz);
    std::vector<LayoutSolution> streamed;
    DiversifyConfig c = cfg;
    c.on_solution = [&](const LayoutSolution& s) { streamed.push_back(s); };
    try {
      const auto solved = solve_layout(p, c);
      if (!solved.solution) {
        ++empty;
        continue;
      }
      for (const auto& s : diversify(p, c)) check(p, s, "diversify", i);
      for (const auto& s : nearby(p, *solved.solution, 2, 2, c)) check(p, s, "nearby", i);
      // Completion around one locked element; unlocked problems borrow a
      // rectangle from the solved layout.
      LayoutProblem q = p;
      bool has_lock = false;
      for (const auto& e : q.elements) has_lock = has_lock || e.locked;
      if (!has_lock) {
        const auto& pe = *solved.solution->find(q.elements[0].id);
        q.elements[0].locked = Rect{pe.l, pe.t, pe.width(), pe.height()};
      }
      DiversifyConfig cq = cfg;
      cq.on_solution = [&](const LayoutSolution& s) { check(q, s, "complete (streamed)", i); };
      for (const auto& s : complete_partial(q, 2, cq)) check(q, s, "complete", i);
      for (const auto& s : streamed) check(p, s, "streamed", i);
    } catch (const LayoutError& e) {
      if (e.kind() == ErrorKind::InfeasibleProblem) {
        ++infeasible;
      } else if (e.kind() == ErrorKind::TimeBudgetExhausted) {
        ++empty;
      } else {
        v.expect(false, "problem " + std::to_string(i) + ": " + e.what());
      }
    }
  }
  const double elapsed = seconds_since(t0);
  v.expect(layouts > 0, "no layouts produced");
  v.expect(elapsed <= 600, "runtime above 10 min");
  v.detail << "200 problems, " << layouts << " layouts checked, " << violations << " violations, " << infeasible
           << " infeasible, " << empty << " without a layout, " << static_cast<int>(elapsed) << " s";
}

// ---------------------------------------------------------------------------

void oracle_equivalence(Verdict& v) {
  const auto corpus = small_corpus(60, 31337);
  int compared = 0, infeasible = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = corpus[i];
    const auto eps = oracle::min_epsilon(p);
    const auto rect = oracle::max_rect(p);
    const auto e = solve_mode(p, ObjectiveMode::MinEpsilon);
    const auto r = solve_mode(p, ObjectiveMode::MaxRect);
    const auto tag = "instance " + std::to_string(i);
    if (!eps) {
      ++infeasible;
      v.expect(!rect, tag + ": oracles disagree on feasibility");
      v.expect(e.result.status == MilpStatus::Infeasible, tag + ": min-eps should be infeasible");
      v.expect(r.result.status == MilpStatus::Infeasible, tag + ": max-R should be infeasible");
      ++compared;
      continue;
    }
    const bool e_ok = e.result.status == MilpStatus::Optimal &&
                      std::lround(e.result.incumbent->objective) == *eps &&
                      std::abs(e.result.incumbent->objective - *eps) < 1e-6;
    const bool r_ok = r.result.status == MilpStatus::Optimal && rect &&
                      std::abs(r.result.incumbent->objective - *rect) < 1e-6;
    v.expect(e_ok, tag + ": min-eps differs from oracle " + std::to_string(*eps));
    v.expect(r_ok, tag + ": max-R differs from oracle");
    ++compared;
  }
  v.expect(compared >= 50, "fewer than 50 instances");
  v.detail << compared << " instances with n <= 3 (" << infeasible << " infeasible), min-eps and max-R exact";
}

// ---------------------------------------------------------------------------

void small_cases(Verdict& v) {
  const auto two = make_problem(100, 100, {flex("a", 10, 100, 10, 100), flex("b", 10, 100, 10, 100)});
  const auto s2 = solve_layout(two);
  v.expect(s2.solution.has_value(), "two elements: no layout");
  const int lines2 = s2.solution ? grid_line_count(two, *s2.solution) : -1;
  v.expect(lines2 == 5, "two elements: grid lines " + std::to_string(lines2) + " != 5");

  const auto grid = make_problem(100, 100, {fixed("a", 50, 50), fixed("b", 50, 50), fixed("c", 50, 50), fixed("d", 50, 50)});
  const auto s4 = solve_layout(grid);
  v.expect(s4.solution.has_value(), "2x2 grid: no layout");
  const int lines4 = s4.solution ? grid_line_count(grid, *s4.solution) : -1;
  const int cases4 = s4.solution ? rect_cases(*s4.solution, geometric_tolerance(grid.canvas)) : -1;
  v.expect(lines4 == 6, "2x2 grid: grid lines " + std::to_string(lines4) + " != 6");
  v.expect(cases4 == 8, "2x2 grid: rect cases " + std::to_string(cases4) + " != 8");
  v.detail << "two flexible: " << lines2 << " lines; 2x2 grid: " << lines4 << " lines, " << cases4 << " rect cases";
}

// ---------------------------------------------------------------------------

void diversity(Verdict& v) {
  const auto p = template_problem();
  DiversifyConfig cfg;
  cfg.count = 5;
  const auto out = diversify(p, cfg);
  v.expect(out.size() == 5, "returned " + std::to_string(out.size()) + " layouts");
  std::set<std::pair<int, int>> points;
  int min_distance = 1 << 30;
  for (std::size_t i = 0; i < out.size(); ++i) {
    v.expect(validate_solution(p, out[i]).empty(), "layout " + std::to_string(i) + " invalid");
    const auto sig = signature(out[i], geometric_tolerance(p.canvas));
    points.insert({sig.gamma, sig.pi});
    for (std::size_t j = 0; j < i; ++j) min_distance = std::min(min_distance, distance(out[i], out[j]));
  }
  v.expect(min_distance >= 1, "two layouts share a signature");
  v.expect(points.size() >= 4, "only " + std::to_string(points.size()) + " signature points");
  v.detail << out.size() << " layouts, min pairwise distance " << min_distance << ", " << points.size()
           << " distinct (gamma, pi) points";
}

// ---------------------------------------------------------------------------

void performance(Verdict& v) {
  {
    DiversifyConfig cfg;
    cfg.count = 5;
    const auto t = Clock::now();
    const auto out = diversify(template_problem(), cfg);
    const double s = seconds_since(t);
    v.expect(out.size() == 5 && s <= 30, "n=5 diversify took " + std::to_string(s) + " s");
    v.detail << "n=5 diversify k=5 " << out.size() << " layouts in " << std::fixed;
    v.detail.precision(1);
    v.detail << s << " s";
  }
  auto first = [&](const LayoutProblem& p, double limit) {
    DiversifyConfig cfg;
    cfg.per_solve_time = std::chrono::duration<double>(limit);
    const auto t = Clock::now();
    const auto out = solve_layout(p, cfg);
    const double s = seconds_since(t);
    const auto n = p.elements.size();
    v.expect(out.solution.has_value() && s <= limit,
             "n=" + std::to_string(n) + " first layout took " + std::to_string(s) + " s");
    if (out.solution) v.expect(validate_solution(p, *out.solution).empty(), "n=" + std::to_string(n) + " invalid");
    v.detail << "; n=" << n << " first layout " << s << " s (" << out.result.nodes << " nodes, gap "
             << out.result.gap << ")";
  };
  first(landing_problem(), 60);
  first(dashboard_problem(), 600);
}

// ---------------------------------------------------------------------------

void bands(Verdict& v) {
  const auto p = template_problem();
  const auto ref = optimality_reference(p);
  v.expect(ref.worst > ref.best, "empty optimality range");
  v.detail << "reference best " << ref.best << " worst " << ref.worst << ";";
  for (auto [lo, hi] : {std::pair{95.0, 100.0}, std::pair{55.0, 70.0}, std::pair{0.0, 45.0}}) {
    const auto s = generate_in_band(p, ref, lo, hi);
    const std::string band = "[" + std::to_string(static_cast<int>(lo)) + "," + std::to_string(static_cast<int>(hi)) + "]";
    if (!s) {
      v.expect(false, "no layout for band " + band);
      v.detail << " " << band << " none";
      continue;
    }
    const double pct = optimality(p, *s, ref);
    v.expect(validate_solution(p, *s).empty(), "band " + band + " layout invalid");
    v.expect(pct >= lo - 1e-6 && pct <= hi + 1e-6, "band " + band + " got " + std::to_string(pct));
    v.detail << " " << band << " " << static_cast<int>(std::lround(pct * 10)) / 10.0 << "%";
  }
}

// ---------------------------------------------------------------------------

void model_size(Verdict& v) {
  for (int n : {1, 2, 5, 12}) {
    std::vector<Element> es;
    for (int i = 0; i < n; ++i) es.push_back(flex("e" + std::to_string(i), 10, 200, 10, 200));
    const auto m = build_layout_model(make_problem(1000, 1000, es));
    const auto& inst = m.instance;
    const int pairwise = inst.count_role(Role::Above) + inst.count_role(Role::Before);
    int geometric = 0;
    for (Role r : {Role::Left, Role::Right, Role::Top, Role::Bottom, Role::Width, Role::Height})
      geometric += inst.count_role(r);
    const int alignment = inst.count_role(Role::AlignAssign) + inst.count_role(Role::GroupUsed);
    const auto tag = "n=" + std::to_string(n);
    v.expect(pairwise == 2 * n * (n - 1), tag + " pairwise binaries " + std::to_string(pairwise));
    v.expect(geometric == 6 * n, tag + " geometric continuous " + std::to_string(geometric));
    v.expect(alignment == 4 * (n * n + n), tag + " alignment binaries " + std::to_string(alignment));
    v.detail << tag << ": " << pairwise << "/" << geometric << "/" << alignment << "; ";
    if (n == 5)
      v.detail << "(n=5 totals " << inst.count_vars(VarKind::Binary) << " binary, "
               << inst.count_vars(VarKind::Continuous) << " continuous; reference figure 110 discrete, 20 continuous) ";
  }
}

// ---------------------------------------------------------------------------

void determinism(Verdict& v) {
  const auto p = template_problem();
  auto render = [&] {
    DiversifyConfig cfg;
    cfg.count = 5;
    std::string text;
    for (const auto& s : diversify(p, cfg)) text += dump_solution(s);
    return text;
  };
  const auto a = render();
  const auto b = render();
  v.expect(!a.empty(), "no output");
  v.expect(a == b, "outputs differ");
  v.detail << "two runs, " << a.size() << " bytes each, " << (a == b ? "identical" : "different");
}

// ---------------------------------------------------------------------------

void service_contract(Verdict& v) {
  Harness h;
  auto p = template_problem();
  const auto sid = h.session(p);
  auto stream_ok = [&](const LayoutProblem& q, const std::vector<Harness::Frame>& frames, const std::string& mode,
                       int k, const char* status) {
    bool ok = !frames.empty() && frames.back().type == "summary" && frames.back().data["status"] == status;
    for (std::size_t i = 0; ok && i < frames.size(); ++i) {
      ok = frames[i].seq == static_cast<long>(i) + 1;
      if (ok && i + 1 < frames.size())
        ok = frames[i].type == "solution" &&
             validate_solution(q, parse_solution(frames[i].data["solution"].dump())).empty();
    }
    ok = ok && static_cast<int>(frames.size()) - 1 <= k && frames.back().data["count"] == frames.size() - 1;
    v.expect(ok, mode + " stream malformed");
    return ok;
  };

  const auto explore = h.suggest(sid, {{"mode", "explore"}, {"k", 5}});
  v.expect(h.call("POST", "/sessions/" + sid + "/suggest", json{{"mode", "explore"}}).status == 409,
           "second job not rejected");
  const auto ef = h.stream(h.events_path(sid, explore));
  stream_ok(p, ef, "explore", 5, "completed");
  v.expect(ef.size() == 6, "explore k=5 sent " + std::to_string(ef.size() ? ef.size() - 1 : 0) + " layouts");

  const auto tail = h.stream(h.events_path(sid, explore, 3));
  v.expect(tail.size() == ef.size() - 3 && !tail.empty() && tail[0].seq == 4, "resume after seq 3");

  const std::string seed = ef.empty() ? "" : ef[0].data.value("solutionId", "");
  const auto nf = h.stream(
      h.events_path(sid, h.suggest(sid, {{"mode", "nearby"}, {"k", 2}, {"radius", 3}, {"seedSolutionId", seed}})));
  stream_ok(p, nf, "nearby", 2, "completed");
  v.expect(nf.size() >= 2, "nearby sent no layouts");

  // Lock two elements of the first layout, then complete and constrained.
  const auto anchor = parse_solution(ef[0].data["solution"].dump());
  for (std::size_t i = 0; i < 2; ++i) {
    const auto& pe = *anchor.find(p.elements[i].id);
    p.elements[i].locked = Rect{pe.l, pe.t, pe.width(), pe.height()};
  }
  v.expect(h.call("PUT", "/sessions/" + sid + "/problem", json{{"problem", json::parse(dump_problem(p))}}).status == 200,
           "problem update");
  int kept = 0, total = 0;
  for (const char* mode : {"complete", "constrained"}) {
    const auto frames = h.stream(h.events_path(sid, h.suggest(sid, {{"mode", mode}, {"k", 2}})));
    stream_ok(p, frames, mode, 2, "completed");
    v.expect(frames.size() >= 2, std::string(mode) + " sent no layouts");
    for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
      const auto s = parse_solution(frames[i].data["solution"].dump());
      ++total;
      kept += *s.find(p.elements[0].id) == *anchor.find(p.elements[0].id) &&
              *s.find(p.elements[1].id) == *anchor.find(p.elements[1].id);
    }
  }
  v.expect(kept == total, "locked rectangles moved");

  // Cancellation mid-run on a larger problem.
  const auto big = landing_problem();
  const auto sid2 = h.session(big);
  const auto job = h.suggest(sid2, {{"mode", "explore"}, {"k", 5}});
  bool done_early = false;
  const auto before = h.service.events(sid2, job, 0, std::chrono::seconds(120), done_early);
  v.expect(!before.empty() && !done_early, "no layout streamed before the cancel");
  const auto t0 = Clock::now();
  v.expect(h.call("DELETE", "/sessions/" + sid2 + "/jobs/" + job).status == 202, "cancel status");
  bool finished = false;
  while (!finished && seconds_since(t0) < 5) h.service.events(sid2, job, 0, std::chrono::milliseconds(5), finished);
  const double latency_ms = seconds_since(t0) * 1000;
  v.expect(finished && latency_ms <= 250, "cancellation took " + std::to_string(latency_ms) + " ms");
  const auto cf = h.stream(h.events_path(sid2, job));
  stream_ok(big, cf, "cancelled", 5, "cancelled");
  v.expect(cf.size() >= 2, "partial layouts lost");

  v.detail << "explore " << ef.size() - 1 << ", nearby " << nf.size() - 1 << ", complete+constrained " << total
           << " layouts; resume ok; cancel in " << static_cast<int>(latency_ms) << " ms with " << cf.size() - 1
           << " partial";
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, Criterion>> criteria = {
      {"validity suite", validity},       {"oracle equivalence", oracle_equivalence},
      {"small-case values", small_cases}, {"diversity", diversity},
      {"performance", performance},       {"optimality bands", bands},
      {"model size", model_size},         {"determinism", determinism},
      {"service contract", service_contract},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    Verdict v;
    const auto t = Clock::now();
    try {
      criteria[i].second(v);
    } catch (const std::exception& e) {
      v.expect(false, std::string("exception: ") + e.what());
    }
    std::printf("AC%d %s  %s: %s [%.1f s]\n", id, v.pass ? "PASS" : "FAIL", criteria[i].first, v.detail.str().c_str(),
                seconds_since(t));
    for (const auto& f : v.failures) std::printf("      - %s\n", f.c_str());
    std::fflush(stdout);
    failed += !v.pass;
  }
  return failed ? 1 : 0;
}
