#include <doctest.h>

#include "corpus.hpp"
#include "gridlayout/bnb.hpp"
#include "gridlayout/lp_simplex.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace gridlayout;
using namespace gridlayout::testing;

namespace {

LayoutProblem two_equal() { return make_problem(100, 100, {flex("a", 10, 100, 10, 100), flex("b", 10, 100, 10, 100)}); }

// Three 100x100 elements on a 300x100 canvas: only single-row orderings fit.
LayoutProblem forced_row() {
  return make_problem(300, 100, {fixed("a", 100, 100), fixed("b", 100, 100), fixed("c", 100, 100)});
}

double at(const Solved& s, Role role, int a, int b = -1) {
  return s.result.incumbent->values[s.model.instance.at({role, a, b})];
}

}  // namespace

TEST_CASE("fixed binaries reduce to one LP") {
  MilpInstance inst;
  const int x = inst.add_var("x", VarKind::Continuous, 0, 10);
  const int y = inst.add_var("y", VarKind::Binary, 1, 1);
  const int z = inst.add_var("z", VarKind::Binary, 0, 0);
  inst.add_constraint({{1, x}, {3, y}, {-2, z}}, Sense::LessEqual, 7);
  inst.objective() = {ObjectiveSense::Maximize, {{2, x}, {1, y}, {5, z}}, 0};
  const auto r = solve(inst);
  REQUIRE(r.status == MilpStatus::Optimal);
  CHECK(r.nodes == 1);
  CHECK(r.incumbent->objective == doctest::Approx(solve_lp(inst).objective));
  CHECK(r.incumbent->objective == doctest::Approx(9));
  CHECK(r.gap == doctest::Approx(0));
}

TEST_CASE("knapsack against enumeration") {
  const double w[] = {12, 7, 11, 8, 9, 6, 5};
  const double v[] = {24, 13, 23, 15, 16, 11, 8};
  MilpInstance inst;
  std::vector<Term> cap, obj;
  for (int i = 0; i < 7; ++i) {
    const int var = inst.add_var("k" + std::to_string(i), VarKind::Binary, 0, 1);
    cap.push_back({w[i], var});
    obj.push_back({v[i], var});
  }
  inst.add_constraint(cap, Sense::LessEqual, 26);
  inst.objective() = {ObjectiveSense::Maximize, obj, 0};
  double best = 0;
  for (int m = 0; m < 128; ++m) {
    double tw = 0, tv = 0;
    for (int i = 0; i < 7; ++i)
      if (m >> i & 1) tw += w[i], tv += v[i];
    if (tw <= 26) best = std::max(best, tv);
  }
  const auto r = solve(inst);
  REQUIRE(r.status == MilpStatus::Optimal);
  CHECK(r.incumbent->objective == doctest::Approx(best));
  CHECK(r.bound == doctest::Approx(best));
  for (std::size_t i = 1; i < r.bound_history.size(); ++i) CHECK(r.bound_history[i] <= r.bound_history[i - 1] + 1e-9);
}

TEST_CASE("infeasible instance") {
  MilpInstance inst;
  const int a = inst.add_var("a", VarKind::Binary, 0, 1);
  const int b = inst.add_var("b", VarKind::Binary, 0, 1);
  inst.add_constraint({{1, a}, {1, b}}, Sense::GreaterEqual, 1.5);
  inst.add_constraint({{1, a}, {-1, b}}, Sense::Equal, 0.5);
  const auto r = solve(inst);
  CHECK(r.status == MilpStatus::Infeasible);
  CHECK_FALSE(r.incumbent.has_value());
}

TEST_CASE("two equal elements: minimum alignment is 6") {
  auto p = two_equal();
  auto s = solve_mode(p, ObjectiveMode::MinEpsilon);
  REQUIRE(s.result.status == MilpStatus::Optimal);
  CHECK(s.result.incumbent->objective == doctest::Approx(6));
  CHECK(oracle::min_epsilon(p) == 6);
  CHECK(validate_solution(p, s.solution).empty());
}

TEST_CASE("two elements: signature extremes") {
  auto p = two_equal();
  CHECK(solve_mode(p, ObjectiveMode::MaxGamma).result.incumbent->objective == doctest::Approx(1));
  CHECK(solve_mode(p, ObjectiveMode::MinGamma).result.incumbent->objective == doctest::Approx(0));
  CHECK(solve_mode(p, ObjectiveMode::MaxPi).result.incumbent->objective == doctest::Approx(1));
  CHECK(solve_mode(p, ObjectiveMode::MinPi).result.incumbent->objective == doctest::Approx(0));
  const auto range = oracle::signature_range(oracle::feasible_patterns(p));
  CHECK(range.gamma_min == 0);
  CHECK(range.gamma_max == 1);
}

TEST_CASE("forced row has exactly six orderings") {
  auto p = forced_row();
  const auto pats = oracle::feasible_patterns(p);
  CHECK(pats.size() == 6);
  for (const auto& pat : pats) {
    CHECK(pat.gamma() == 0);
    CHECK(pat.pi() == 3);
  }
  auto s = solve_mode(p, ObjectiveMode::MinEpsilon);
  REQUIRE(s.result.status == MilpStatus::Optimal);
  CHECK(s.result.incumbent->objective == doctest::Approx(*oracle::min_epsilon(p)));
  // Every ordering is reachable: forbidding the found one still leaves a layout.
  auto r = solve_mode(p, ObjectiveMode::MaxPi);
  CHECK(r.result.incumbent->objective == doctest::Approx(3));
  CHECK(solve_mode(p, ObjectiveMode::MinPi).result.incumbent->objective == doctest::Approx(3));
}

TEST_CASE("oracle agreement on small problems") {
  const auto corpus = small_corpus(12, 7);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& p = corpus[i];
    CAPTURE(i);
    const auto eps = oracle::min_epsilon(p);
    auto s = solve_mode(p, ObjectiveMode::MinEpsilon);
    if (!eps) {
      CHECK(s.result.status == MilpStatus::Infeasible);
      continue;
    }
    REQUIRE(s.result.status == MilpStatus::Optimal);
    CHECK(s.result.incumbent->objective == doctest::Approx(*eps));
    CHECK(validate_solution(p, s.solution).empty());
    auto r = solve_mode(p, ObjectiveMode::MaxRect);
    REQUIRE(r.result.status == MilpStatus::Optimal);
    CHECK(r.result.incumbent->objective == doctest::Approx(*oracle::max_rect(p)));
  }
}

TEST_CASE("relation binaries match the geometry") {
  auto p = make_problem(200, 150, {flex("a", 20, 120, 20, 80), flex("b", 30, 90, 20, 60), flex("c", 40, 60, 30, 60)});
  p.gutter = 5;
  for (auto mode : {ObjectiveMode::Composite, ObjectiveMode::MaxGamma, ObjectiveMode::MinPi}) {
    auto s = solve_mode(p, mode);
    REQUIRE(s.result.incumbent);
    const double tol = 1e-6;
    for (int e = 0; e < 3; ++e)
      for (int f = 0; f < 3; ++f) {
        if (e == f) continue;
        const double gap_v = at(s, Role::Top, f) - at(s, Role::Bottom, e);
        const double gap_h = at(s, Role::Left, f) - at(s, Role::Right, e);
        if (at(s, Role::Above, e, f) > 0.5) CHECK(gap_v >= p.gutter - tol);
        else CHECK(gap_v <= tol);
        if (at(s, Role::Before, e, f) > 0.5) CHECK(gap_h >= p.gutter - tol);
        else CHECK(gap_h <= tol);
      }
  }
}

TEST_CASE("incumbents and bounds over a limited run") {
  std::vector<Element> es;
  for (int i = 0; i < 5; ++i) es.push_back(flex("e" + std::to_string(i), 10, 100, 10, 100));
  auto p = make_problem(100, 100, es);
  auto m = build_layout_model(p);
  set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
  std::vector<Incumbent> seen;
  SolveConfig cfg;
  cfg.node_limit = 300;
  cfg.polish = compaction_terms(m.instance, m.n);
  cfg.repair = LayoutRepair(m.instance, p);
  cfg.incumbent_callback = [&](const Incumbent& inc) { seen.push_back(inc); };
  const auto r = solve(m.instance, cfg);
  CHECK(r.status == MilpStatus::Feasible);
  CHECK(r.limit == LimitReason::NodeLimit);
  REQUIRE(r.incumbent);
  REQUIRE(!seen.empty());
  CHECK(seen.back().objective == r.incumbent->objective);
  for (std::size_t i = 1; i < seen.size(); ++i) CHECK(seen[i].objective < seen[i - 1].objective);
  for (const auto& inc : seen) {
    CHECK(max_violation(m.instance, inc.values) <= 1e-7);
    LayoutSolution sol;
    sol.placements = decode_placements(m.instance, p, inc.values);
    CHECK(validate_solution(p, sol).empty());
  }
  CHECK(r.bound <= r.incumbent->objective + 1e-9);
  for (std::size_t i = 1; i < r.bound_history.size(); ++i) CHECK(r.bound_history[i] >= r.bound_history[i - 1] - 1e-9);

  const auto again = solve(m.instance, cfg);
  CHECK(again.incumbent->values == r.incumbent->values);
  CHECK(again.nodes == r.nodes);
}

TEST_CASE("gap zero never beats a completed run") {
  for (const auto& p : small_corpus(6, 99)) {
    auto first = solve_mode(p, ObjectiveMode::Composite);
    if (first.result.status != MilpStatus::Optimal) continue;
    SolveConfig exact;
    exact.gap_tolerance = 0;
    auto second = solve_mode(p, ObjectiveMode::Composite, {}, exact);
    REQUIRE(second.result.status == MilpStatus::Optimal);
    CHECK(second.result.incumbent->objective >= first.result.incumbent->objective - 1e-6);
  }
}

TEST_CASE("stop requests") {
  std::vector<Element> es;
  for (int i = 0; i < 6; ++i) es.push_back(flex("e" + std::to_string(i), 10, 100, 10, 100));
  auto p = make_problem(100, 100, es);
  SolveConfig cfg;
  int polls = 0;
  cfg.should_stop = [&] { return ++polls > 50; };
  auto s = solve_mode(p, ObjectiveMode::MinEpsilon, {}, cfg);
  CHECK(s.result.status == MilpStatus::Feasible);
  CHECK(s.result.limit == LimitReason::Cancelled);

  SolveConfig timed;
  timed.time_limit = std::chrono::duration<double>(0.2);
  auto t = solve_mode(p, ObjectiveMode::MinEpsilon, {}, timed);
  CHECK(t.result.limit == LimitReason::TimeLimit);
  CHECK(t.result.elapsed.count() < 2.0);
  if (t.result.incumbent) CHECK(t.result.bound <= t.result.incumbent->objective);
}

TEST_CASE("placement preferences and locks are honoured") {
  auto p = make_problem(120, 120, {flex("top", 20, 120, 20, 40), flex("x", 20, 60, 20, 60), flex("y", 20, 60, 20, 60)});
  p.elements[0].v_pref = VerticalPref::Top;
  p.elements[1].locked = Rect{60, 60, 40, 40};
  auto s = solve_mode(p, ObjectiveMode::Composite);
  REQUIRE(s.result.status == MilpStatus::Optimal);
  CHECK(validate_solution(p, s.solution).empty());
  const auto* x = s.solution.find("x");
  CHECK(x->l == 60);
  CHECK(x->t == 60);
  const auto* top = s.solution.find("top");
  for (const auto& pe : s.solution.placements)
    if (pe.id != "top") CHECK(pe.b > top->t);

  auto q = make_problem(100, 100, {fixed("a", 60, 60), fixed("b", 60, 60)});
  q.elements[0].locked = Rect{0, 0, 60, 60};
  q.elements[1].locked = Rect{40, 40, 60, 60};
  auto m = build_layout_model(q);
  CHECK(solve(m.instance).status == MilpStatus::Infeasible);
}
