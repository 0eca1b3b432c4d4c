#include "gridlayout/diversifier.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "gridlayout/milp.hpp"

namespace gridlayout {

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  MilpResult result;
  std::optional<LayoutSolution> solution;
};

// Shared limits for one diversifier call.
struct Budget {
  const DiversifyConfig& cfg;
  std::optional<Clock::time_point> deadline;

  explicit Budget(const DiversifyConfig& c) : cfg(c) {
    if (c.time_budget) deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(*c.time_budget);
  }
  bool expired() const { return deadline && Clock::now() >= *deadline; }
  bool cancelled() const { return cfg.should_stop && cfg.should_stop(); }

  SolveConfig solve_config(bool stall) const {
    SolveConfig sc;
    sc.node_limit = cfg.per_solve_nodes;
    if (stall) sc.stall_node_limit = cfg.per_solve_stall;
    std::optional<std::chrono::duration<double>> limit = cfg.per_solve_time;
    if (deadline) {
      const std::chrono::duration<double> left = *deadline - Clock::now();
      if (!limit || left < *limit) limit = std::max(left, std::chrono::duration<double>(0));
    }
    sc.time_limit = limit;
    sc.should_stop = cfg.should_stop;
    return sc;
  }
};

Outcome run(const LayoutProblem& p, const LayoutModel& model, const Budget& budget, bool stall = true) {
  SolveConfig sc = budget.solve_config(stall);
  const auto& inst = model.instance;
  sc.polish = compaction_terms(inst, model.n);
  sc.repair = LayoutRepair(inst, p);
  Outcome out;
  out.result = solve(inst, sc);
  if (out.result.incumbent) {
    LayoutSolution s;
    s.placements = decode_placements(inst, p, out.result.incumbent->values);
    fill_stats(p, s);
    out.solution = std::move(s);
  }
  return out;
}

int worker_count(const DiversifyConfig& cfg, std::size_t jobs) {
  int t = cfg.threads > 0 ? cfg.threads : static_cast<int>(std::thread::hardware_concurrency());
  return std::clamp(t, 1, static_cast<int>(std::max<std::size_t>(jobs, 1)));
}

// Runs jobs on a small pool; results land at their own index.
template <typename Job>
std::vector<Outcome> run_parallel(const std::vector<Job>& jobs, int workers,
                                  const std::function<Outcome(const Job&)>& fn) {
  std::vector<Outcome> out(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        out[i] = fn(jobs[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (error) std::rethrow_exception(error);
  return out;
}

// Pool identity: geometric signature plus the grid-line coordinates.
struct LayoutKey {
  std::pair<int, int> sig;
  std::vector<long long> lines;
  auto operator<=>(const LayoutKey&) const = default;
};

LayoutKey key_of(const LayoutProblem& p, const LayoutSolution& s) {
  LayoutKey k;
  const double tol = geometric_tolerance(p.canvas);
  const auto sig = signature(s, tol);
  k.sig = {sig.gamma, sig.pi};
  std::vector<double> xs, ys;
  for (const auto& pe : s.placements) {
    xs.insert(xs.end(), {pe.l, pe.r});
    ys.insert(ys.end(), {pe.t, pe.b});
  }
  auto add = [&](std::vector<double> v, long long axis) {
    std::sort(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i)
      if (i == 0 || v[i] - v[i - 1] > tol) k.lines.push_back(axis * (1ll << 40) + std::llround(v[i] / tol));
  };
  add(xs, 0);
  add(ys, 1);
  return k;
}

class Pool {
 public:
  Pool(const LayoutProblem& p, const DiversifyConfig& cfg) : p_(p), cfg_(cfg) {}

  bool add(const LayoutSolution& s) {
    if (!seen_.insert(key_of(p_, s)).second) return false;
    items_.push_back(s);
    if (cfg_.on_solution) cfg_.on_solution(s);
    return true;
  }
  std::size_t size() const { return items_.size(); }
  std::size_t distinct_signatures() const {
    std::set<std::pair<int, int>> sigs;
    for (const auto& s : items_) sigs.insert({s.stats.gamma, s.stats.pi});
    return sigs.size();
  }

  // Up to k layouts by composite objective; layouts with a signature not yet
  // taken go first so the selection spreads over the signature space.
  std::vector<LayoutSolution> select(int k) const {
    std::vector<std::size_t> order(items_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return items_[a].stats.objective < items_[b].stats.objective - 1e-9;
    });
    std::vector<std::size_t> chosen;
    std::set<std::pair<int, int>> sigs;
    std::vector<bool> used(items_.size(), false);
    for (std::size_t i : order) {
      if (static_cast<int>(chosen.size()) >= k) break;
      if (sigs.insert({items_[i].stats.gamma, items_[i].stats.pi}).second) chosen.push_back(i), used[i] = true;
    }
    for (std::size_t i : order) {
      if (static_cast<int>(chosen.size()) >= k) break;
      if (!used[i]) chosen.push_back(i), used[i] = true;
    }
    std::stable_sort(chosen.begin(), chosen.end(), [&](std::size_t a, std::size_t b) {
      return items_[a].stats.objective < items_[b].stats.objective - 1e-9;
    });
    std::vector<LayoutSolution> out;
    for (std::size_t i : chosen) out.push_back(items_[i]);
    return out;
  }

 private:
  const LayoutProblem& p_;
  const DiversifyConfig& cfg_;
  std::set<LayoutKey> seen_;
  std::vector<LayoutSolution> items_;
};

struct Cancelled {};

struct BoundsRun {
  Bounds bounds;
  std::optional<LayoutSolution> anchor;  // best-aligned, most rectangular layout
  std::vector<LayoutSolution> extremes;  // layouts from the signature solves
};

int objective_value(const MilpResult& r) { return static_cast<int>(std::lround(r.incumbent->objective)); }

BoundsRun bounds_impl(const LayoutProblem& p, const Budget& budget) {
  const auto base = build_layout_model(p);
  BoundsRun out;
  auto extremal = [&](ObjectiveMode mode) {
    LayoutModel m = base;
    set_objective(m.instance, mode, p.weights, m.handles);
    // Signature extremes usually close quickly; they bound the whole grid.
    return run(p, m, budget, mode != ObjectiveMode::MinEpsilon);
  };
  auto check = [&](const Outcome& o) {
    if (o.result.status == MilpStatus::Infeasible)
      throw LayoutError(ErrorKind::InfeasibleProblem, "no layout satisfies the problem constraints");
    if (!o.result.incumbent) {
      if (budget.cancelled()) throw Cancelled{};
      throw TimeBudgetExhausted("no layout found within the solve limits", {});
    }
    if (o.result.status != MilpStatus::Optimal) out.bounds.proven = false;
    return objective_value(o.result);
  };
  const ObjectiveMode modes[] = {ObjectiveMode::MinGamma, ObjectiveMode::MaxGamma, ObjectiveMode::MinPi,
                                 ObjectiveMode::MaxPi, ObjectiveMode::MinEpsilon};
  std::vector<ObjectiveMode> jobs(std::begin(modes), std::end(modes));
  auto results = run_parallel<ObjectiveMode>(jobs, worker_count(budget.cfg, jobs.size()), extremal);
  out.bounds.gamma_min = check(results[0]);
  out.bounds.gamma_max = check(results[1]);
  out.bounds.pi_min = check(results[2]);
  out.bounds.pi_max = check(results[3]);
  out.bounds.eps_min = check(results[4]);
  out.anchor = results[4].solution;
  for (int i = 0; i < 4; ++i) out.extremes.push_back(*results[i].solution);

  for (int step = 0; step <= budget.cfg.loosen_limit; ++step) {
    LayoutModel m = base;
    set_objective(m.instance, ObjectiveMode::MaxRect, p.weights, m.handles);
    add_bound(m.instance, m.handles.alignment->epsilon, Sense::LessEqual, out.bounds.eps_min + step, "eps_cap");
    auto o = run(p, m, budget);
    if (!o.result.incumbent) {
      if (o.result.status != MilpStatus::Infeasible) out.bounds.proven = false;
      continue;
    }
    if (o.result.status != MilpStatus::Optimal) out.bounds.proven = false;
    out.bounds.rect_min = objective_value(o.result);
    out.bounds.eps_cap = out.bounds.eps_min + step;
    out.anchor = o.solution;
    return out;
  }
  // No adherence solve produced a layout: fall back to the alignment optimum.
  out.bounds.proven = false;
  out.bounds.eps_cap = out.bounds.eps_min;
  out.bounds.rect_min = out.anchor ? out.anchor->stats.rect_cases : 4;
  return out;
}

std::vector<int> axis_values(int lo, int hi, int points) {
  std::vector<int> v;
  const int g = std::max(points, 2);
  for (int i = 0; i < g; ++i) {
    const int x = static_cast<int>(std::lround(lo + (hi - lo) * static_cast<double>(i) / (g - 1)));
    if (v.empty() || v.back() != x) v.push_back(x);
  }
  return v;
}

struct Point {
  int gamma, pi;
};

std::vector<LayoutSolution> sweep(const LayoutProblem& p, const DiversifyConfig& cfg, const Budget& budget) {
  if (cfg.count < 1) throw LayoutError(ErrorKind::InvalidProblem, "count must be at least 1");
  if (cfg.grid_points < 2) throw LayoutError(ErrorKind::InvalidProblem, "grid_points must be at least 2");
  Pool pool(p, cfg);
  auto finish = [&](bool complete) {
    auto out = pool.select(cfg.count);
    if (!complete && budget.expired() && static_cast<int>(out.size()) < cfg.count)
      throw TimeBudgetExhausted("time budget ran out before enough layouts were found", out);
    return out;
  };
  BoundsRun b;
  try {
    b = bounds_impl(p, budget);
  } catch (const Cancelled&) {
    return {};
  }
  if (cfg.on_bounds) cfg.on_bounds(b.bounds);
  if (b.anchor) pool.add(*b.anchor);
  if (static_cast<int>(pool.distinct_signatures()) >= cfg.count) return finish(true);

  std::vector<Point> points;
  for (int g : axis_values(b.bounds.gamma_min, b.bounds.gamma_max, cfg.grid_points))
    for (int pi : axis_values(b.bounds.pi_min, b.bounds.pi_max, cfg.grid_points)) points.push_back({g, pi});

  const auto base = build_layout_model(p);
  const int n = base.n;
  const double tol = geometric_tolerance(p.canvas);
  std::vector<bool> done(points.size(), false);
  for (int step = 0; step <= cfg.loosen_limit; ++step) {
    if (budget.expired() || budget.cancelled()) return finish(false);
    // Each step gives up one alignment group and one adherence case.
    const int cap = b.bounds.eps_cap + step;
    const int floor = std::max(4, b.bounds.rect_min - step);
    // Extremal layouts count as grid corners once they meet the cap and floor.
    for (const auto& s : b.extremes)
      if (edge_group_count(s, tol) <= cap && s.stats.rect_cases >= floor) pool.add(s);
    if (static_cast<int>(pool.distinct_signatures()) >= cfg.count) return finish(true);
    std::vector<std::size_t> todo;
    for (std::size_t i = 0; i < points.size(); ++i)
      if (!done[i]) todo.push_back(i);
    if (todo.empty()) break;
    auto solve_point = [&](const std::size_t& i) {
      LayoutModel m = base;
      set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
      enforce_signature(m.instance, n, points[i].gamma, points[i].pi, cfg.band);
      add_bound(m.instance, m.handles.alignment->epsilon, Sense::LessEqual, cap, "eps_cap");
      add_bound(m.instance, m.handles.rect->adherence, Sense::GreaterEqual, floor, "rect_floor");
      return run(p, m, budget);
    };
    // Chunks as large as the shortfall; the pool state alone fixes their size,
    // so results do not depend on the thread count.
    for (std::size_t at = 0; at < todo.size();) {
      if (budget.expired() || budget.cancelled()) return finish(false);
      const auto need = static_cast<std::size_t>(std::max(1, cfg.count - static_cast<int>(pool.distinct_signatures())));
      std::vector<std::size_t> chunk(todo.begin() + at, todo.begin() + std::min(todo.size(), at + need));
      at += chunk.size();
      auto results = run_parallel<std::size_t>(chunk, worker_count(cfg, chunk.size()), solve_point);
      for (std::size_t j = 0; j < chunk.size(); ++j)
        if (results[j].solution) {
          pool.add(*results[j].solution);
          done[chunk[j]] = true;
        }
      if (static_cast<int>(pool.distinct_signatures()) >= cfg.count) return finish(true);
    }
  }
  return finish(!budget.expired());
}

}  // namespace

LayoutSolve solve_layout(const LayoutProblem& p, const DiversifyConfig& cfg) {
  Budget budget(cfg);
  auto m = build_layout_model(p);
  set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
  auto o = run(p, m, budget);
  if (o.result.status == MilpStatus::Infeasible && o.result.limit == LimitReason::None)
    throw LayoutError(ErrorKind::InfeasibleProblem, "no layout satisfies the problem constraints");
  if (o.solution && cfg.on_solution) cfg.on_solution(*o.solution);
  return {std::move(o.solution), std::move(o.result)};
}

Bounds compute_bounds(const LayoutProblem& p, const DiversifyConfig& cfg) {
  Budget budget(cfg);
  try {
    return bounds_impl(p, budget).bounds;
  } catch (const Cancelled&) {
    throw TimeBudgetExhausted("bounds computation was cancelled", {});
  }
}

std::vector<LayoutSolution> diversify(const LayoutProblem& p, const DiversifyConfig& cfg) {
  Budget budget(cfg);
  return sweep(p, cfg, budget);
}

std::vector<LayoutSolution> complete_partial(const LayoutProblem& p, int k, const DiversifyConfig& cfg) {
  DiversifyConfig c = cfg;
  c.count = k;
  return diversify(p, c);
}

std::vector<LayoutSolution> nearby(const LayoutProblem& p, const LayoutSolution& seed, int radius, int k,
                                   const DiversifyConfig& cfg) {
  if (radius < 1 || k < 1) return {};
  const auto issues = validate_solution(p, seed);
  if (!issues.empty()) throw LayoutError(ErrorKind::InvalidProblem, "seed layout is not valid for the problem");
  Budget budget(cfg);
  const double tol = geometric_tolerance(p.canvas);
  const auto origin = signature(seed, tol);
  const auto seed_key = key_of(p, seed);
  const int n = static_cast<int>(p.elements.size());
  const int top = n * (n - 1);
  std::vector<Point> points;
  for (int d = 1; d <= radius; ++d)
    for (int dg = -d; dg <= d; ++dg)
      for (int sgn : {-1, 1}) {
        const int dp = sgn * (d - std::abs(dg));
        if (dp == 0 && sgn > 0) continue;
        const int g = origin.gamma + dg, pi = origin.pi + dp;
        if (g < 0 || pi < 0 || g > top || pi > top) continue;
        points.push_back({g, pi});
      }

  const auto base = build_layout_model(p);
  DiversifyConfig quiet = cfg;
  quiet.count = k;
  Pool pool(p, quiet);
  const int workers = worker_count(cfg, points.size());
  auto solve_point = [&](const Point& pt) {
    LayoutModel m = base;
    set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
    enforce_signature(m.instance, n, pt.gamma, pt.pi, 0);
    return run(p, m, budget);
  };
  for (std::size_t at = 0; at < points.size() && static_cast<int>(pool.size()) < k; at += workers) {
    if (budget.expired() || budget.cancelled()) break;
    std::vector<Point> batch(points.begin() + at, points.begin() + std::min(points.size(), at + workers));
    for (const auto& o : run_parallel<Point>(batch, workers, solve_point)) {
      if (!o.solution || static_cast<int>(pool.size()) >= k) continue;
      const int d = distance(origin, signature(*o.solution, tol));
      if (d < 1 || d > radius || key_of(p, *o.solution) == seed_key) continue;
      pool.add(*o.solution);
    }
  }
  return pool.select(k);
}

OptimalityReference optimality_reference(const LayoutProblem& p, const DiversifyConfig& cfg) {
  Budget budget(cfg);
  auto best = build_layout_model(p);
  set_objective(best.instance, ObjectiveMode::Composite, p.weights, best.handles);
  ModelOptions exact;
  exact.exact_metrics = true;
  auto worst = build_layout_model(p, exact);
  set_objective(worst.instance, ObjectiveMode::Composite, p.weights, worst.handles);
  worst.instance.objective().sense = ObjectiveSense::Maximize;
  std::vector<const LayoutModel*> jobs = {&best, &worst};
  auto results = run_parallel<const LayoutModel*>(jobs, worker_count(cfg, 2),
                                                  [&](const LayoutModel* m) { return run(p, *m, budget); });
  for (const auto& o : results) {
    if (o.result.status == MilpStatus::Infeasible)
      throw LayoutError(ErrorKind::InfeasibleProblem, "no layout satisfies the problem constraints");
    if (!o.solution) throw TimeBudgetExhausted("reference solve found no layout", {});
  }
  OptimalityReference ref;
  ref.best = composite_value(p, *results[0].solution);
  ref.worst = composite_value(p, *results[1].solution);
  return ref;
}

std::optional<LayoutSolution> generate_in_band(const LayoutProblem& p, const OptimalityReference& ref, double lo_pct,
                                               double hi_pct, const DiversifyConfig& cfg) {
  Budget budget(cfg);
  ModelOptions exact;
  exact.exact_metrics = true;
  auto m = build_layout_model(p, exact);
  set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
  const auto f = m.instance.objective().terms;
  const double range = ref.worst - ref.best;
  // optimality = 100 (worst - f) / range, so a percentage band is an f band.
  const double f_lo = ref.worst - hi_pct / 100.0 * range, f_hi = ref.worst - lo_pct / 100.0 * range;
  add_bound(m.instance, f, Sense::GreaterEqual, f_lo - 1e-9, "band_lo");
  add_bound(m.instance, f, Sense::LessEqual, f_hi + 1e-9, "band_hi");
  // Push towards the band from the side it lies on, so the search meets it early.
  if (lo_pct + hi_pct < 100) m.instance.objective().sense = ObjectiveSense::Maximize;
  auto o = run(p, m, budget);
  if (!o.solution) return std::nullopt;
  fill_stats(p, *o.solution, ref);
  return o.solution;
}

}  // namespace gridlayout
