#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "gridlayout/bnb.hpp"
#include "gridlayout/core_model.hpp"
#include "gridlayout/scoring.hpp"

namespace gridlayout {

/// Extremes of the layout space found by single-objective solves.
struct Bounds {
  int gamma_min = 0, gamma_max = 0;
  int pi_min = 0, pi_max = 0;
  int eps_min = 4;
  int rect_min = 4;
  int eps_cap = 4;      // alignment cap under which rect_min was reached
  bool proven = true;   // every extremal solve finished without a limit
};

struct DiversifyConfig {
  int count = 5;
  int grid_points = 3;
  int band = 0;
  int loosen_limit = 3;
  std::optional<std::chrono::duration<double>> per_solve_time;
  /// Node cap per solve; keeps results reproducible where a time cap cannot.
  long per_solve_nodes = 400;
  /// A solve stops once its incumbent has not improved for this many nodes.
  long per_solve_stall = 120;
  /// Whole-call budget; exceeding it before `count` solutions throws
  /// TimeBudgetExhausted with the partial list.
  std::optional<std::chrono::duration<double>> time_budget;
  int threads = 0;  // 0: hardware concurrency
  std::function<bool()> should_stop;
  /// Called for every solution entering the pool, in pool order.
  std::function<void(const LayoutSolution&)> on_solution;
  /// Called once the sweep has its extremes, before any target solve.
  std::function<void(const Bounds&)> on_bounds;
};

class TimeBudgetExhausted : public LayoutError {
 public:
  TimeBudgetExhausted(const std::string& what, std::vector<LayoutSolution> partial)
      : LayoutError(ErrorKind::TimeBudgetExhausted, what), partial_(std::move(partial)) {}
  const std::vector<LayoutSolution>& partial() const { return partial_; }

 private:
  std::vector<LayoutSolution> partial_;
};

/// A single layout minimizing the composite objective, with the search
/// statistics. `solution` is empty when the limits stop the search before a
/// layout turns up. Throws InfeasibleProblem.
struct LayoutSolve {
  std::optional<LayoutSolution> solution;
  MilpResult result;
};
LayoutSolve solve_layout(const LayoutProblem& p, const DiversifyConfig& cfg = {});

/// Six extremal solves: max/min sum of above, max/min sum of before, min
/// alignment groups, then max adherence under that alignment cap (raised
/// step by step if needed). Throws InfeasibleProblem.
Bounds compute_bounds(const LayoutProblem& p, const DiversifyConfig& cfg = {});

/// Sweeps a grid of (gamma, pi) targets with the alignment cap and adherence
/// floor from compute_bounds, loosening the cap when too few distinct
/// layouts turn up. Results are ordered by composite objective.
std::vector<LayoutSolution> diversify(const LayoutProblem& p, const DiversifyConfig& cfg = {});

/// Layouts whose signature lies within 1..radius of the seed's.
std::vector<LayoutSolution> nearby(const LayoutProblem& p, const LayoutSolution& seed, int radius, int k,
                                   const DiversifyConfig& cfg = {});

/// diversify on a problem with locked elements; locked rectangles are kept.
std::vector<LayoutSolution> complete_partial(const LayoutProblem& p, int k, const DiversifyConfig& cfg = {});

/// Best and worst composite values, from a minimizing and a maximizing solve.
OptimalityReference optimality_reference(const LayoutProblem& p, const DiversifyConfig& cfg = {});

/// A layout whose optimality lies in [lo_pct, hi_pct], found by constraining
/// the composite objective (with exact alignment and adherence counting).
std::optional<LayoutSolution> generate_in_band(const LayoutProblem& p, const OptimalityReference& ref, double lo_pct,
                                               double hi_pct, const DiversifyConfig& cfg = {});

}  // namespace gridlayout
