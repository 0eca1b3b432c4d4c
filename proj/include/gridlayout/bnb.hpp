#pragma once

#include <chrono>
#include <functional>
#include <optional>
#include <vector>

#include "gridlayout/lp_simplex.hpp"
#include "gridlayout/milp.hpp"

namespace gridlayout {

enum class MilpStatus { Optimal, Feasible, Infeasible };
enum class LimitReason { None, TimeLimit, NodeLimit, Cancelled };

const char* to_string(MilpStatus status);
const char* to_string(LimitReason reason);

struct Incumbent {
  std::vector<double> values;  // indexed by VarRef::index, integers exact
  double objective = 0;        // in the instance's own sense
};

struct SolveConfig {
  std::optional<std::chrono::duration<double>> time_limit;
  double gap_tolerance = 1e-6;
  double integrality_tolerance = 1e-6;
  long node_limit = -1;  // negative: unlimited
  /// Stop once an incumbent exists and this many nodes pass without
  /// improving it (reported as a node limit). Negative: off.
  long stall_node_limit = -1;
  /// Called on every improved incumbent, from inside the search.
  std::function<void(const Incumbent&)> incumbent_callback;
  /// Cooperative cancellation, polled at node boundaries and inside LPs.
  std::function<bool()> should_stop;
  /// Secondary objective (minimized) applied to each incumbent with the
  /// integers fixed and the primary objective held at its value.
  std::vector<Term> polish;
  /// Optional repair step: given a node's LP point, fills in an integral
  /// assignment (returns false if it cannot). The integers are then fixed
  /// and the continuous part re-solved.
  std::function<bool(std::vector<double>&)> repair;
  /// Run the rounding heuristic at the root and every this many nodes.
  int heuristic_interval = 50;
  LpOptions lp;
};

struct MilpResult {
  MilpStatus status = MilpStatus::Infeasible;
  LimitReason limit = LimitReason::None;
  std::optional<Incumbent> incumbent;
  double bound = 0;  // best proven bound, instance sense
  double gap = 0;
  long nodes = 0;
  long lp_iterations = 0;
  std::chrono::duration<double> elapsed{0};
  /// Proven bound after each processed node (instance sense).
  std::vector<double> bound_history;
};

/// LP-based branch and bound over the integer (binary) variables.
/// Best-bound node selection, deeper nodes first on ties, most fractional
/// branching with ties to the lowest index. Deterministic without limits.
MilpResult solve(const MilpInstance& inst, const SolveConfig& config = {});

/// Maximum absolute constraint violation of an assignment (bounds included).
double max_violation(const MilpInstance& inst, std::span<const double> values);

}  // namespace gridlayout
