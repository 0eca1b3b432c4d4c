#pragma once

#include <optional>

#include "gridlayout/core_model.hpp"

namespace gridlayout {

/// Number of (Γ, Π) pairs: ordered element pairs stacked above and placed
/// before one another.
struct DistanceSignature {
  int gamma = 0;
  int pi = 0;
  bool operator==(const DistanceSignature&) const = default;
};

/// Composite objective values of the best and worst reference layouts.
struct OptimalityReference {
  double best = 0;
  double worst = 0;
};

struct ScoreReport {
  int grid_lines = 0;
  int rect_cases = 0;
  int gamma = 0;
  int pi = 0;
  int edge_groups = 0;  // distinct edge values summed over the four families
  double objective = 0;
  std::optional<double> optimality_pct;
};

/// Distinct vertical plus horizontal line coordinates used by any element
/// edge. Coordinates closer than `tol` (chained) share a line.
int grid_line_count(const LayoutSolution& s, double tol);
int grid_line_count(const LayoutProblem& p, const LayoutSolution& s);

/// Distinct left, right, top and bottom edge values, counted per family.
int edge_group_count(const LayoutSolution& s, double tol);

/// (element, side) cases whose edge lies on the smallest enclosing rectangle.
int rect_cases(const LayoutSolution& s, double tol);

/// gamma counts ordered pairs with B_e <= T_f + tol, pi pairs with R_e <= L_f + tol.
DistanceSignature signature(const LayoutSolution& s, double tol = 1e-6);

/// |Δgamma| + |Δpi|. Throws ElementSetMismatch when the element sets differ.
int distance(const LayoutSolution& a, const LayoutSolution& b);
int distance(const DistanceSignature& a, const DistanceSignature& b);

/// alignment * edge groups - rectangularity * rect cases + traversal * center
/// L1 distances, with the problem's weights.
double composite_value(const LayoutProblem& p, const LayoutSolution& s);

/// 100 * (worst - f) / (worst - best), clamped to [0, 100]; 100 when the
/// reference range is empty.
double optimality(const LayoutProblem& p, const LayoutSolution& s, const OptimalityReference& ref);

ScoreReport score(const LayoutProblem& p, const LayoutSolution& s,
                  const std::optional<OptimalityReference>& ref = std::nullopt);

/// Fills s.stats from the geometry (optimality only with a reference).
void fill_stats(const LayoutProblem& p, LayoutSolution& s,
                const std::optional<OptimalityReference>& ref = std::nullopt);

}  // namespace gridlayout
