#include "gridlayout/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

namespace gridlayout {

namespace {

int clusters(std::vector<double> v, double tol) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  int count = 1;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] - v[i - 1] > tol) ++count;
  return count;
}

const PlacedElement& placed(const LayoutSolution& s, const std::string& id) {
  const auto* pe = s.find(id);
  if (!pe) throw LayoutError(ErrorKind::UnknownElementId, "no placement for element '" + id + "'");
  return *pe;
}

}  // namespace

int grid_line_count(const LayoutSolution& s, double tol) {
  std::vector<double> xs, ys;
  for (const auto& p : s.placements) {
    xs.insert(xs.end(), {p.l, p.r});
    ys.insert(ys.end(), {p.t, p.b});
  }
  return clusters(xs, tol) + clusters(ys, tol);
}

int grid_line_count(const LayoutProblem& p, const LayoutSolution& s) {
  return grid_line_count(s, geometric_tolerance(p.canvas));
}

int edge_group_count(const LayoutSolution& s, double tol) {
  std::vector<double> l, r, t, b;
  for (const auto& p : s.placements) {
    l.push_back(p.l);
    r.push_back(p.r);
    t.push_back(p.t);
    b.push_back(p.b);
  }
  return clusters(l, tol) + clusters(r, tol) + clusters(t, tol) + clusters(b, tol);
}

int rect_cases(const LayoutSolution& s, double tol) {
  if (s.placements.empty()) return 0;
  double minl = s.placements[0].l, maxr = s.placements[0].r, mint = s.placements[0].t, maxb = s.placements[0].b;
  for (const auto& p : s.placements) {
    minl = std::min(minl, p.l), maxr = std::max(maxr, p.r);
    mint = std::min(mint, p.t), maxb = std::max(maxb, p.b);
  }
  int count = 0;
  for (const auto& p : s.placements) {
    count += (p.l - minl <= tol) + (maxr - p.r <= tol) + (p.t - mint <= tol) + (maxb - p.b <= tol);
  }
  return count;
}

DistanceSignature signature(const LayoutSolution& s, double tol) {
  DistanceSignature sig;
  for (std::size_t e = 0; e < s.placements.size(); ++e) {
    for (std::size_t f = 0; f < s.placements.size(); ++f) {
      if (e == f) continue;
      const auto& a = s.placements[e];
      const auto& b = s.placements[f];
      if (a.b <= b.t + tol) ++sig.gamma;
      if (a.r <= b.l + tol) ++sig.pi;
    }
  }
  return sig;
}

int distance(const DistanceSignature& a, const DistanceSignature& b) {
  return std::abs(a.gamma - b.gamma) + std::abs(a.pi - b.pi);
}

int distance(const LayoutSolution& a, const LayoutSolution& b) {
  std::multiset<std::string> ia, ib;
  for (const auto& p : a.placements) ia.insert(p.id);
  for (const auto& p : b.placements) ib.insert(p.id);
  if (ia != ib) throw LayoutError(ErrorKind::ElementSetMismatch, "solutions place different element sets");
  return distance(signature(a), signature(b));
}

double composite_value(const LayoutProblem& p, const LayoutSolution& s) {
  const double tol = geometric_tolerance(p.canvas);
  double f = p.weights.alignment * edge_group_count(s, tol) - p.weights.rectangularity * rect_cases(s, tol);
  if (p.weights.traversal != 0) {
    for (const auto& tp : p.traversal) {
      const auto& a = placed(s, tp.a);
      const auto& b = placed(s, tp.b);
      const double dx = std::abs((a.l + a.r) - (b.l + b.r)) / 2, dy = std::abs((a.t + a.b) - (b.t + b.b)) / 2;
      f += p.weights.traversal * tp.weight * (dx + dy);
    }
  }
  return f;
}

double optimality(const LayoutProblem& p, const LayoutSolution& s, const OptimalityReference& ref) {
  const double range = ref.worst - ref.best;
  if (!(range > 1e-9)) return 100.0;
  const double pct = 100.0 * (ref.worst - composite_value(p, s)) / range;
  return std::clamp(pct, 0.0, 100.0);
}

ScoreReport score(const LayoutProblem& p, const LayoutSolution& s, const std::optional<OptimalityReference>& ref) {
  const double tol = geometric_tolerance(p.canvas);
  ScoreReport r;
  r.grid_lines = grid_line_count(s, tol);
  r.rect_cases = rect_cases(s, tol);
  const auto sig = signature(s, tol);
  r.gamma = sig.gamma;
  r.pi = sig.pi;
  r.edge_groups = edge_group_count(s, tol);
  r.objective = composite_value(p, s);
  if (ref) r.optimality_pct = optimality(p, s, *ref);
  return r;
}

void fill_stats(const LayoutProblem& p, LayoutSolution& s, const std::optional<OptimalityReference>& ref) {
  const auto r = score(p, s, ref);
  s.stats.grid_lines = r.grid_lines;
  s.stats.rect_cases = r.rect_cases;
  s.stats.gamma = r.gamma;
  s.stats.pi = r.pi;
  s.stats.objective = r.objective;
  s.stats.optimality_pct = r.optimality_pct;
}

}  // namespace gridlayout
