#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <set>

#include "gridlayout/lp_simplex.hpp"
#include "gridlayout/milp.hpp"

namespace gridlayout {

namespace {
constexpr int kMaxCoverCuts = 4000;
}  // namespace

// ---------------------------------------------------------------------------
// MilpInstance

int MilpInstance::add_var(std::string name, VarKind kind, double lower, double upper) {
  if (kind == VarKind::Binary) {
    lower = std::max(lower, 0.0);
    upper = std::min(upper, 1.0);
  }
  VarRef v;
  v.index = static_cast<int>(vars_.size());
  v.name = std::move(name);
  v.kind = kind;
  v.lower = lower;
  v.upper = upper;
  vars_.push_back(std::move(v));
  return vars_.back().index;
}

int MilpInstance::add_var(VarKey key, std::string name, VarKind kind, double lower, double upper) {
  const int idx = add_var(std::move(name), kind, lower, upper);
  var_map_.emplace(key, idx);
  return idx;
}

int MilpInstance::add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name) {
  if (terms.empty()) throw LayoutError(ErrorKind::InvalidProblem, "constraint '" + name + "' has no terms");
  for (const auto& t : terms) {
    if (t.var < 0 || t.var >= num_vars() || !std::isfinite(t.coef))
      throw LayoutError(ErrorKind::UnknownHandle, "constraint '" + name + "' references an unknown variable");
  }
  LinearConstraint c;
  c.terms = std::move(terms);
  c.sense = sense;
  c.rhs = rhs;
  c.name = std::move(name);
  constraints_.push_back(std::move(c));
  return static_cast<int>(constraints_.size()) - 1;
}

std::optional<int> MilpInstance::find(const VarKey& key) const {
  auto it = var_map_.find(key);
  if (it == var_map_.end()) return std::nullopt;
  return it->second;
}

int MilpInstance::at(const VarKey& key) const {
  auto v = find(key);
  if (!v) throw LayoutError(ErrorKind::UnknownHandle, "no variable for requested role");
  return *v;
}

int MilpInstance::num_active_constraints() const {
  return static_cast<int>(std::count_if(constraints_.begin(), constraints_.end(),
                                        [](const LinearConstraint& c) { return c.active; }));
}

int MilpInstance::count_vars(VarKind kind) const {
  return static_cast<int>(
      std::count_if(vars_.begin(), vars_.end(), [kind](const VarRef& v) { return v.kind == kind; }));
}

int MilpInstance::count_role(Role role) const {
  return static_cast<int>(
      std::count_if(var_map_.begin(), var_map_.end(), [role](const auto& kv) { return kv.first.role == role; }));
}

void MilpInstance::set_bounds(int var, double lower, double upper) {
  vars_.at(var).lower = lower;
  vars_.at(var).upper = upper;
}

void MilpInstance::compact_tail() {
  while (!constraints_.empty() && !constraints_.back().active) constraints_.pop_back();
}

// ---------------------------------------------------------------------------
// Builder

namespace {

std::string sanitize(const std::string& id) {
  std::string out;
  for (char ch : id) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_') ? ch : '_';
  return out.empty() ? std::string("_") : out;
}

// Element names used inside variable names; made unique if sanitizing collides.
std::vector<std::string> element_tags(const LayoutProblem& p) {
  std::vector<std::string> tags;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    std::string tag = sanitize(p.elements[i].id);
    if (!seen.insert(tag).second) {
      tag += "_" + std::to_string(i);
      seen.insert(tag);
    }
    tags.push_back(tag);
  }
  return tags;
}

const char* family_tag(Family f) {
  switch (f) {
    case Family::Left: return "L";
    case Family::Right: return "R";
    case Family::Top: return "T";
    case Family::Bottom: return "B";
  }
  return "?";
}

Role edge_role(Family f) {
  switch (f) {
    case Family::Left: return Role::Left;
    case Family::Right: return Role::Right;
    case Family::Top: return Role::Top;
    case Family::Bottom: return Role::Bottom;
  }
  return Role::Left;
}

bool horizontal(Family f) { return f == Family::Left || f == Family::Right; }

void check_locks(const LayoutProblem& p) {
  const double tol = geometric_tolerance(p.canvas);
  for (const auto& e : p.elements) {
    if (!e.locked) continue;
    const Rect& k = *e.locked;
    const bool inside = k.l >= -tol && k.t >= -tol && k.r() <= p.canvas.width + tol && k.b() <= p.canvas.height + tol;
    const bool sized = k.w >= e.min_width - tol && k.w <= e.max_width + tol && k.h >= e.min_height - tol &&
                       k.h <= e.max_height + tol;
    if (!inside || !sized)
      throw LayoutError(ErrorKind::InfeasibleLock, "locked rectangle of '" + e.id + "' violates canvas or size bounds");
  }
}

}  // namespace

int geom_var(const MilpInstance& inst, int element, Role role) { return inst.at({role, element}); }
int above_var(const MilpInstance& inst, int e, int f) { return inst.at({Role::Above, e, f}); }
int before_var(const MilpInstance& inst, int e, int f) { return inst.at({Role::Before, e, f}); }

MilpInstance build_core(const LayoutProblem& p) {
  check_locks(p);
  for (const auto& v : validate_problem(p)) {
    if (v.kind == ViolationKind::LockOverlap) continue;  // left to the solver: infeasible
    throw LayoutError(ErrorKind::InvalidProblem, std::string(to_string(v.kind)) + " at " + v.field + ": " + v.message);
  }
  MilpInstance inst;
  const int n = static_cast<int>(p.elements.size());
  const double W = p.canvas.width, H = p.canvas.height, g = p.gutter;
  const auto tags = element_tags(p);

  for (int e = 0; e < n; ++e) {
    const auto& el = p.elements[e];
    const auto& t = tags[e];
    const int l = inst.add_var({Role::Left, e}, "L_" + t, VarKind::Continuous, 0, W - el.min_width);
    const int r = inst.add_var({Role::Right, e}, "R_" + t, VarKind::Continuous, el.min_width, W);
    const int tp = inst.add_var({Role::Top, e}, "T_" + t, VarKind::Continuous, 0, H - el.min_height);
    const int b = inst.add_var({Role::Bottom, e}, "B_" + t, VarKind::Continuous, el.min_height, H);
    const int w = inst.add_var({Role::Width, e}, "W_" + t, VarKind::Continuous, el.min_width, el.max_width);
    const int h = inst.add_var({Role::Height, e}, "H_" + t, VarKind::Continuous, el.min_height, el.max_height);
    inst.add_constraint({{1, w}, {-1, r}, {1, l}}, Sense::Equal, 0, "width_" + t);
    inst.add_constraint({{1, h}, {-1, b}, {1, tp}}, Sense::Equal, 0, "height_" + t);
    if (el.locked) {
      const Rect& k = *el.locked;
      inst.add_constraint({{1, l}}, Sense::Equal, k.l, "lockL_" + t);
      inst.add_constraint({{1, r}}, Sense::Equal, k.r(), "lockR_" + t);
      inst.add_constraint({{1, tp}}, Sense::Equal, k.t, "lockT_" + t);
      inst.add_constraint({{1, b}}, Sense::Equal, k.b(), "lockB_" + t);
    }
  }
  for (int e = 0; e < n; ++e) {
    for (int f = 0; f < n; ++f) {
      if (e == f) continue;
      inst.add_var({Role::Above, e, f}, "sigma_" + tags[e] + "_" + tags[f], VarKind::Binary, 0, 1);
      inst.add_var({Role::Before, e, f}, "lambda_" + tags[e] + "_" + tags[f], VarKind::Binary, 0, 1);
    }
  }
  for (int e = 0; e < n; ++e) {
    for (int f = e + 1; f < n; ++f) {
      std::vector<Term> sum = {{1, above_var(inst, e, f)}, {1, above_var(inst, f, e)},
                               {1, before_var(inst, e, f)}, {1, before_var(inst, f, e)}};
      const std::string pair = tags[e] + "_" + tags[f];
      inst.add_constraint(sum, Sense::GreaterEqual, 1, "sep_lo_" + pair);
      inst.add_constraint(sum, Sense::LessEqual, 2, "sep_hi_" + pair);
      // Valid cuts: positive sizes make each relation antisymmetric.
      inst.add_constraint({{1, above_var(inst, e, f)}, {1, above_var(inst, f, e)}}, Sense::LessEqual, 1,
                          "antisym_above_" + pair);
      inst.add_constraint({{1, before_var(inst, e, f)}, {1, before_var(inst, f, e)}}, Sense::LessEqual, 1,
                          "antisym_before_" + pair);
    }
  }
  // Cover cuts: elements whose minimum sizes overflow an axis cannot be
  // pairwise separated along it. Only minimal covers are added.
  for (int axis = 0; axis < 2; ++axis) {
    const double span = axis == 0 ? W : H;
    std::vector<double> size(n);
    for (int e = 0; e < n; ++e) size[e] = axis == 0 ? p.elements[e].min_width : p.elements[e].min_height;
    const int cap = n <= 16 ? 1 << n : 0;
    int added = 0;
    for (int mask = 3; mask < cap && added < kMaxCoverCuts; ++mask) {
      if (std::popcount(static_cast<unsigned>(mask)) < 2) continue;
      auto need = [&](int m) {
        double total = 0;
        for (int e = 0; e < n; ++e)
          if (m >> e & 1) total += size[e];
        return total + (std::popcount(static_cast<unsigned>(m)) - 1) * g > span + 1e-9 * std::max(1.0, span);
      };
      if (!need(mask)) continue;
      bool minimal = true;
      for (int e = 0; e < n && minimal; ++e)
        if ((mask >> e & 1) && need(mask & ~(1 << e))) minimal = false;
      if (!minimal) continue;
      std::vector<Term> row;
      std::string name = axis == 0 ? "cover_h" : "cover_v";
      int pairs = 0;
      for (int e = 0; e < n; ++e) {
        if (!(mask >> e & 1)) continue;
        name += "_" + tags[e];
        for (int f = e + 1; f < n; ++f) {
          if (!(mask >> f & 1)) continue;
          ++pairs;
          if (axis == 0) row.insert(row.end(), {{1, before_var(inst, e, f)}, {1, before_var(inst, f, e)}});
          else row.insert(row.end(), {{1, above_var(inst, e, f)}, {1, above_var(inst, f, e)}});
        }
      }
      inst.add_constraint(row, Sense::LessEqual, pairs - 1, name);
      ++added;
    }
  }
  for (int e = 0; e < n; ++e) {
    for (int f = 0; f < n; ++f) {
      if (e == f) continue;
      const std::string pair = tags[e] + "_" + tags[f];
      const int sigma = above_var(inst, e, f), lambda = before_var(inst, e, f);
      const int Be = geom_var(inst, e, Role::Bottom), Tf = geom_var(inst, f, Role::Top);
      const int Re = geom_var(inst, e, Role::Right), Lf = geom_var(inst, f, Role::Left);
      // The gutter is multiplied by the binary so the relaxed side stays
      // implied with big-M equal to the canvas extent.
      inst.add_constraint({{1, Tf}, {-1, Be}, {-(H + g), sigma}}, Sense::GreaterEqual, -H, "above_" + pair);
      inst.add_constraint({{1, Lf}, {-1, Re}, {-(W + g), lambda}}, Sense::GreaterEqual, -W, "before_" + pair);
      inst.add_constraint({{W, lambda}, {-1, Lf}, {1, Re}}, Sense::GreaterEqual, 0, "beforelink_" + pair);
      inst.add_constraint({{H, sigma}, {-1, Tf}, {1, Be}}, Sense::GreaterEqual, 0, "abovelink_" + pair);
    }
  }
  return inst;
}

AlignmentHandles add_alignment(MilpInstance& inst, const LayoutProblem& p, const AlignmentOptions& options) {
  const int n = static_cast<int>(p.elements.size());
  const auto tags = element_tags(p);
  AlignmentHandles handles;
  handles.exact = options.exact;
  for (Family fam : kFamilies) {
    const int F = static_cast<int>(fam);
    const double M = horizontal(fam) ? p.canvas.width : p.canvas.height;
    const std::string ft = family_tag(fam);
    std::vector<int> value(n), used(n);
    for (int i = 0; i < n; ++i) {
      value[i] = inst.add_var({Role::GroupValue, F, i}, "V" + ft + "_" + std::to_string(i), VarKind::Continuous, 0, M);
      used[i] = inst.add_var({Role::GroupUsed, F, i}, "u" + ft + "_" + std::to_string(i), VarKind::Binary, 0, 1);
      handles.epsilon.push_back({1, used[i]});
    }
    std::vector<std::vector<int>> assign(n, std::vector<int>(n));
    for (int e = 0; e < n; ++e) {
      for (int i = 0; i < n; ++i) {
        assign[e][i] = inst.add_var({Role::AlignAssign, F, e, i}, "x" + ft + "_" + tags[e] + "_" + std::to_string(i),
                                    VarKind::Binary, 0, 1);
      }
    }
    for (int e = 0; e < n; ++e) {
      std::vector<Term> row;
      for (int i = 0; i < n; ++i) row.push_back({1, assign[e][i]});
      inst.add_constraint(row, Sense::Equal, 1, "assign" + ft + "_" + tags[e]);
      const int edge = geom_var(inst, e, edge_role(fam));
      for (int i = 0; i < n; ++i) {
        const std::string suffix = ft + "_" + tags[e] + "_" + std::to_string(i);
        inst.add_constraint({{1, edge}, {-1, value[i]}, {M, assign[e][i]}}, Sense::LessEqual, M, "alignhi" + suffix);
        inst.add_constraint({{1, value[i]}, {-1, edge}, {M, assign[e][i]}}, Sense::LessEqual, M, "alignlo" + suffix);
        inst.add_constraint({{1, used[i]}, {-1, assign[e][i]}}, Sense::GreaterEqual, 0, "usage" + suffix);
      }
    }
    const double delta = options.separation_fraction * M;
    for (int i = 0; i + 1 < n; ++i) {
      const std::string suffix = ft + "_" + std::to_string(i);
      inst.add_constraint({{1, used[i]}, {-1, used[i + 1]}}, Sense::GreaterEqual, 0, "usedorder" + suffix);
      if (options.exact) {
        inst.add_constraint({{1, value[i + 1]}, {-1, value[i]}, {-(M + delta), used[i]}, {-(M + delta), used[i + 1]}},
                            Sense::GreaterEqual, delta - 2 * (M + delta), "valueorder" + suffix);
      } else {
        inst.add_constraint({{1, value[i]}, {-1, value[i + 1]}, {M, used[i]}, {M, used[i + 1]}}, Sense::LessEqual,
                            2 * M, "valueorder" + suffix);
      }
    }
    if (options.exact) {
      for (int i = 0; i < n; ++i) {
        std::vector<Term> row = {{1, used[i]}};
        for (int e = 0; e < n; ++e) row.push_back({-1, assign[e][i]});
        inst.add_constraint(row, Sense::LessEqual, 0, "nonempty" + ft + "_" + std::to_string(i));
      }
    }
    // Two elements separated along this family's axis cannot share a group.
    std::vector<Term> count;
    for (int i = 0; i < n; ++i) count.push_back({1, used[i]});
    for (int e = 0; e < n; ++e) {
      for (int f = e + 1; f < n; ++f) {
        std::vector<Term> row = count;
        if (horizontal(fam)) {
          row.push_back({-1, before_var(inst, e, f)});
          row.push_back({-1, before_var(inst, f, e)});
        } else {
          row.push_back({-1, above_var(inst, e, f)});
          row.push_back({-1, above_var(inst, f, e)});
        }
        inst.add_constraint(row, Sense::GreaterEqual, 1, "distinct" + ft + "_" + tags[e] + "_" + tags[f]);
      }
    }
  }
  return handles;
}

RectHandles add_rectangularity(MilpInstance& inst, const LayoutProblem& p, double exact_separation) {
  const int n = static_cast<int>(p.elements.size());
  const auto tags = element_tags(p);
  RectHandles handles;
  for (Family side : kFamilies) {
    const int S = static_cast<int>(side);
    const double M = horizontal(side) ? p.canvas.width : p.canvas.height;
    const std::string st = family_tag(side);
    // Low sides (left, top) are minima of the edges, high sides maxima.
    const bool low = side == Family::Left || side == Family::Top;
    const double sgn = low ? 1.0 : -1.0;
    const int sro = inst.add_var({Role::SroSide, S}, "sro_" + st, VarKind::Continuous, 0, M);
    std::vector<Term> select_sum;
    for (int e = 0; e < n; ++e) {
      const int edge = geom_var(inst, e, edge_role(side));
      const int z = inst.add_var({Role::SroSelect, e, S}, "sel" + st + "_" + tags[e], VarKind::Binary, 0, 1);
      const int a = inst.add_var({Role::SroAdherence, e, S}, "adh" + st + "_" + tags[e], VarKind::Binary, 0, 1);
      select_sum.push_back({1, z});
      handles.adherence.push_back({1, a});
      const std::string suffix = st + "_" + tags[e];
      // low side: sro <= edge; high side: sro >= edge.
      inst.add_constraint({{sgn, sro}, {-sgn, edge}}, Sense::LessEqual, 0, "hull" + suffix);
      // the selected element attains the side: sgn*(edge - sro) <= M (1 - z)
      inst.add_constraint({{sgn, edge}, {-sgn, sro}, {M, z}}, Sense::LessEqual, M, "select" + suffix);
      // adherence only if the edge sits on the side: sgn*(edge - sro) <= M (1 - a)
      inst.add_constraint({{sgn, edge}, {-sgn, sro}, {M, a}}, Sense::LessEqual, M, "adhere" + suffix);
      if (exact_separation > 0) {
        const double d = exact_separation * M;
        inst.add_constraint({{sgn, edge}, {-sgn, sro}, {d, a}}, Sense::GreaterEqual, d, "offside" + suffix);
      }
      // an element with another element beyond it on this side cannot adhere
      for (int f = 0; f < n; ++f) {
        if (f == e) continue;
        int beyond = -1;
        switch (side) {
          case Family::Left: beyond = before_var(inst, f, e); break;
          case Family::Right: beyond = before_var(inst, e, f); break;
          case Family::Top: beyond = above_var(inst, f, e); break;
          case Family::Bottom: beyond = above_var(inst, e, f); break;
        }
        inst.add_constraint({{1, a}, {1, beyond}}, Sense::LessEqual, 1, "shadow" + suffix + "_" + tags[f]);
      }
    }
    inst.add_constraint(select_sum, Sense::Equal, 1, "selectone" + st);
  }
  return handles;
}

void add_placement_prefs(MilpInstance& inst, const LayoutProblem& p) {
  const int n = static_cast<int>(p.elements.size());
  auto fix_zero = [&](int var) { inst.set_bounds(var, 0, 0); };
  for (int e = 0; e < n; ++e) {
    const auto& el = p.elements[e];
    for (int f = 0; f < n; ++f) {
      if (f == e) continue;
      if (el.v_pref == VerticalPref::Top) fix_zero(above_var(inst, f, e));
      if (el.v_pref == VerticalPref::Bottom) fix_zero(above_var(inst, e, f));
      if (el.h_pref == HorizontalPref::Left) fix_zero(before_var(inst, f, e));
      if (el.h_pref == HorizontalPref::Right) fix_zero(before_var(inst, e, f));
    }
  }
}

void add_grouping(MilpInstance& inst, const LayoutProblem& p) {
  const int n = static_cast<int>(p.elements.size());
  const double W = p.canvas.width, H = p.canvas.height, g = p.gutter;
  const auto tags = element_tags(p);
  for (int gi = 0; gi < static_cast<int>(p.groups.size()); ++gi) {
    const auto& grp = p.groups[gi];
    std::vector<bool> member(n, false);
    for (const auto& m : grp.members) {
      auto idx = p.index_of(m);
      if (!idx) throw LayoutError(ErrorKind::UnknownElementId, "group member '" + m + "' is not an element");
      member[*idx] = true;
    }
    const std::string gt = "g" + std::to_string(gi);
    const int GL = inst.add_var({Role::GroupRect, gi, 0}, gt + "_L", VarKind::Continuous, 0, W);
    const int GR = inst.add_var({Role::GroupRect, gi, 1}, gt + "_R", VarKind::Continuous, 0, W);
    const int GT = inst.add_var({Role::GroupRect, gi, 2}, gt + "_T", VarKind::Continuous, 0, H);
    const int GB = inst.add_var({Role::GroupRect, gi, 3}, gt + "_B", VarKind::Continuous, 0, H);
    for (int e = 0; e < n; ++e) {
      if (!member[e]) continue;
      const std::string s = gt + "_" + tags[e];
      inst.add_constraint({{1, GL}, {-1, geom_var(inst, e, Role::Left)}}, Sense::LessEqual, 0, "gcontL_" + s);
      inst.add_constraint({{1, GR}, {-1, geom_var(inst, e, Role::Right)}}, Sense::GreaterEqual, 0, "gcontR_" + s);
      inst.add_constraint({{1, GT}, {-1, geom_var(inst, e, Role::Top)}}, Sense::LessEqual, 0, "gcontT_" + s);
      inst.add_constraint({{1, GB}, {-1, geom_var(inst, e, Role::Bottom)}}, Sense::GreaterEqual, 0, "gcontB_" + s);
    }
    for (int f = 0; f < n; ++f) {
      if (member[f]) continue;
      const std::string s = gt + "_" + tags[f];
      const int s_gf = inst.add_var({Role::GroupAbove, gi, f, 0}, "gsigma_" + s, VarKind::Binary, 0, 1);
      const int s_fg = inst.add_var({Role::GroupAbove, gi, f, 1}, "gsigmar_" + s, VarKind::Binary, 0, 1);
      const int l_gf = inst.add_var({Role::GroupBefore, gi, f, 0}, "glambda_" + s, VarKind::Binary, 0, 1);
      const int l_fg = inst.add_var({Role::GroupBefore, gi, f, 1}, "glambdar_" + s, VarKind::Binary, 0, 1);
      std::vector<Term> sum = {{1, s_gf}, {1, s_fg}, {1, l_gf}, {1, l_fg}};
      inst.add_constraint(sum, Sense::GreaterEqual, 1, "gsep_lo_" + s);
      inst.add_constraint(sum, Sense::LessEqual, 2, "gsep_hi_" + s);
      const int Lf = geom_var(inst, f, Role::Left), Rf = geom_var(inst, f, Role::Right);
      const int Tf = geom_var(inst, f, Role::Top), Bf = geom_var(inst, f, Role::Bottom);
      inst.add_constraint({{1, Tf}, {-1, GB}, {-(H + g), s_gf}}, Sense::GreaterEqual, -H, "gabove_" + s);
      inst.add_constraint({{1, GT}, {-1, Bf}, {-(H + g), s_fg}}, Sense::GreaterEqual, -H, "gbelow_" + s);
      inst.add_constraint({{1, Lf}, {-1, GR}, {-(W + g), l_gf}}, Sense::GreaterEqual, -W, "gbefore_" + s);
      inst.add_constraint({{1, GL}, {-1, Rf}, {-(W + g), l_fg}}, Sense::GreaterEqual, -W, "gafter_" + s);
      inst.add_constraint({{W, l_gf}, {-1, Lf}, {1, GR}}, Sense::GreaterEqual, 0, "gbeforelink_" + s);
      inst.add_constraint({{W, l_fg}, {-1, GL}, {1, Rf}}, Sense::GreaterEqual, 0, "gafterlink_" + s);
      inst.add_constraint({{H, s_gf}, {-1, Tf}, {1, GB}}, Sense::GreaterEqual, 0, "gabovelink_" + s);
      inst.add_constraint({{H, s_fg}, {-1, GT}, {1, Bf}}, Sense::GreaterEqual, 0, "gbelowlink_" + s);
    }
  }
}

TraversalHandle add_traversal(MilpInstance& inst, const LayoutProblem& p, bool exact) {
  TraversalHandle handle;
  const auto tags = element_tags(p);
  for (int k = 0; k < static_cast<int>(p.traversal.size()); ++k) {
    const auto& tp = p.traversal[k];
    auto ia = p.index_of(tp.a), ib = p.index_of(tp.b);
    if (!ia || !ib) throw LayoutError(ErrorKind::UnknownElementId, "traversal pair references unknown element");
    const int a = static_cast<int>(*ia), b = static_cast<int>(*ib);
    const std::string s = tags[a] + "_" + tags[b] + "_" + std::to_string(k);
    const int dx = inst.add_var({Role::TravDx, k}, "dx_" + s, VarKind::Continuous, 0, p.canvas.width);
    const int dy = inst.add_var({Role::TravDy, k}, "dy_" + s, VarKind::Continuous, 0, p.canvas.height);
    auto center = [&](int d, Role lo, Role hi, double sgn) {
      std::vector<Term> row = {{1, d},
                               {-0.5 * sgn, geom_var(inst, a, lo)},
                               {-0.5 * sgn, geom_var(inst, a, hi)},
                               {0.5 * sgn, geom_var(inst, b, lo)},
                               {0.5 * sgn, geom_var(inst, b, hi)}};
      return row;
    };
    inst.add_constraint(center(dx, Role::Left, Role::Right, 1), Sense::GreaterEqual, 0, "dxpos_" + s);
    inst.add_constraint(center(dx, Role::Left, Role::Right, -1), Sense::GreaterEqual, 0, "dxneg_" + s);
    inst.add_constraint(center(dy, Role::Top, Role::Bottom, 1), Sense::GreaterEqual, 0, "dypos_" + s);
    inst.add_constraint(center(dy, Role::Top, Role::Bottom, -1), Sense::GreaterEqual, 0, "dyneg_" + s);
    if (exact) {
      // sign = 1: b's center lies right of (below) a's, so d = center_b - center_a.
      const int sx = inst.add_var({Role::TravSignX, k}, "sx_" + s, VarKind::Binary, 0, 1);
      const int sy = inst.add_var({Role::TravSignY, k}, "sy_" + s, VarKind::Binary, 0, 1);
      auto cap = [&](int d, int sign, Role lo, Role hi, double sgn, double M, bool on) {
        auto row = center(d, lo, hi, sgn);
        for (auto& t : row) t.coef = t.var == d ? 1 : -t.coef;  // d - sgn * (cb - ca)
        row.push_back({on ? 2 * M : -2 * M, sign});
        inst.add_constraint(row, Sense::LessEqual, on ? 2 * M : 0, std::string(on ? "dcap1_" : "dcap0_") + s);
      };
      cap(dx, sx, Role::Left, Role::Right, 1, p.canvas.width, true);
      cap(dx, sx, Role::Left, Role::Right, -1, p.canvas.width, false);
      cap(dy, sy, Role::Top, Role::Bottom, 1, p.canvas.height, true);
      cap(dy, sy, Role::Top, Role::Bottom, -1, p.canvas.height, false);
    }
    if (tp.weight != 0) {
      handle.distance.push_back({tp.weight, dx});
      handle.distance.push_back({tp.weight, dy});
    }
  }
  return handle;
}

const char* to_string(ObjectiveMode mode) {
  switch (mode) {
    case ObjectiveMode::Composite: return "composite";
    case ObjectiveMode::MaxGamma: return "max-gamma";
    case ObjectiveMode::MinGamma: return "min-gamma";
    case ObjectiveMode::MaxPi: return "max-pi";
    case ObjectiveMode::MinPi: return "min-pi";
    case ObjectiveMode::MinEpsilon: return "min-epsilon";
    case ObjectiveMode::MaxEpsilon: return "max-epsilon";
    case ObjectiveMode::MaxRect: return "max-rect";
  }
  return "?";
}

std::vector<Term> gamma_terms(const MilpInstance& inst, int n) {
  std::vector<Term> t;
  for (int e = 0; e < n; ++e)
    for (int f = 0; f < n; ++f)
      if (e != f) t.push_back({1, above_var(inst, e, f)});
  return t;
}

std::vector<Term> pi_terms(const MilpInstance& inst, int n) {
  std::vector<Term> t;
  for (int e = 0; e < n; ++e)
    for (int f = 0; f < n; ++f)
      if (e != f) t.push_back({1, before_var(inst, e, f)});
  return t;
}

namespace {

void append_scaled(std::vector<Term>& out, const std::vector<Term>& in, double scale) {
  if (scale == 0) return;
  for (const auto& t : in) out.push_back({t.coef * scale, t.var});
}

std::vector<Term> merge_terms(std::vector<Term> terms) {
  std::sort(terms.begin(), terms.end(), [](const Term& a, const Term& b) { return a.var < b.var; });
  std::vector<Term> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().var == t.var)
      out.back().coef += t.coef;
    else
      out.push_back(t);
  }
  std::erase_if(out, [](const Term& t) { return t.coef == 0; });
  return out;
}

// Infers n from the geometric variables present.
int element_count(const MilpInstance& inst) { return inst.count_role(Role::Left); }

}  // namespace

void set_objective(MilpInstance& inst, ObjectiveMode mode, const ObjectiveWeights& weights,
                   const ModelHandles& handles) {
  Objective obj;
  const int n = element_count(inst);
  auto need = [](bool present, const char* what) {
    if (!present) throw LayoutError(ErrorKind::UnknownHandle, std::string("objective needs ") + what);
  };
  switch (mode) {
    case ObjectiveMode::Composite: {
      obj.sense = ObjectiveSense::Minimize;
      std::vector<Term> terms;
      if (handles.alignment) append_scaled(terms, handles.alignment->epsilon, weights.alignment);
      if (handles.rect) append_scaled(terms, handles.rect->adherence, -weights.rectangularity);
      if (handles.traversal) append_scaled(terms, handles.traversal->distance, weights.traversal);
      obj.terms = merge_terms(std::move(terms));
      break;
    }
    case ObjectiveMode::MaxGamma:
    case ObjectiveMode::MinGamma:
      obj.sense = mode == ObjectiveMode::MaxGamma ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
      obj.terms = gamma_terms(inst, n);
      break;
    case ObjectiveMode::MaxPi:
    case ObjectiveMode::MinPi:
      obj.sense = mode == ObjectiveMode::MaxPi ? ObjectiveSense::Maximize : ObjectiveSense::Minimize;
      obj.terms = pi_terms(inst, n);
      break;
    case ObjectiveMode::MinEpsilon:
    case ObjectiveMode::MaxEpsilon:
      need(handles.alignment.has_value(), "alignment handles");
      obj.sense = mode == ObjectiveMode::MinEpsilon ? ObjectiveSense::Minimize : ObjectiveSense::Maximize;
      obj.terms = handles.alignment->epsilon;
      break;
    case ObjectiveMode::MaxRect:
      need(handles.rect.has_value(), "rectangularity handles");
      obj.sense = ObjectiveSense::Maximize;
      obj.terms = handles.rect->adherence;
      break;
  }
  inst.objective() = std::move(obj);
}

ConstraintHandle add_bound(MilpInstance& inst, const std::vector<Term>& terms, Sense sense, double rhs,
                           std::string name) {
  ConstraintHandle h;
  h.rows.push_back(inst.add_constraint(terms, sense, rhs, std::move(name)));
  return h;
}

ConstraintHandle enforce_signature(MilpInstance& inst, int n, int gamma, int pi, int band) {
  ConstraintHandle h;
  if (n < 2) return h;
  const auto g = gamma_terms(inst, n);
  const auto l = pi_terms(inst, n);
  if (band == 0) {
    h.rows.push_back(inst.add_constraint(g, Sense::Equal, gamma, "sig_gamma"));
    h.rows.push_back(inst.add_constraint(l, Sense::Equal, pi, "sig_pi"));
  } else {
    h.rows.push_back(inst.add_constraint(g, Sense::GreaterEqual, gamma - band, "sig_gamma_lo"));
    h.rows.push_back(inst.add_constraint(g, Sense::LessEqual, gamma + band, "sig_gamma_hi"));
    h.rows.push_back(inst.add_constraint(l, Sense::GreaterEqual, pi - band, "sig_pi_lo"));
    h.rows.push_back(inst.add_constraint(l, Sense::LessEqual, pi + band, "sig_pi_hi"));
  }
  return h;
}

void remove_constraints(MilpInstance& inst, const ConstraintHandle& handle) {
  auto& rows = inst.constraints();
  for (int r : handle.rows) {
    if (r < 0 || r >= static_cast<int>(rows.size())) throw LayoutError(ErrorKind::UnknownHandle, "stale constraint handle");
    rows[r].active = false;
  }
  inst.compact_tail();
}

LayoutModel build_layout_model(const LayoutProblem& p, const ModelOptions& options) {
  LayoutModel model;
  model.n = static_cast<int>(p.elements.size());
  model.instance = build_core(p);
  add_placement_prefs(model.instance, p);
  add_grouping(model.instance, p);
  AlignmentOptions align = options.align;
  if (options.exact_metrics) align.exact = true;
  if (options.alignment) model.handles.alignment = add_alignment(model.instance, p, align);
  if (options.rectangularity)
    model.handles.rect = add_rectangularity(model.instance, p, options.exact_metrics ? align.separation_fraction : 0);
  if (options.traversal && !p.traversal.empty())
    model.handles.traversal = add_traversal(model.instance, p, options.exact_metrics);
  set_objective(model.instance, ObjectiveMode::Composite, p.weights, model.handles);
  return model;
}

std::vector<PlacedElement> decode_placements(const MilpInstance& inst, const LayoutProblem& p,
                                             std::span<const double> values) {
  std::vector<PlacedElement> out;
  auto snap = [](double v, double hi) { return std::clamp(std::round(v * 1e6) / 1e6, 0.0, hi); };
  for (int e = 0; e < static_cast<int>(p.elements.size()); ++e) {
    const auto& el = p.elements[e];
    PlacedElement pe;
    pe.id = el.id;
    if (el.locked) {
      pe.l = el.locked->l, pe.t = el.locked->t;
      pe.r = el.locked->r(), pe.b = el.locked->b();
    } else {
      pe.l = snap(values[geom_var(inst, e, Role::Left)], p.canvas.width);
      pe.r = snap(values[geom_var(inst, e, Role::Right)], p.canvas.width);
      pe.t = snap(values[geom_var(inst, e, Role::Top)], p.canvas.height);
      pe.b = snap(values[geom_var(inst, e, Role::Bottom)], p.canvas.height);
    }
    out.push_back(std::move(pe));
  }
  return out;
}

bool complete_assignment(const MilpInstance& inst, const LayoutProblem& p, std::vector<double>& x) {
  const int n = static_cast<int>(p.elements.size());
  const double g = p.gutter;
  const double tol = 1e-6 * std::max(1.0, p.canvas.extent());
  auto snap_binary = [&](int var) {
    const double r = std::round(x[var]);
    if (std::abs(x[var] - r) > 1e-6) return false;
    x[var] = r;
    return true;
  };
  for (int e = 0; e < n; ++e)
    for (int f = 0; f < n; ++f)
      if (e != f && !(snap_binary(above_var(inst, e, f)) && snap_binary(before_var(inst, e, f)))) return false;

  auto edge = [&](int e, Family fam) { return x[geom_var(inst, e, edge_role(fam))]; };
  const bool exact = inst.find({Role::GroupUsed, 0, 0}).has_value() &&
                     std::any_of(inst.constraints().begin(), inst.constraints().end(),
                                 [](const LinearConstraint& c) { return c.active && c.name.rfind("nonempty", 0) == 0; });
  for (Family fam : kFamilies) {
    const int F = static_cast<int>(fam);
    if (!inst.find({Role::GroupUsed, F, 0})) break;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return edge(a, fam) < edge(b, fam); });
    const double M = horizontal(fam) ? p.canvas.width : p.canvas.height;
    std::vector<double> value;
    std::vector<int> group(n);
    for (int e : order) {
      if (value.empty() || edge(e, fam) - value.back() > tol) {
        if (exact && !value.empty() && edge(e, fam) - value.back() < 0.01 * M) return false;
        value.push_back(edge(e, fam));
      }
      group[e] = static_cast<int>(value.size()) - 1;
    }
    for (int i = 0; i < n; ++i) {
      const bool used = i < static_cast<int>(value.size());
      x[inst.at({Role::GroupUsed, F, i})] = used ? 1 : 0;
      x[inst.at({Role::GroupValue, F, i})] = used ? value[i] : 0;
      for (int e = 0; e < n; ++e) x[inst.at({Role::AlignAssign, F, e, i})] = group[e] == i ? 1 : 0;
    }
  }

  for (Family side : kFamilies) {
    const int S = static_cast<int>(side);
    auto sro = inst.find({Role::SroSide, S});
    if (!sro) break;
    const bool low = side == Family::Left || side == Family::Top;
    double v = edge(0, side);
    int sel = 0;
    for (int e = 1; e < n; ++e) {
      if (low ? edge(e, side) < v : edge(e, side) > v) v = edge(e, side), sel = e;
    }
    x[*sro] = v;
    for (int e = 0; e < n; ++e) {
      bool shadowed = false;
      for (int f = 0; f < n && !shadowed; ++f) {
        if (f == e) continue;
        switch (side) {
          case Family::Left: shadowed = x[before_var(inst, f, e)] > 0.5; break;
          case Family::Right: shadowed = x[before_var(inst, e, f)] > 0.5; break;
          case Family::Top: shadowed = x[above_var(inst, f, e)] > 0.5; break;
          case Family::Bottom: shadowed = x[above_var(inst, e, f)] > 0.5; break;
        }
      }
      x[inst.at({Role::SroSelect, e, S})] = e == sel ? 1 : 0;
      x[inst.at({Role::SroAdherence, e, S})] = !shadowed && std::abs(edge(e, side) - v) <= tol ? 1 : 0;
    }
  }

  for (int gi = 0; gi < static_cast<int>(p.groups.size()); ++gi) {
    if (!inst.find({Role::GroupRect, gi, 0})) break;
    std::vector<bool> member(n, false);
    for (const auto& m : p.groups[gi].members) member[*p.index_of(m)] = true;
    double GL = p.canvas.width, GR = 0, GT = p.canvas.height, GB = 0;
    for (int e = 0; e < n; ++e) {
      if (!member[e]) continue;
      GL = std::min(GL, edge(e, Family::Left)), GR = std::max(GR, edge(e, Family::Right));
      GT = std::min(GT, edge(e, Family::Top)), GB = std::max(GB, edge(e, Family::Bottom));
    }
    x[inst.at({Role::GroupRect, gi, 0})] = GL;
    x[inst.at({Role::GroupRect, gi, 1})] = GR;
    x[inst.at({Role::GroupRect, gi, 2})] = GT;
    x[inst.at({Role::GroupRect, gi, 3})] = GB;
    for (int f = 0; f < n; ++f) {
      if (member[f]) continue;
      const double Lf = edge(f, Family::Left), Rf = edge(f, Family::Right);
      const double Tf = edge(f, Family::Top), Bf = edge(f, Family::Bottom);
      // relation holds with the gutter; otherwise the linking row needs the
      // outsider to not extend past the group's edge at all
      auto rel = [&](double gap, int var) {
        if (gap >= g - tol) {
          x[var] = 1;
          return true;
        }
        x[var] = 0;
        return gap <= tol;
      };
      const int s_gf = inst.at({Role::GroupAbove, gi, f, 0}), s_fg = inst.at({Role::GroupAbove, gi, f, 1});
      const int l_gf = inst.at({Role::GroupBefore, gi, f, 0}), l_fg = inst.at({Role::GroupBefore, gi, f, 1});
      if (!(rel(Tf - GB, s_gf) && rel(GT - Bf, s_fg) && rel(Lf - GR, l_gf) && rel(GL - Rf, l_fg))) return false;
      const double sum = x[s_gf] + x[s_fg] + x[l_gf] + x[l_fg];
      if (sum < 1 || sum > 2) return false;
    }
  }

  for (int k = 0; k < static_cast<int>(p.traversal.size()); ++k) {
    auto sx = inst.find({Role::TravSignX, k}), sy = inst.find({Role::TravSignY, k});
    if (!sx || !sy) break;
    const int a = static_cast<int>(*p.index_of(p.traversal[k].a)), b = static_cast<int>(*p.index_of(p.traversal[k].b));
    auto center = [&](int e, Family lo, Family hi) { return edge(e, lo) + edge(e, hi); };
    x[*sx] = center(b, Family::Left, Family::Right) >= center(a, Family::Left, Family::Right) ? 1 : 0;
    x[*sy] = center(b, Family::Top, Family::Bottom) >= center(a, Family::Top, Family::Bottom) ? 1 : 0;
  }
  return true;
}

double evaluate(const std::vector<Term>& terms, std::span<const double> values) {
  double s = 0;
  for (const auto& t : terms) s += t.coef * values[t.var];
  return s;
}

std::vector<Term> compaction_terms(const MilpInstance& inst, int n) {
  std::vector<Term> t;
  for (int e = 0; e < n; ++e) {
    t.push_back({1.0, geom_var(inst, e, Role::Left)});
    t.push_back({1.0, geom_var(inst, e, Role::Top)});
    t.push_back({-0.5, geom_var(inst, e, Role::Width)});
    t.push_back({-0.5, geom_var(inst, e, Role::Height)});
  }
  return t;
}

}  // namespace gridlayout

namespace gridlayout {
namespace {

// Constraints x_a - x_b >= w; feasible iff the longest-path relaxation settles.
class DifferenceSystem {
 public:
  DifferenceSystem(int nodes, double tol) : nodes_(nodes), tol_(tol) {}
  void add(int a, int b, double w) { edges_.push_back({a, b, w}); }
  std::size_t size() const { return edges_.size(); }
  void truncate(std::size_t k) { edges_.resize(k); }
  bool feasible() const {
    std::vector<double> d(nodes_, 0.0);
    for (int pass = 0; pass <= nodes_; ++pass) {
      bool changed = false;
      for (const auto& e : edges_) {
        if (d[e.b] + e.w > d[e.a] + tol_) d[e.a] = d[e.b] + e.w, changed = true;
      }
      if (!changed) return true;
    }
    return false;
  }

 private:
  struct Edge {
    int a, b;
    double w;
  };
  int nodes_;
  double tol_;
  std::vector<Edge> edges_;
};

}  // namespace

namespace {

std::uint64_t mix(std::uint64_t h, std::uint64_t v) {
  v += 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
  v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ull;
  v = (v ^ (v >> 27)) * 0x94d049bb133111ebull;
  return h ^ v ^ (v >> 31);
}

bool repair(const MilpInstance& inst, const LayoutProblem& p, std::vector<double>& x,
            std::unordered_set<std::uint64_t>* tried) {
  const int n = static_cast<int>(p.elements.size());
  bool integral = true;
  for (int e = 0; e < n && integral; ++e)
    for (int f = 0; f < n && integral; ++f)
      if (e != f)
        for (int v : {above_var(inst, e, f), before_var(inst, e, f)})
          integral = integral && std::abs(x[v] - std::round(x[v])) <= 1e-6;
  if (integral) return complete_assignment(inst, p, x);

  // One difference system per axis over (origin, low edge, high edge) nodes;
  // axis 0 is horizontal.
  const double extent[2] = {p.canvas.width, p.canvas.height};
  const Role low_role[2] = {Role::Left, Role::Top}, high_role[2] = {Role::Right, Role::Bottom};
  const double g = p.gutter;
  std::vector<DifferenceSystem> axes;
  auto lo_node = [](int e) { return 1 + 2 * e; };
  auto hi_node = [](int e) { return 2 + 2 * e; };
  for (int a = 0; a < 2; ++a) {
    DifferenceSystem sys(2 * n + 1, 1e-9 * std::max(1.0, extent[a]));
    for (int e = 0; e < n; ++e) {
      const auto& el = p.elements[e];
      for (auto [node, role] : {std::pair{lo_node(e), low_role[a]}, std::pair{hi_node(e), high_role[a]}}) {
        const auto& var = inst.vars()[geom_var(inst, e, role)];
        sys.add(node, 0, var.lower);
        sys.add(0, node, -var.upper);
      }
      const double smin = a == 0 ? el.min_width : el.min_height, smax = a == 0 ? el.max_width : el.max_height;
      sys.add(hi_node(e), lo_node(e), smin);
      sys.add(lo_node(e), hi_node(e), -smax);
      if (el.locked) {
        const double lo = a == 0 ? el.locked->l : el.locked->t;
        const double hi = a == 0 ? el.locked->r() : el.locked->b();
        sys.add(lo_node(e), 0, lo), sys.add(0, lo_node(e), -lo);
        sys.add(hi_node(e), 0, hi), sys.add(0, hi_node(e), -hi);
      }
    }
    axes.push_back(std::move(sys));
  }
  auto coord = [&](int e, Role r) { return x[geom_var(inst, e, r)]; };
  // Per-axis code: 0 overlapping projections, 1 e before f, 2 f before e.
  auto code_cost = [&](int a, int e, int f, int code) {
    const double gap_ef = coord(f, low_role[a]) - coord(e, high_role[a]);
    const double gap_fe = coord(e, low_role[a]) - coord(f, high_role[a]);
    double c = 0;
    if (code == 0) c = std::max(0.0, gap_ef) + std::max(0.0, gap_fe);
    else c = std::max(0.0, g - (code == 1 ? gap_ef : gap_fe));
    return c / std::max(1.0, extent[a]);
  };
  auto add_code = [&](DifferenceSystem& sys, int e, int f, int code) {
    if (code == 0) {
      sys.add(hi_node(e), lo_node(f), 0);
      sys.add(hi_node(f), lo_node(e), 0);
    } else if (code == 1) {
      sys.add(lo_node(f), hi_node(e), g);
    } else {
      sys.add(lo_node(e), hi_node(f), g);
    }
  };
  auto allows = [&](int var, bool one) {
    const auto& v = inst.vars()[var];
    return one ? v.upper >= 0.5 : v.lower < 0.5;
  };

  struct Candidate {
    double cost;
    int v, h;
  };
  struct Pair {
    int e, f;
    std::vector<Candidate> options;
  };
  std::vector<Pair> pairs;
  for (int e = 0; e < n; ++e) {
    for (int f = e + 1; f < n; ++f) {
      Pair pr{e, f, {}};
      for (int v = 0; v < 3; ++v) {
        for (int h = 0; h < 3; ++h) {
          if (v == 0 && h == 0) continue;
          if (!allows(above_var(inst, e, f), v == 1) || !allows(above_var(inst, f, e), v == 2) ||
              !allows(before_var(inst, e, f), h == 1) || !allows(before_var(inst, f, e), h == 2))
            continue;
          pr.options.push_back({code_cost(1, e, f, v) + code_cost(0, e, f, h), v, h});
        }
      }
      if (pr.options.empty()) return false;
      std::stable_sort(pr.options.begin(), pr.options.end(),
                       [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
      pairs.push_back(std::move(pr));
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(),
                   [](const Pair& a, const Pair& b) { return a.options.front().cost < b.options.front().cost; });

  // Signature rows, if present, bound the totals of above and before codes.
  // Each pair adds 0 or 1 to either total and at least 1 to their sum.
  constexpr double kInf = std::numeric_limits<double>::infinity();
  double target[2][2] = {{0, kInf}, {0, kInf}};  // [gamma|pi][lo|hi]
  for (const auto& row : inst.constraints()) {
    if (!row.active || !row.name.starts_with("sig_")) continue;
    const int which = row.name.starts_with("sig_pi") ? 1 : 0;
    if (row.sense != Sense::LessEqual) target[which][0] = std::max(target[which][0], row.rhs);
    if (row.sense != Sense::GreaterEqual) target[which][1] = std::min(target[which][1], row.rhs);
  }
  int total[2] = {0, 0};
  auto reachable = [&](int dg, int dp, int left) {
    double room[2];
    const int got[2] = {total[0] + dg, total[1] + dp};
    for (int k = 0; k < 2; ++k) {
      const double lo = std::max(0.0, target[k][0] - got[k]), hi = std::min<double>(left, target[k][1] - got[k]);
      if (lo > hi + 1e-9) return false;
      room[k] = hi;
    }
    return room[0] + room[1] >= left - 1e-9;
  };

  // A side (left, right, top, bottom) with another element beyond it cannot
  // lie on the outline; a rect_floor row limits how many may be shadowed.
  double rect_floor = 0;
  for (const auto& row : inst.constraints())
    if (row.active && row.name == "rect_floor") rect_floor = std::max(rect_floor, row.rhs);
  std::vector<std::array<int, 4>> shade(n, {0, 0, 0, 0});
  int open_sides = 4 * n;
  auto shade_code = [&](int e, int f, int v, int h, int d) {
    auto bump = [&](int el, Family side) {
      int& c = shade[el][static_cast<int>(side)];
      if (d > 0 && c++ == 0) --open_sides;
      if (d < 0 && --c == 0) ++open_sides;
    };
    if (v == 1) bump(f, Family::Top), bump(e, Family::Bottom);
    if (v == 2) bump(e, Family::Top), bump(f, Family::Bottom);
    if (h == 1) bump(f, Family::Left), bump(e, Family::Right);
    if (h == 2) bump(e, Family::Left), bump(f, Family::Right);
  };

  // Depth-first over the pairs, cheapest code first, with a bounded number
  // of trial codes; without backtracking this is the plain greedy pass.
  std::vector<const Candidate*> pick(pairs.size(), nullptr);
  long trials = 40 * static_cast<long>(pairs.size());
  std::function<bool(std::size_t)> place = [&](std::size_t i) {
    if (i == pairs.size()) return true;
    const auto& pr = pairs[i];
    const int left = static_cast<int>(pairs.size() - i - 1);
    for (const auto& c : pr.options) {
      if (!reachable(c.v != 0, c.h != 0, left)) continue;
      if (trials-- <= 0) return false;
      shade_code(pr.e, pr.f, c.v, c.h, 1);
      const std::size_t kh = axes[0].size(), kv = axes[1].size();
      add_code(axes[0], pr.e, pr.f, c.h);
      add_code(axes[1], pr.e, pr.f, c.v);
      if (open_sides >= rect_floor - 1e-9 && axes[0].feasible() && axes[1].feasible()) {
        total[0] += c.v != 0;
        total[1] += c.h != 0;
        pick[i] = &c;
        if (place(i + 1)) return true;
        total[0] -= c.v != 0;
        total[1] -= c.h != 0;
      }
      axes[0].truncate(kh);
      axes[1].truncate(kv);
      shade_code(pr.e, pr.f, c.v, c.h, -1);
    }
    return false;
  };
  if (!place(0)) return false;

  std::vector<BoundOverride> fix;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const int e = pairs[i].e, f = pairs[i].f, v = pick[i]->v, h = pick[i]->h;
    for (auto [var, on] : {std::pair{above_var(inst, e, f), v == 1}, std::pair{above_var(inst, f, e), v == 2},
                           std::pair{before_var(inst, e, f), h == 1}, std::pair{before_var(inst, f, e), h == 2}}) {
      x[var] = on ? 1 : 0;
      fix.push_back({var, x[var], x[var]});
    }
  }

  // Snap edges of one family that sit next to each other, closest first,
  // while both axes stay satisfiable; fewer distinct edges, fewer groups.
  struct Snap {
    double gap;
    int axis, a, b;  // nodes
    int ea, eb;
    Role role;
  };
  std::vector<Snap> snaps;
  const Family fams[] = {Family::Left, Family::Right, Family::Top, Family::Bottom};
  for (Family fam : fams) {
    const int a = horizontal(fam) ? 0 : 1;
    const Role role = edge_role(fam);
    const bool low = fam == Family::Left || fam == Family::Top;
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int u, int v) { return coord(u, role) < coord(v, role); });
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
      const int u = order[i], v = order[j];
        snaps.push_back({(coord(v, role) - coord(u, role)) / std::max(1.0, extent[a]), a,
                         low ? lo_node(u) : hi_node(u), low ? lo_node(v) : hi_node(v), u, v, role});
      }
  }
  std::stable_sort(snaps.begin(), snaps.end(), [](const Snap& u, const Snap& v) { return u.gap < v.gap; });
  std::vector<const Snap*> kept;
  std::vector<int> parent(2 * (2 * n + 1));  // per-axis node sets
  std::iota(parent.begin(), parent.end(), 0);
  auto root = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  for (const auto& sn : snaps) {
    const int ra = root(sn.axis * (2 * n + 1) + sn.a), rb = root(sn.axis * (2 * n + 1) + sn.b);
    if (ra == rb) continue;
    const std::size_t k = axes[sn.axis].size();
    axes[sn.axis].add(sn.a, sn.b, 0);
    axes[sn.axis].add(sn.b, sn.a, 0);
    if (axes[sn.axis].feasible()) kept.push_back(&sn), parent[ra] = rb;
    else axes[sn.axis].truncate(k);
  }

  if (tried) {
    std::uint64_t h = 0;
    for (const auto& b : fix) h = mix(h, static_cast<std::uint64_t>(b.var) * 2 + (b.lower > 0.5));
    for (const Snap* sn : kept) h = mix(h, static_cast<std::uint64_t>(sn - snaps.data()));
    if (!tried->insert(h).second) return false;
  }

  std::optional<LpResult> lp;
  if (!kept.empty()) {
    MilpInstance snapped = inst;
    for (const Snap* sn : kept)
      snapped.add_constraint({{1, geom_var(inst, sn->ea, sn->role)}, {-1, geom_var(inst, sn->eb, sn->role)}},
                             Sense::Equal, 0, "snap");
    lp = solve_lp(snapped, fix);
  }
  if (!lp || lp->status != LpStatus::Optimal) lp = solve_lp(inst, fix);
  if (lp->status != LpStatus::Optimal) return false;
  x = std::move(lp->values);
  return complete_assignment(inst, p, x);
}

}  // namespace

bool repair_layout(const MilpInstance& inst, const LayoutProblem& p, std::vector<double>& x) {
  return repair(inst, p, x, nullptr);
}

bool LayoutRepair::operator()(std::vector<double>& x) { return repair(*inst_, *problem_, x, &tried_); }

}  // namespace gridlayout
