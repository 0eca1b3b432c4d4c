#include "gridlayout/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace gridlayout {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidProblem: return "InvalidProblem";
    case ErrorKind::InfeasibleLock: return "InfeasibleLock";
    case ErrorKind::InfeasibleProblem: return "InfeasibleProblem";
    case ErrorKind::UnknownElementId: return "UnknownElementId";
    case ErrorKind::ElementSetMismatch: return "ElementSetMismatch";
    case ErrorKind::UnknownHandle: return "UnknownHandle";
    case ErrorKind::NumericalBreakdown: return "NumericalBreakdown";
    case ErrorKind::TimeBudgetExhausted: return "TimeBudgetExhausted";
    case ErrorKind::ParseError: return "ParseError";
  }
  return "Unknown";
}

const char* to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::NonPositiveCanvas: return "NonPositiveCanvas";
    case ViolationKind::NoElements: return "NoElements";
    case ViolationKind::DuplicateId: return "DuplicateId";
    case ViolationKind::BadSizeBounds: return "BadSizeBounds";
    case ViolationKind::SizeExceedsCanvas: return "SizeExceedsCanvas";
    case ViolationKind::LockOutsideCanvas: return "LockOutsideCanvas";
    case ViolationKind::LockViolatesSize: return "LockViolatesSize";
    case ViolationKind::LockOverlap: return "LockOverlap";
    case ViolationKind::AreaInfeasible: return "AreaInfeasible";
    case ViolationKind::NegativeGutter: return "NegativeGutter";
    case ViolationKind::NegativeWeight: return "NegativeWeight";
    case ViolationKind::BadGroup: return "BadGroup";
    case ViolationKind::NestedGroups: return "NestedGroups";
    case ViolationKind::BadTraversal: return "BadTraversal";
    case ViolationKind::MissingPlacement: return "MissingPlacement";
    case ViolationKind::Overlap: return "Overlap";
    case ViolationKind::Overflow: return "Overflow";
    case ViolationKind::SizeOutOfBounds: return "SizeOutOfBounds";
    case ViolationKind::LockMoved: return "LockMoved";
    case ViolationKind::PrefViolation: return "PrefViolation";
    case ViolationKind::GroupIntrusion: return "GroupIntrusion";
  }
  return "Unknown";
}

std::optional<std::size_t> LayoutProblem::index_of(const std::string& id) const {
  for (std::size_t i = 0; i < elements.size(); ++i)
    if (elements[i].id == id) return i;
  return std::nullopt;
}

const PlacedElement* LayoutSolution::find(const std::string& id) const {
  for (const auto& p : placements)
    if (p.id == id) return &p;
  return nullptr;
}

double geometric_tolerance(const Canvas& canvas) {
  return std::max(1e-6, 1e-6 * canvas.extent());
}

namespace {

std::string element_path(std::size_t i, const char* field) {
  std::ostringstream os;
  os << "elements[" << i << "]." << field;
  return os.str();
}

bool finite_positive(double v) { return std::isfinite(v) && v > 0; }

// Interior overlap of two rectangles once each is grown by half the gutter.
bool rects_overlap(double al, double at, double ar, double ab, double bl,
                   double bt, double br, double bb, double gutter, double tol) {
  const bool separated = ab + gutter <= bt + tol || bb + gutter <= at + tol ||
                         ar + gutter <= bl + tol || br + gutter <= al + tol;
  return !separated;
}

void check_size_axis(std::vector<Violation>& out, std::size_t i, const char* min_name,
                     const char* max_name, double lo, double hi, double extent) {
  if (!finite_positive(lo) || !std::isfinite(hi) || lo > hi) {
    out.push_back({ViolationKind::BadSizeBounds, element_path(i, min_name),
                   std::string("requires 0 < ") + min_name + " <= " + max_name});
  } else if (hi > extent || lo > extent) {
    out.push_back({ViolationKind::SizeExceedsCanvas,
                   element_path(i, lo > extent ? min_name : max_name),
                   "size bound exceeds canvas extent"});
  }
}

}  // namespace

std::vector<Violation> validate_problem(const LayoutProblem& p) {
  std::vector<Violation> out;
  const double W = p.canvas.width, H = p.canvas.height;
  if (!finite_positive(W) || !finite_positive(H)) {
    out.push_back({ViolationKind::NonPositiveCanvas, "canvas", "width and height must be > 0"});
    return out;
  }
  if (p.elements.empty()) out.push_back({ViolationKind::NoElements, "elements", "need at least one element"});
  if (!(p.gutter >= 0) || !std::isfinite(p.gutter))
    out.push_back({ViolationKind::NegativeGutter, "gutter", "gutter must be >= 0"});
  const auto& w = p.weights;
  for (auto [name, v] : {std::pair{"weights.alignment", w.alignment},
                         std::pair{"weights.rectangularity", w.rectangularity},
                         std::pair{"weights.traversal", w.traversal}}) {
    if (!(v >= 0) || !std::isfinite(v)) out.push_back({ViolationKind::NegativeWeight, name, "weight must be >= 0"});
  }

  std::set<std::string> ids;
  double min_area = 0;
  const double tol = geometric_tolerance(p.canvas);
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    const auto& e = p.elements[i];
    if (e.id.empty() || !ids.insert(e.id).second)
      out.push_back({ViolationKind::DuplicateId, element_path(i, "id"), "ids must be unique and non-empty"});
    check_size_axis(out, i, "minW", "maxW", e.min_width, e.max_width, W);
    check_size_axis(out, i, "minH", "maxH", e.min_height, e.max_height, H);
    if (std::isfinite(e.min_width) && std::isfinite(e.min_height)) min_area += e.min_width * e.min_height;
    if (e.locked) {
      const Rect& k = *e.locked;
      if (!(k.l >= -tol && k.t >= -tol && k.r() <= W + tol && k.b() <= H + tol))
        out.push_back({ViolationKind::LockOutsideCanvas, element_path(i, "locked"), "locked rectangle leaves the canvas"});
      if (!(k.w >= e.min_width - tol && k.w <= e.max_width + tol && k.h >= e.min_height - tol &&
            k.h <= e.max_height + tol))
        out.push_back({ViolationKind::LockViolatesSize, element_path(i, "locked"), "locked rectangle violates size bounds"});
    }
  }
  for (std::size_t i = 0; i < p.elements.size(); ++i) {
    for (std::size_t j = i + 1; j < p.elements.size(); ++j) {
      const auto& a = p.elements[i].locked;
      const auto& b = p.elements[j].locked;
      if (!a || !b) continue;
      if (rects_overlap(a->l, a->t, a->r(), a->b(), b->l, b->t, b->r(), b->b(), p.gutter, tol))
        out.push_back({ViolationKind::LockOverlap, element_path(j, "locked"),
                       "locked rectangles of " + p.elements[i].id + " and " + p.elements[j].id + " overlap"});
    }
  }
  if (min_area > W * H)
    out.push_back({ViolationKind::AreaInfeasible, "elements", "total minimum area exceeds canvas area"});

  std::vector<std::set<std::string>> member_sets;
  for (std::size_t g = 0; g < p.groups.size(); ++g) {
    const auto& grp = p.groups[g];
    std::set<std::string> members(grp.members.begin(), grp.members.end());
    const std::string path = "groups[" + std::to_string(g) + "]";
    bool ok = members.size() >= 2 && members.size() == grp.members.size();
    for (const auto& m : members) ok = ok && ids.count(m) > 0;
    if (!ok) out.push_back({ViolationKind::BadGroup, path, "group needs >= 2 distinct known members"});
    member_sets.push_back(std::move(members));
  }
  for (std::size_t a = 0; a < member_sets.size(); ++a) {
    for (std::size_t b = 0; b < member_sets.size(); ++b) {
      if (a == b) continue;
      const auto& sa = member_sets[a];
      const auto& sb = member_sets[b];
      if (sa.size() > sb.size() || (sa.size() == sb.size() && a > b)) continue;
      if (std::includes(sb.begin(), sb.end(), sa.begin(), sa.end()))
        out.push_back({ViolationKind::NestedGroups, "groups[" + std::to_string(a) + "]",
                       "group is nested in groups[" + std::to_string(b) + "]"});
    }
  }
  for (std::size_t t = 0; t < p.traversal.size(); ++t) {
    const auto& tp = p.traversal[t];
    if (tp.a == tp.b || !ids.count(tp.a) || !ids.count(tp.b) || !(tp.weight >= 0) || !std::isfinite(tp.weight))
      out.push_back({ViolationKind::BadTraversal, "traversal[" + std::to_string(t) + "]",
                     "traversal pair needs two distinct known ids and weight >= 0"});
  }
  return out;
}

std::vector<Violation> validate_solution(const LayoutProblem& p, const LayoutSolution& s,
                                         std::optional<double> tolerance) {
  const double tol = tolerance.value_or(geometric_tolerance(p.canvas));
  const std::size_t n = p.elements.size();
  if (s.placements.size() != n)
    throw LayoutError(ErrorKind::UnknownElementId, "solution has " + std::to_string(s.placements.size()) +
                                                       " placements for " + std::to_string(n) + " elements");
  std::vector<const PlacedElement*> at(n, nullptr);
  for (const auto& pl : s.placements) {
    auto idx = p.index_of(pl.id);
    if (!idx || at[*idx]) throw LayoutError(ErrorKind::UnknownElementId, "unexpected placement id '" + pl.id + "'");
    at[*idx] = &pl;
  }

  std::vector<Violation> out;
  const double W = p.canvas.width, H = p.canvas.height;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = p.elements[i];
    const auto& q = *at[i];
    if (q.l < -tol || q.t < -tol || q.r > W + tol || q.b > H + tol || !(q.l < q.r) || !(q.t < q.b))
      out.push_back({ViolationKind::Overflow, e.id, "element leaves the canvas"});
    if (q.width() < e.min_width - tol || q.width() > e.max_width + tol || q.height() < e.min_height - tol ||
        q.height() > e.max_height + tol)
      out.push_back({ViolationKind::SizeOutOfBounds, e.id, "size outside bounds"});
    if (e.locked) {
      const Rect& k = *e.locked;
      if (std::abs(q.l - k.l) > tol || std::abs(q.t - k.t) > tol || std::abs(q.r - k.r()) > tol ||
          std::abs(q.b - k.b()) > tol)
        out.push_back({ViolationKind::LockMoved, e.id, "locked element moved"});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const auto& a = *at[i];
      const auto& b = *at[j];
      if (rects_overlap(a.l, a.t, a.r, a.b, b.l, b.t, b.r, b.b, p.gutter, tol))
        out.push_back({ViolationKind::Overlap, a.id + "," + b.id, "elements overlap"});
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = p.elements[i];
    const auto& q = *at[i];
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const auto& o = *at[j];
      bool bad = false;
      if (e.v_pref == VerticalPref::Top) bad = bad || q.t - o.b > tol;
      if (e.v_pref == VerticalPref::Bottom) bad = bad || o.t - q.b > tol;
      if (e.h_pref == HorizontalPref::Left) bad = bad || q.l - o.r > tol;
      if (e.h_pref == HorizontalPref::Right) bad = bad || o.l - q.r > tol;
      if (bad) out.push_back({ViolationKind::PrefViolation, e.id + "," + o.id, "placement preference broken"});
    }
  }
  for (const auto& g : p.groups) {
    double gl = W, gt = H, gr = 0, gb = 0;
    std::set<std::string> members(g.members.begin(), g.members.end());
    for (const auto& m : members) {
      const auto* q = s.find(m);
      if (!q) continue;
      gl = std::min(gl, q->l), gt = std::min(gt, q->t);
      gr = std::max(gr, q->r), gb = std::max(gb, q->b);
    }
    for (const auto& q : s.placements) {
      if (members.count(q.id)) continue;
      if (rects_overlap(gl, gt, gr, gb, q.l, q.t, q.r, q.b, p.gutter, tol))
        out.push_back({ViolationKind::GroupIntrusion, g.id + "," + q.id, "non-member inside group bounding box"});
    }
  }
  return out;
}

}  // namespace gridlayout
