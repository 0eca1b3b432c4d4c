#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gridlayout/core_model.hpp"

namespace gridlayout {

enum class VarKind { Continuous, Binary };

struct VarRef {
  int index = -1;
  std::string name;
  VarKind kind = VarKind::Continuous;
  double lower = 0;
  double upper = 0;
};

struct Term {
  double coef = 0;
  int var = -1;
  bool operator==(const Term&) const = default;
};

enum class Sense { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  std::vector<Term> terms;
  Sense sense = Sense::LessEqual;
  double rhs = 0;
  std::string name;
  bool active = true;
};

enum class ObjectiveSense { Minimize, Maximize };

struct Objective {
  ObjectiveSense sense = ObjectiveSense::Minimize;
  std::vector<Term> terms;
  double constant = 0;
};

/// Variable roles addressable through the instance's named lookup.
enum class Role {
  Left, Right, Top, Bottom, Width, Height,
  Above,        // sigma(e, f): e lies above f
  Before,       // lambda(e, f): e lies left of f
  AlignAssign,  // x^F(e, i)
  GroupValue,   // V^F(i)
  GroupUsed,    // u^F(i)
  SroSide,      // continuous outline side
  SroSelect,    // z(e, side): e achieves the outline side
  SroAdherence, // a(e, side)
  GroupRect,    // contiguity group rectangle side
  GroupAbove,   // sigma between a contiguity group and an outsider
  GroupBefore,
  TravDx, TravDy,
  TravSignX, TravSignY,  // which center lies further right / lower
};

/// Alignment families; also used for the four outline sides.
enum class Family { Left = 0, Right = 1, Top = 2, Bottom = 3 };
inline constexpr Family kFamilies[] = {Family::Left, Family::Right, Family::Top, Family::Bottom};

struct VarKey {
  Role role;
  int a = -1;
  int b = -1;
  int c = -1;
  auto operator<=>(const VarKey&) const = default;
};

class MilpInstance {
 public:
  int add_var(std::string name, VarKind kind, double lower, double upper);
  int add_var(VarKey key, std::string name, VarKind kind, double lower, double upper);
  int add_constraint(std::vector<Term> terms, Sense sense, double rhs, std::string name = {});

  const std::vector<VarRef>& vars() const { return vars_; }
  std::vector<VarRef>& vars() { return vars_; }
  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  std::vector<LinearConstraint>& constraints() { return constraints_; }
  Objective& objective() { return objective_; }
  const Objective& objective() const { return objective_; }

  std::optional<int> find(const VarKey& key) const;
  int at(const VarKey& key) const;  // throws UnknownHandle

  int num_vars() const { return static_cast<int>(vars_.size()); }
  int num_active_constraints() const;
  int count_vars(VarKind kind) const;
  int count_role(Role role) const;

  void set_bounds(int var, double lower, double upper);

  // Drops inactive constraints at the end of the list.
  void compact_tail();

 private:
  std::vector<VarRef> vars_;
  std::vector<LinearConstraint> constraints_;
  Objective objective_;
  std::map<VarKey, int> var_map_;
};

// ---------------------------------------------------------------------------
// Handles returned by the builder stages.

struct AlignmentHandles {
  std::vector<Term> epsilon;  // sum of group-usage binaries
  bool exact = false;
};

struct RectHandles {
  std::vector<Term> adherence;  // sum of adherence binaries
};

struct TraversalHandle {
  std::vector<Term> distance;  // sum of w * (dx + dy)
};

struct ConstraintHandle {
  std::vector<int> rows;
};

struct AlignmentOptions {
  // Forces used groups of a family to hold pairwise distinct values (at
  // least `separation` apart) and to be non-empty, so that the group count
  // equals the number of distinct edge coordinates.
  bool exact = false;
  double separation_fraction = 0.01;  // of the canvas extent along the axis
};

/// Element geometry variables; each element gets Left..Height.
int geom_var(const MilpInstance& inst, int element, Role role);
int above_var(const MilpInstance& inst, int e, int f);
int before_var(const MilpInstance& inst, int e, int f);

MilpInstance build_core(const LayoutProblem& problem);
AlignmentHandles add_alignment(MilpInstance& inst, const LayoutProblem& problem,
                               const AlignmentOptions& options = {});
/// With `exact_separation` > 0, an edge off the outline side must keep that
/// distance from it, so the adherence count equals the geometric one.
RectHandles add_rectangularity(MilpInstance& inst, const LayoutProblem& problem, double exact_separation = 0);
void add_placement_prefs(MilpInstance& inst, const LayoutProblem& problem);
void add_grouping(MilpInstance& inst, const LayoutProblem& problem);
/// With `exact`, sign binaries pin dx and dy to the center distances.
TraversalHandle add_traversal(MilpInstance& inst, const LayoutProblem& problem, bool exact = false);

enum class ObjectiveMode {
  Composite,
  MaxGamma,
  MinGamma,
  MaxPi,
  MinPi,
  MinEpsilon,
  MaxEpsilon,
  MaxRect,
};

const char* to_string(ObjectiveMode mode);

struct ModelHandles {
  std::optional<AlignmentHandles> alignment;
  std::optional<RectHandles> rect;
  std::optional<TraversalHandle> traversal;
};

/// Replaces the objective. Composite minimizes
///   alignment * eps - rectangularity * R + traversal * T
/// over whichever handles are present; zero-weight terms are skipped.
void set_objective(MilpInstance& inst, ObjectiveMode mode, const ObjectiveWeights& weights,
                   const ModelHandles& handles);

std::vector<Term> gamma_terms(const MilpInstance& inst, int n);
std::vector<Term> pi_terms(const MilpInstance& inst, int n);

/// |sum sigma - gamma| <= band and |sum lambda - pi| <= band.
ConstraintHandle enforce_signature(MilpInstance& inst, int n, int gamma, int pi, int band);
ConstraintHandle add_bound(MilpInstance& inst, const std::vector<Term>& terms, Sense sense, double rhs,
                           std::string name);
void remove_constraints(MilpInstance& inst, const ConstraintHandle& handle);

/// A complete layout model: core, placement preferences, grouping, and the
/// optional objective stages.
struct LayoutModel {
  MilpInstance instance;
  ModelHandles handles;
  int n = 0;
};

struct ModelOptions {
  bool alignment = true;
  bool rectangularity = true;
  bool traversal = true;
  AlignmentOptions align;
  // Alignment, adherence and traversal terms equal their geometric values at
  // every feasible point, not only at optima. Needed when the composite is
  // constrained rather than minimized.
  bool exact_metrics = false;
};

LayoutModel build_layout_model(const LayoutProblem& problem, const ModelOptions& options = {});

/// Fills every auxiliary binary (alignment groups, outline selection and
/// adherence, contiguity-group relations) from the element geometry in
/// `values`, provided the above/before binaries there are already integral.
/// Returns false when they are not or the geometry admits no consistent
/// completion. Continuous values are left for a follow-up LP to settle.
bool complete_assignment(const MilpInstance& inst, const LayoutProblem& problem, std::vector<double>& values);

/// Repair for fractional points. Element pairs are visited from the most to
/// the least settled; each gets the above/before code closest to the point's
/// geometry that keeps both axes' difference constraints satisfiable. The
/// geometry is then re-solved with those relations fixed and
/// complete_assignment fills in the rest.
bool repair_layout(const MilpInstance& inst, const LayoutProblem& problem, std::vector<double>& values);

/// repair_layout that remembers the relation patterns it has tried and
/// declines repeats. Each copy keeps its own memory.
class LayoutRepair {
 public:
  LayoutRepair(const MilpInstance& inst, const LayoutProblem& problem) : inst_(&inst), problem_(&problem) {}
  bool operator()(std::vector<double>& values);

 private:
  const MilpInstance* inst_;
  const LayoutProblem* problem_;
  std::unordered_set<std::uint64_t> tried_;
};

/// Reads element rectangles out of a variable assignment.
std::vector<PlacedElement> decode_placements(const MilpInstance& inst, const LayoutProblem& problem,
                                             std::span<const double> values);

double evaluate(const std::vector<Term>& terms, std::span<const double> values);

/// Terms pulling elements towards the top-left while letting them grow;
/// used as the secondary objective once the binaries are fixed.
std::vector<Term> compaction_terms(const MilpInstance& inst, int n);

}  // namespace gridlayout
