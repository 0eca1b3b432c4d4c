#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace gridlayout {

enum class ErrorKind {
  InvalidProblem,
  InfeasibleLock,
  InfeasibleProblem,
  UnknownElementId,
  ElementSetMismatch,
  UnknownHandle,
  NumericalBreakdown,
  TimeBudgetExhausted,
  ParseError,
};

const char* to_string(ErrorKind kind);

class LayoutError : public std::runtime_error {
 public:
  LayoutError(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

enum class ElementKind { Heading, Paragraph, Image, Button, Other };
enum class HorizontalPref { None, Left, Right };
enum class VerticalPref { None, Top, Bottom };

struct Rgb {
  std::uint8_t r = 0x99, g = 0x99, b = 0x99;
  bool operator==(const Rgb&) const = default;
};

/// Axis-aligned rectangle given by its top-left corner and extent.
struct Rect {
  double l = 0, t = 0, w = 0, h = 0;
  double r() const { return l + w; }
  double b() const { return t + h; }
  bool operator==(const Rect&) const = default;
};

struct Canvas {
  double width = 0;
  double height = 0;
  double extent() const { return width > height ? width : height; }
  bool operator==(const Canvas&) const = default;
};

struct Element {
  std::string id;
  double min_width = 0, max_width = 0;
  double min_height = 0, max_height = 0;
  ElementKind kind = ElementKind::Other;
  Rgb color;
  std::optional<Rect> locked;
  HorizontalPref h_pref = HorizontalPref::None;
  VerticalPref v_pref = VerticalPref::None;
  bool operator==(const Element&) const = default;
};

struct Group {
  std::string id;
  std::vector<std::string> members;
  bool operator==(const Group&) const = default;
};

struct TraversalPair {
  std::string a, b;
  double weight = 1.0;
  bool operator==(const TraversalPair&) const = default;
};

struct ObjectiveWeights {
  double alignment = 1.0;
  double rectangularity = 1.0;
  double traversal = 0.0;
  bool operator==(const ObjectiveWeights&) const = default;
};

struct LayoutProblem {
  Canvas canvas;
  std::vector<Element> elements;
  std::vector<Group> groups;
  std::vector<TraversalPair> traversal;
  double gutter = 0.0;
  ObjectiveWeights weights;

  std::optional<std::size_t> index_of(const std::string& id) const;
  bool operator==(const LayoutProblem&) const = default;
};

/// Edge coordinates of a placed element; origin top-left, y grows downwards.
struct PlacedElement {
  std::string id;
  double l = 0, r = 0, t = 0, b = 0;
  double width() const { return r - l; }
  double height() const { return b - t; }
  bool operator==(const PlacedElement&) const = default;
};

struct SolutionStats {
  int grid_lines = 0;
  int rect_cases = 0;
  int gamma = 0;
  int pi = 0;
  double objective = 0.0;
  // Only filled in when reference solves were run for the problem.
  std::optional<double> optimality_pct;
  bool operator==(const SolutionStats&) const = default;
};

struct LayoutSolution {
  std::vector<PlacedElement> placements;
  SolutionStats stats;

  const PlacedElement* find(const std::string& id) const;
  bool operator==(const LayoutSolution&) const = default;
};

enum class ViolationKind {
  NonPositiveCanvas,
  NoElements,
  DuplicateId,
  BadSizeBounds,
  SizeExceedsCanvas,
  LockOutsideCanvas,
  LockViolatesSize,
  LockOverlap,
  AreaInfeasible,
  NegativeGutter,
  NegativeWeight,
  BadGroup,
  NestedGroups,
  BadTraversal,
  MissingPlacement,
  Overlap,
  Overflow,
  SizeOutOfBounds,
  LockMoved,
  PrefViolation,
  GroupIntrusion,
};

const char* to_string(ViolationKind kind);

struct Violation {
  ViolationKind kind;
  std::string field;
  std::string message;
};

std::vector<Violation> validate_problem(const LayoutProblem& problem);

/// Default geometric tolerance for a canvas: 1e-6 of its larger extent.
double geometric_tolerance(const Canvas& canvas);

/// Checks a concrete layout against the problem. Throws
/// LayoutError(UnknownElementId) if the placement ids do not match the
/// problem's element ids.
std::vector<Violation> validate_solution(const LayoutProblem& problem,
                                         const LayoutSolution& solution,
                                         std::optional<double> tolerance = {});

}  // namespace gridlayout
