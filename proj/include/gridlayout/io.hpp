#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "gridlayout/core_model.hpp"
#include "gridlayout/milp.hpp"

namespace gridlayout {

/// Malformed or schema-invalid document. `path` is a JSONPath-like location
/// ($.elements[2].minW); line and column are 1-based positions in the text.
class ParseError : public LayoutError {
 public:
  ParseError(const std::string& message, std::string path, int line, int column);
  const std::string& path() const { return path_; }
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  std::string path_;
  int line_, column_;
};

// Problem and solution documents. Numbers are written with at most six
// fractional digits and keys in a fixed order, so output is diffable.

LayoutProblem parse_problem(std::string_view text);
std::string dump_problem(const LayoutProblem& p);
LayoutProblem load_problem(const std::filesystem::path& file);
void save_problem(const std::filesystem::path& file, const LayoutProblem& p);

LayoutSolution parse_solution(std::string_view text);
std::string dump_solution(const LayoutSolution& s);
LayoutSolution load_solution(const std::filesystem::path& file);
void save_solution(const std::filesystem::path& file, const LayoutSolution& s);

/// Reads a whole file; throws ParseError (path "$") if it cannot be opened.
std::string read_text(const std::filesystem::path& file);
void write_text(const std::filesystem::path& file, std::string_view text);

const char* to_string(ElementKind k);
const char* to_string(HorizontalPref h);
const char* to_string(VerticalPref v);

struct SvgStyle {
  bool overlay = false;   // dashed grid lines plus the outline rectangle
  double scale = 1.0;
  double spacing = 24.0;  // gap between gallery panels, in output units
};

/// One rect per element filled with its color, in element order.
std::string render_svg(const LayoutProblem& p, const LayoutSolution& s, const SvgStyle& style = {});
/// Solutions side by side in one document.
std::string render_gallery(const LayoutProblem& p, const std::vector<LayoutSolution>& solutions,
                           const SvgStyle& style = {});

/// LP text format (Minimize/Maximize, Subject To, Bounds, Binaries, End).
/// Inactive rows are skipped; lines are wrapped below 255 characters.
std::string export_lp(const MilpInstance& inst);

struct LpSyntaxReport {
  bool ok = true;
  int line = 0;  // first offending line, 1-based
  std::string message;
  int constraints = 0;
  int bounds = 0;
  int binaries = 0;
};

/// Grammar check for the subset of the LP format that export_lp writes.
LpSyntaxReport check_lp_syntax(std::string_view text);

}  // namespace gridlayout
