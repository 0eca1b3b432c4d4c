#include <doctest.h>

#include <cmath>
#include <sstream>

#include <json.hpp>

#include "corpus.hpp"
#include "gridlayout/io.hpp"
#include "gridlayout/scoring.hpp"
#include "support.hpp"

using namespace gridlayout;
using namespace gridlayout::testing;

namespace {

int count(const std::string& text, const std::string& needle) {
  int n = 0;
  for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + 1)) ++n;
  return n;
}

ParseError parse_error(std::string_view text) {
  try {
    parse_problem(text);
  } catch (const ParseError& e) {
    return e;
  }
  FAIL("no parse error");
  return ParseError("", "", 0, 0);
}

// Structural check against the shipped schema: object keys, required keys,
// enums and basic types. Returns the first offending path, or "".
std::string schema_mismatch(const nlohmann::json& doc, const nlohmann::json& node, const nlohmann::json& root,
                            const std::string& path) {
  if (node.contains("$ref")) {
    const std::string ref = node["$ref"];
    return schema_mismatch(doc, root["$defs"][ref.substr(ref.rfind('/') + 1)], root, path);
  }
  if (node.contains("enum")) {
    for (const auto& v : node["enum"])
      if (v == doc) return "";
    return path;
  }
  auto types = node.value("type", nlohmann::json());
  if (types.is_string()) types = nlohmann::json::array({types});
  auto allows = [&](const char* t) {
    for (const auto& x : types)
      if (x == t) return true;
    return types.empty();
  };
  if (doc.is_null()) return allows("null") ? "" : path;
  if (doc.is_object()) {
    if (!allows("object")) return path;
    for (const auto& key : node.value("required", nlohmann::json::array()))
      if (!doc.contains(key.get<std::string>())) return path + "." + key.get<std::string>();
    for (const auto& [k, v] : doc.items()) {
      if (!node["properties"].contains(k)) return path + "." + k;
      if (auto bad = schema_mismatch(v, node["properties"][k], root, path + "." + k); !bad.empty()) return bad;
    }
    return "";
  }
  if (doc.is_array()) {
    if (!allows("array")) return path;
    for (std::size_t i = 0; i < doc.size(); ++i)
      if (auto bad = schema_mismatch(doc[i], node["items"], root, path + "[" + std::to_string(i) + "]"); !bad.empty())
        return bad;
    return "";
  }
  if (doc.is_number_integer() && (allows("integer") || allows("number"))) return "";
  if (doc.is_number() && allows("number")) return "";
  if (doc.is_string() && allows("string")) return "";
  if (doc.is_boolean() && allows("boolean")) return "";
  return path;
}

LayoutProblem rich_problem() {
  auto p = make_problem(320.5, 200, {flex("title", 100, 300, 20, 40), flex("photo", 50, 150, 50, 150),
                                     flex("body", 80, 200, 40, 120)});
  p.gutter = 4;
  p.elements[0].kind = ElementKind::Heading;
  p.elements[0].color = Rgb{0x12, 0xab, 0xef};
  p.elements[0].v_pref = VerticalPref::Top;
  p.elements[1].kind = ElementKind::Image;
  p.elements[1].h_pref = HorizontalPref::Right;
  p.elements[1].locked = Rect{170.5, 50, 100, 100};
  p.groups = {{"g", {"title", "body"}}};
  p.traversal = {{"title", "body", 0.25}};
  p.weights = {2, 0.5, 0.125};
  return p;
}

}  // namespace

TEST_CASE("problem documents round-trip") {
  const auto p = rich_problem();
  const auto text = dump_problem(p);
  CHECK(parse_problem(text) == p);
  CHECK(dump_problem(parse_problem(text)) == text);
}

TEST_CASE("fixtures match the corpus problems") {
  CHECK(load_problem("tests/fixtures/template.json") == template_problem());
  CHECK(load_problem("tests/fixtures/landing.json") == landing_problem());
  CHECK(load_problem("tests/fixtures/dashboard.json") == dashboard_problem());
}

TEST_CASE("golden fixture round-trips byte for byte") {
  const auto text = read_text("tests/fixtures/template.json");
  CHECK(dump_problem(parse_problem(text)) == text);
  const auto twelve = load_problem("tests/fixtures/dashboard.json");
  CHECK(twelve.elements.size() == 12);
  CHECK(validate_problem(twelve).empty());
}

TEST_CASE("documents conform to the shipped schemas") {
  const auto problem_schema = nlohmann::json::parse(read_text("schema/problem.schema.json"));
  const auto solution_schema = nlohmann::json::parse(read_text("schema/solution.schema.json"));
  const auto doc = nlohmann::json::parse(dump_problem(rich_problem()));
  CHECK(schema_mismatch(doc, problem_schema, problem_schema, "$") == "");
  for (const char* f : {"tests/fixtures/template.json", "tests/fixtures/landing.json", "tests/fixtures/dashboard.json"})
    CHECK(schema_mismatch(nlohmann::json::parse(read_text(f)), problem_schema, problem_schema, "$") == "");

  // Every optional field the parser accepts is in the schema, and vice versa.
  auto bad = doc;
  bad["elements"][0]["colour"] = "#000000";
  CHECK(schema_mismatch(bad, problem_schema, problem_schema, "$") == "$.elements[0].colour");
  CHECK_THROWS_AS(parse_problem(bad.dump()), ParseError);

  LayoutSolution s;
  s.placements = {{"a", 0, 10, 0, 10}};
  s.stats.optimality_pct = 50;
  CHECK(schema_mismatch(nlohmann::json::parse(dump_solution(s)), solution_schema, solution_schema, "$") == "");
}

TEST_CASE("numbers are written with at most six decimals") {
  LayoutSolution s;
  s.placements = {{"a", 0.1234567, 10.0000001, -0.0, 1.0 / 3.0}};
  s.stats.objective = -2;
  const auto text = dump_solution(s);
  CHECK(text.find("\"l\": 0.123457") != std::string::npos);
  CHECK(text.find("\"r\": 10,") != std::string::npos);
  CHECK(text.find("\"t\": 0,") != std::string::npos);
  CHECK(text.find("\"b\": 0.333333") != std::string::npos);
  CHECK(text.find("\"objective\": -2") != std::string::npos);
  CHECK(text.find("optimalityPct") == std::string::npos);
  CHECK(text.back() == '\n');
}

TEST_CASE("solution documents round-trip") {
  const auto p = make_problem(200, 150, {flex("a", 40, 120, 30, 80), flex("b", 40, 100, 30, 70), flex("c", 30, 80, 30, 60)});
  auto s = solve_mode(p, ObjectiveMode::Composite).solution;
  fill_stats(p, s);
  s.stats.optimality_pct = 87.5;
  const auto text = dump_solution(s);
  const auto back = parse_solution(text);
  CHECK(dump_solution(back) == text);
  CHECK(back.stats == s.stats);
  CHECK(back.placements.size() == s.placements.size());
}

TEST_CASE("parse errors carry a path and position") {
  const auto missing = parse_error("{\n  \"elements\": []\n}");
  CHECK(missing.kind() == ErrorKind::ParseError);
  CHECK(missing.path() == "$.canvas");
  CHECK(missing.line() == 1);

  const auto unknown = parse_error(R"({
  "canvas": {"width": 100, "height": 100},
  "elements": [
    {"id": "a", "minW": 1, "maxW": 2, "minH": 1, "maxH": 2, "colour": "#000000"}
  ]
})");
  CHECK(unknown.path() == "$.elements[0].colour");
  CHECK(unknown.line() == 4);
  CHECK(unknown.column() == 71);

  const auto type = parse_error(R"({"canvas": {"width": "wide", "height": 100}, "elements": []})");
  CHECK(type.path() == "$.canvas.width");
  CHECK(type.column() == 22);

  const auto kind = parse_error(R"({"canvas": {"width": 1, "height": 1}, "elements": [
    {"id": "a", "kind": "video", "minW": 1, "maxW": 1, "minH": 1, "maxH": 1}]})");
  CHECK(kind.path() == "$.elements[0].kind");
  CHECK(kind.line() == 2);

  const auto color = parse_error(R"({"canvas": {"width": 1, "height": 1}, "elements": [
    {"id": "a", "color": "red", "minW": 1, "maxW": 1, "minH": 1, "maxH": 1}]})");
  CHECK(color.path() == "$.elements[0].color");

  const auto syntax = parse_error("{\n  \"canvas\": {\"width\": 1,,}\n}");
  CHECK(syntax.path() == "$");
  CHECK(syntax.line() == 2);
  CHECK(std::string(syntax.what()).find("malformed") != std::string::npos);

  CHECK_THROWS_AS(load_problem("tests/fixtures/no_such_file.json"), ParseError);
}

TEST_CASE("one rect per element") {
  auto p = make_problem(100, 80, {flex("a", 10, 60, 10, 40)});
  LayoutSolution s;
  s.placements = {{"a", 10, 40, 10, 30}};
  const auto svg = render_svg(p, s);
  CHECK(count(svg, "<rect") == 1);
  CHECK(count(svg, "class=\"grid\"") == 0);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("fill=\"#999999\"") != std::string::npos);
}

TEST_CASE("overlay marks every grid line") {
  auto p = make_problem(100, 100, {fixed("a", 50, 50), fixed("b", 50, 50), fixed("c", 50, 50), fixed("d", 50, 50)});
  LayoutSolution s;
  s.placements = {{"a", 0, 50, 0, 50}, {"b", 50, 100, 0, 50}, {"c", 0, 50, 50, 100}, {"d", 50, 100, 50, 100}};
  SvgStyle style;
  style.overlay = true;
  const auto svg = render_svg(p, s, style);
  CHECK(count(svg, "<rect") == 4);
  CHECK(count(svg, "class=\"grid\"") == grid_line_count(p, s));
  CHECK(count(svg, "class=\"grid\"") == 6);
  CHECK(count(svg, "class=\"outline\"") == 1);

  const auto gallery = render_gallery(p, {s, s, s}, style);
  CHECK(count(gallery, "<rect") == 12);
  CHECK(count(gallery, "<g ") == 3);
}

TEST_CASE("element ids are escaped in svg") {
  auto p = make_problem(100, 80, {flex("a<&>\"", 10, 60, 10, 40)});
  LayoutSolution s;
  s.placements = {{"a<&>\"", 10, 40, 10, 30}};
  const auto svg = render_svg(p, s);
  CHECK(svg.find("a&lt;&amp;&gt;&quot;") != std::string::npos);
}

TEST_CASE("lp export of a single element") {
  auto p = make_problem(100, 80, {flex("a", 10, 60, 10, 40)});
  const auto core = build_core(p);
  const auto lp = export_lp(core);
  const auto report = check_lp_syntax(lp);
  CHECK_MESSAGE(report.ok, report.message, " at line ", report.line);
  CHECK(report.bounds == 6);
  CHECK(report.binaries == 0);
  CHECK(lp.find("Binaries") == std::string::npos);
  CHECK(lp.rfind("Minimize\n", 0) == 0);
  CHECK(lp.substr(lp.size() - 4) == "End\n");
}

TEST_CASE("lp export of two elements lists the relation binaries") {
  const auto p = make_problem(100, 100, {flex("a", 10, 100, 10, 100), flex("b", 10, 100, 10, 100)});
  const auto core = build_core(p);
  const auto report = check_lp_syntax(export_lp(core));
  CHECK(report.ok);
  CHECK(report.binaries == 4);
  CHECK(report.constraints == core.num_active_constraints());
}

TEST_CASE("full models export cleanly") {
  for (const auto& p : {template_problem(), dashboard_problem()}) {
    ModelOptions opt;
    opt.exact_metrics = true;
    auto m = build_layout_model(p, opt);
    set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
    const auto lp = export_lp(m.instance);
    const auto report = check_lp_syntax(lp);
    CHECK_MESSAGE(report.ok, report.message, " at line ", report.line);
    CHECK(report.constraints == m.instance.num_active_constraints());
    CHECK(report.binaries == m.instance.count_vars(VarKind::Binary));
    std::istringstream in(lp);
    for (std::string line; std::getline(in, line);) CHECK(line.size() < 255);
  }
}

TEST_CASE("lp names are sanitized and unique") {
  MilpInstance inst;
  const int a = inst.add_var("x[0]", VarKind::Continuous, 0, 1);
  const int b = inst.add_var("x(0)", VarKind::Continuous, 0, 1);
  const int c = inst.add_var("x(0)", VarKind::Binary, 0, 1);
  const int d = inst.add_var("3d", VarKind::Continuous, -INFINITY, INFINITY);
  inst.add_constraint({{1, a}, {-2.5, b}, {1, c}, {1, d}}, Sense::GreaterEqual, -1, "row one");
  inst.add_constraint({{0, a}}, Sense::LessEqual, 0, "zero");
  const auto lp = export_lp(inst);
  const auto report = check_lp_syntax(lp);
  CHECK_MESSAGE(report.ok, report.message, " at line ", report.line, "\n", lp);
  CHECK(lp.find("x_0_") != std::string::npos);
  CHECK(lp.find("x(0)#1") != std::string::npos);
  CHECK(lp.find("_3d free") != std::string::npos);
  CHECK(report.constraints == 2);
}

TEST_CASE("grammar checker rejects malformed text") {
  CHECK_FALSE(check_lp_syntax("Subject To\n c: x <= 1\nEnd\n").ok);
  CHECK_FALSE(check_lp_syntax("Minimize\n obj: x\nSubject To\n c: x <= \nEnd\n").ok);
  CHECK_FALSE(check_lp_syntax("Minimize\n obj: x y\nSubject To\n c: x <= 1\nEnd\n").ok);
  CHECK_FALSE(check_lp_syntax("Minimize\n obj: x\nSubject To\n c: x <= 1\nBinaries\n z\nEnd\n").ok);
  CHECK_FALSE(check_lp_syntax("Minimize\n obj: x\nSubject To\n c: x <= 1\n").ok);
  const auto bad = check_lp_syntax("Minimize\n obj: x\nSubject To\n c: x <= 1\nBounds\n x <= <= 2\nEnd\n");
  CHECK_FALSE(bad.ok);
  CHECK(bad.line == 6);
  const auto good = check_lp_syntax(
      "Maximize\n obj: 2 x + 3 y\nSubject To\n c1: x + y\n   <= 4\n c2: - x + y >= -1\nBounds\n 0 <= x <= 3\n y free\n"
      "Binaries\n x\nEnd\n");
  CHECK_MESSAGE(good.ok, good.message);
  CHECK(good.constraints == 2);
  CHECK(good.bounds == 2);
  CHECK(good.binaries == 1);
}
