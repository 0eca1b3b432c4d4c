#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gridlayout/io.hpp"

namespace gridlayout {

using json = nlohmann::json;
using ordered = nlohmann::ordered_json;

ParseError::ParseError(const std::string& message, std::string path, int line, int column)
    : LayoutError(ErrorKind::ParseError,
                  path + " (line " + std::to_string(line) + ", column " + std::to_string(column) + "): " + message),
      path_(std::move(path)),
      line_(line),
      column_(column) {}

namespace {

// Text offsets of every value in a well-formed document, keyed by path.
class Locator {
 public:
  explicit Locator(std::string_view text) : text_(text) {
    std::size_t at = 0;
    value(at, "$");
  }

  std::pair<int, int> position(std::string path) const {
    for (;;) {
      if (auto it = offsets_.find(path); it != offsets_.end()) return line_column(text_, it->second);
      const auto cut = path.find_last_of(".[");
      if (cut == std::string::npos || cut == 0) return {1, 1};
      path.resize(cut);
    }
  }

  static std::pair<int, int> line_column(std::string_view text, std::size_t offset) {
    int line = 1, column = 1;
    for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
      if (text[i] == '\n') ++line, column = 1;
      else ++column;
    }
    return {line, column};
  }

 private:
  void skip_ws(std::size_t& at) const {
    while (at < text_.size() && std::isspace(static_cast<unsigned char>(text_[at]))) ++at;
  }
  std::string string(std::size_t& at) const {
    std::string out;
    for (++at; at < text_.size() && text_[at] != '"'; ++at) {
      if (text_[at] == '\\') ++at;
      out += text_[at];
    }
    ++at;
    return out;
  }
  void value(std::size_t& at, const std::string& path) {
    skip_ws(at);
    offsets_[path] = at;
    if (at >= text_.size()) return;
    const char c = text_[at];
    if (c == '{') {
      ++at;
      for (;;) {
        skip_ws(at);
        if (at >= text_.size() || text_[at] == '}') break;
        const std::string key = string(at);
        skip_ws(at);
        ++at;  // ':'
        value(at, path + "." + key);
        skip_ws(at);
        if (at < text_.size() && text_[at] == ',') ++at;
      }
      ++at;
    } else if (c == '[') {
      ++at;
      for (int i = 0;; ++i) {
        skip_ws(at);
        if (at >= text_.size() || text_[at] == ']') break;
        value(at, path + "[" + std::to_string(i) + "]");
        skip_ws(at);
        if (at < text_.size() && text_[at] == ',') ++at;
      }
      ++at;
    } else if (c == '"') {
      string(at);
    } else {
      while (at < text_.size() && !std::isspace(static_cast<unsigned char>(text_[at])) && text_[at] != ',' &&
             text_[at] != '}' && text_[at] != ']')
        ++at;
    }
  }

  std::string_view text_;
  std::map<std::string, std::size_t> offsets_;
};

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {
    try {
      root_ = json::parse(text);
    } catch (const json::parse_error& e) {
      const auto [line, column] = Locator::line_column(text, e.byte > 0 ? e.byte - 1 : 0);
      std::string msg = e.what();
      if (auto cut = msg.find(": "); cut != std::string::npos) msg = msg.substr(cut + 2);
      throw ParseError("malformed JSON: " + msg, "$", line, column);
    }
    locator_.emplace(text);
  }

  const json& root() const { return root_; }

  [[noreturn]] void fail(const std::string& path, const std::string& message) const {
    const auto [line, column] = locator_->position(path);
    throw ParseError(message, path, line, column);
  }

  void object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) const {
    if (!j.is_object()) fail(path, "expected an object");
    std::set<std::string> keys(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
      if (!keys.count(k)) fail(path + "." + k, "unknown field '" + k + "'");
  }

  const json& field(const json& j, const std::string& path, const char* key) const {
    if (!j.contains(key)) fail(path + "." + key, std::string("missing required field '") + key + "'");
    return j.at(key);
  }

  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
  }
  double number(const json& obj, const std::string& path, const char* key) const {
    return number(field(obj, path, key), path + "." + key);
  }
  double number_or(const json& obj, const std::string& path, const char* key, double fallback) const {
    return obj.contains(key) ? number(obj.at(key), path + "." + key) : fallback;
  }
  int integer_or(const json& obj, const std::string& path, const char* key, int fallback) const {
    if (!obj.contains(key)) return fallback;
    const auto& v = obj.at(key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
  }
  std::string string(const json& j, const std::string& path) const {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
  }
  std::string string(const json& obj, const std::string& path, const char* key) const {
    return string(field(obj, path, key), path + "." + key);
  }
  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) fail(path, "expected an array");
    return j;
  }

 private:
  std::string_view text_;
  json root_;
  std::optional<Locator> locator_;
};

template <typename E, std::size_t N>
E enum_from(const Reader& r, const std::string& value, const std::string& path,
            const std::array<std::pair<const char*, E>, N>& table) {
  for (const auto& [name, e] : table)
    if (value == name) return e;
  std::string options;
  for (const auto& [name, e] : table) options += (options.empty() ? "" : ", ") + std::string(name);
  r.fail(path, "expected one of " + options);
}

constexpr std::array<std::pair<const char*, ElementKind>, 5> kKinds{{{"heading", ElementKind::Heading},
                                                                      {"paragraph", ElementKind::Paragraph},
                                                                      {"image", ElementKind::Image},
                                                                      {"button", ElementKind::Button},
                                                                      {"other", ElementKind::Other}}};
constexpr std::array<std::pair<const char*, HorizontalPref>, 3> kHPrefs{
    {{"none", HorizontalPref::None}, {"left", HorizontalPref::Left}, {"right", HorizontalPref::Right}}};
constexpr std::array<std::pair<const char*, VerticalPref>, 3> kVPrefs{
    {{"none", VerticalPref::None}, {"top", VerticalPref::Top}, {"bottom", VerticalPref::Bottom}}};

Rgb parse_color(const Reader& r, const std::string& text, const std::string& path) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (text.size() != 7 || text[0] != '#') r.fail(path, "expected a color as #rrggbb");
  int v[6];
  for (int i = 0; i < 6; ++i)
    if ((v[i] = hex(text[i + 1])) < 0) r.fail(path, "expected a color as #rrggbb");
  return {static_cast<std::uint8_t>(v[0] * 16 + v[1]), static_cast<std::uint8_t>(v[2] * 16 + v[3]),
          static_cast<std::uint8_t>(v[4] * 16 + v[5])};
}

std::string color_text(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

// At most six fractional digits; integral values print without a fraction.
ordered num(double x) {
  double r = std::round(x * 1e6) / 1e6;
  if (r == 0) r = 0;  // no negative zero
  if (std::abs(r) < 1e15 && r == std::floor(r)) return static_cast<std::int64_t>(r);
  return r;
}

std::string finish(const ordered& doc) { return doc.dump(2) + "\n"; }

}  // namespace

const char* to_string(ElementKind k) {
  for (const auto& [name, e] : kKinds)
    if (e == k) return name;
  return "other";
}
const char* to_string(HorizontalPref h) {
  for (const auto& [name, e] : kHPrefs)
    if (e == h) return name;
  return "none";
}
const char* to_string(VerticalPref v) {
  for (const auto& [name, e] : kVPrefs)
    if (e == v) return name;
  return "none";
}

LayoutProblem parse_problem(std::string_view text) {
  Reader r(text);
  const auto& root = r.root();
  r.object(root, "$", {"canvas", "gutter", "elements", "groups", "traversal", "weights"});
  LayoutProblem p;
  const auto& canvas = r.field(root, "$", "canvas");
  r.object(canvas, "$.canvas", {"width", "height"});
  p.canvas.width = r.number(canvas, "$.canvas", "width");
  p.canvas.height = r.number(canvas, "$.canvas", "height");
  p.gutter = r.number_or(root, "$", "gutter", 0);

  const auto& elements = r.array(r.field(root, "$", "elements"), "$.elements");
  for (std::size_t i = 0; i < elements.size(); ++i) {
    const std::string at = "$.elements[" + std::to_string(i) + "]";
    const auto& j = elements[i];
    r.object(j, at, {"id", "kind", "color", "minW", "maxW", "minH", "maxH", "locked", "hPref", "vPref"});
    Element e;
    e.id = r.string(j, at, "id");
    e.min_width = r.number(j, at, "minW");
    e.max_width = r.number(j, at, "maxW");
    e.min_height = r.number(j, at, "minH");
    e.max_height = r.number(j, at, "maxH");
    if (j.contains("kind")) e.kind = enum_from(r, r.string(j, at, "kind"), at + ".kind", kKinds);
    if (j.contains("color")) e.color = parse_color(r, r.string(j, at, "color"), at + ".color");
    if (j.contains("hPref")) e.h_pref = enum_from(r, r.string(j, at, "hPref"), at + ".hPref", kHPrefs);
    if (j.contains("vPref")) e.v_pref = enum_from(r, r.string(j, at, "vPref"), at + ".vPref", kVPrefs);
    if (j.contains("locked") && !j.at("locked").is_null()) {
      const auto& k = j.at("locked");
      const std::string kat = at + ".locked";
      r.object(k, kat, {"l", "t", "w", "h"});
      e.locked = Rect{r.number(k, kat, "l"), r.number(k, kat, "t"), r.number(k, kat, "w"), r.number(k, kat, "h")};
    }
    p.elements.push_back(std::move(e));
  }

  if (root.contains("groups")) {
    const auto& groups = r.array(root.at("groups"), "$.groups");
    for (std::size_t i = 0; i < groups.size(); ++i) {
      const std::string at = "$.groups[" + std::to_string(i) + "]";
      r.object(groups[i], at, {"id", "members"});
      Group g;
      g.id = r.string(groups[i], at, "id");
      const auto& members = r.array(r.field(groups[i], at, "members"), at + ".members");
      for (std::size_t m = 0; m < members.size(); ++m)
        g.members.push_back(r.string(members[m], at + ".members[" + std::to_string(m) + "]"));
      p.groups.push_back(std::move(g));
    }
  }
  if (root.contains("traversal")) {
    const auto& pairs = r.array(root.at("traversal"), "$.traversal");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const std::string at = "$.traversal[" + std::to_string(i) + "]";
      r.object(pairs[i], at, {"a", "b", "weight"});
      p.traversal.push_back(
          {r.string(pairs[i], at, "a"), r.string(pairs[i], at, "b"), r.number_or(pairs[i], at, "weight", 1.0)});
    }
  }
  if (root.contains("weights")) {
    const auto& w = root.at("weights");
    r.object(w, "$.weights", {"alignment", "rectangularity", "traversal"});
    p.weights.alignment = r.number_or(w, "$.weights", "alignment", p.weights.alignment);
    p.weights.rectangularity = r.number_or(w, "$.weights", "rectangularity", p.weights.rectangularity);
    p.weights.traversal = r.number_or(w, "$.weights", "traversal", p.weights.traversal);
  }
  return p;
}

std::string dump_problem(const LayoutProblem& p) {
  ordered doc;
  doc["canvas"] = {{"width", num(p.canvas.width)}, {"height", num(p.canvas.height)}};
  doc["gutter"] = num(p.gutter);
  doc["elements"] = ordered::array();
  for (const auto& e : p.elements) {
    ordered j;
    j["id"] = e.id;
    j["kind"] = to_string(e.kind);
    j["color"] = color_text(e.color);
    j["minW"] = num(e.min_width);
    j["maxW"] = num(e.max_width);
    j["minH"] = num(e.min_height);
    j["maxH"] = num(e.max_height);
    if (e.locked) j["locked"] = {{"l", num(e.locked->l)}, {"t", num(e.locked->t)}, {"w", num(e.locked->w)}, {"h", num(e.locked->h)}};
    j["hPref"] = to_string(e.h_pref);
    j["vPref"] = to_string(e.v_pref);
    doc["elements"].push_back(std::move(j));
  }
  doc["groups"] = ordered::array();
  for (const auto& g : p.groups) doc["groups"].push_back({{"id", g.id}, {"members", g.members}});
  doc["traversal"] = ordered::array();
  for (const auto& t : p.traversal) doc["traversal"].push_back({{"a", t.a}, {"b", t.b}, {"weight", num(t.weight)}});
  doc["weights"] = {{"alignment", num(p.weights.alignment)},
                    {"rectangularity", num(p.weights.rectangularity)},
                    {"traversal", num(p.weights.traversal)}};
  return finish(doc);
}

LayoutSolution parse_solution(std::string_view text) {
  Reader r(text);
  const auto& root = r.root();
  r.object(root, "$", {"placements", "stats"});
  LayoutSolution s;
  const auto& placements = r.array(r.field(root, "$", "placements"), "$.placements");
  for (std::size_t i = 0; i < placements.size(); ++i) {
    const std::string at = "$.placements[" + std::to_string(i) + "]";
    const auto& j = placements[i];
    r.object(j, at, {"id", "l", "r", "t", "b"});
    s.placements.push_back(
        {r.string(j, at, "id"), r.number(j, at, "l"), r.number(j, at, "r"), r.number(j, at, "t"), r.number(j, at, "b")});
  }
  if (root.contains("stats")) {
    const auto& j = root.at("stats");
    r.object(j, "$.stats", {"gridLines", "rectCases", "gamma", "pi", "objective", "optimalityPct"});
    s.stats.grid_lines = r.integer_or(j, "$.stats", "gridLines", 0);
    s.stats.rect_cases = r.integer_or(j, "$.stats", "rectCases", 0);
    s.stats.gamma = r.integer_or(j, "$.stats", "gamma", 0);
    s.stats.pi = r.integer_or(j, "$.stats", "pi", 0);
    s.stats.objective = r.number_or(j, "$.stats", "objective", 0);
    if (j.contains("optimalityPct") && !j.at("optimalityPct").is_null())
      s.stats.optimality_pct = r.number(j.at("optimalityPct"), "$.stats.optimalityPct");
  }
  return s;
}

std::string dump_solution(const LayoutSolution& s) {
  ordered doc;
  doc["placements"] = ordered::array();
  for (const auto& pe : s.placements)
    doc["placements"].push_back({{"id", pe.id}, {"l", num(pe.l)}, {"r", num(pe.r)}, {"t", num(pe.t)}, {"b", num(pe.b)}});
  ordered stats;
  stats["gridLines"] = s.stats.grid_lines;
  stats["rectCases"] = s.stats.rect_cases;
  stats["gamma"] = s.stats.gamma;
  stats["pi"] = s.stats.pi;
  stats["objective"] = num(s.stats.objective);
  if (s.stats.optimality_pct) stats["optimalityPct"] = num(*s.stats.optimality_pct);
  doc["stats"] = std::move(stats);
  return finish(doc);
}

std::string read_text(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ParseError("cannot open " + file.string(), "$", 1, 1);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& file, std::string_view text) {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw LayoutError(ErrorKind::InvalidProblem, "cannot write " + file.string());
  out << text;
}

LayoutProblem load_problem(const std::filesystem::path& file) { return parse_problem(read_text(file)); }
void save_problem(const std::filesystem::path& file, const LayoutProblem& p) { write_text(file, dump_problem(p)); }
LayoutSolution load_solution(const std::filesystem::path& file) { return parse_solution(read_text(file)); }
void save_solution(const std::filesystem::path& file, const LayoutSolution& s) { write_text(file, dump_solution(s)); }

}  // namespace gridlayout
