#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <unordered_set>

#include "gridlayout/io.hpp"

namespace gridlayout {
namespace {

constexpr std::size_t kWrap = 240;

bool name_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || std::string_view("!\"#$%&()/,.;?@_`'{}|~").find(c) !=
                                                            std::string_view::npos;
}

bool name_start(char c) { return name_char(c) && !std::isdigit(static_cast<unsigned char>(c)) && c != '.'; }

// Names restricted to the LP character set, unique, not starting with a
// digit, a period, or an exponent-like 'e'.
std::vector<std::string> lp_names(const std::vector<std::string>& raw, const char* fallback) {
  std::vector<std::string> out;
  std::unordered_set<std::string> used;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    std::string s;
    for (char c : raw[i]) s += name_char(c) ? c : '_';
    if (s.empty()) s = fallback + std::to_string(i);
    if (!name_start(s[0]) || s[0] == 'e' || s[0] == 'E') s = "_" + s;
    if (s.size() > 200) s.resize(200);
    std::string unique = s;
    for (int k = 1; used.count(unique); ++k) unique = s + "#" + std::to_string(k);
    used.insert(unique);
    out.push_back(std::move(unique));
  }
  return out;
}

std::string number(double x) {
  if (x == 0) return "0";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

class LineWriter {
 public:
  explicit LineWriter(std::ostringstream& out) : out_(out) {}
  void token(const std::string& t) {
    if (!line_.empty() && line_.size() + 1 + t.size() > kWrap) flush();
    if (line_.empty()) line_ = " ";
    if (line_ != " ") line_ += ' ';
    line_ += t;
  }
  void flush() {
    if (!line_.empty()) out_ << line_ << '\n';
    line_.clear();
  }

 private:
  std::ostringstream& out_;
  std::string line_;
};

void write_terms(LineWriter& w, const std::vector<Term>& terms, const std::vector<std::string>& names) {
  if (terms.empty()) {
    w.token("0");
    w.token(names.empty() ? "_none" : names[0]);
    return;
  }
  // A signed term stays on one line.
  bool first = true;
  for (const auto& t : terms) {
    std::string term;
    if (!first || t.coef < 0) term = t.coef < 0 ? "- " : "+ ";
    first = false;
    if (std::abs(t.coef) != 1) term += number(std::abs(t.coef)) + " ";
    w.token(term + names[t.var]);
  }
}

}  // namespace

std::string export_lp(const MilpInstance& inst) {
  std::vector<std::string> raw;
  for (const auto& v : inst.vars()) raw.push_back(v.name);
  const auto names = lp_names(raw, "x");
  std::vector<std::string> raw_rows;
  std::vector<const LinearConstraint*> rows;
  for (const auto& c : inst.constraints())
    if (c.active) {
      raw_rows.push_back(c.name);
      rows.push_back(&c);
    }
  const auto row_names = lp_names(raw_rows, "c");

  std::ostringstream out;
  const auto& obj = inst.objective();
  out << (obj.sense == ObjectiveSense::Minimize ? "Minimize" : "Maximize") << '\n';
  if (obj.constant != 0) out << "\\ objective constant " << number(obj.constant) << '\n';
  {
    LineWriter w(out);
    w.token("obj:");
    write_terms(w, obj.terms, names);
    w.flush();
  }
  out << "Subject To\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    LineWriter w(out);
    w.token(row_names[i] + ":");
    write_terms(w, rows[i]->terms, names);
    w.token(rows[i]->sense == Sense::LessEqual ? "<=" : rows[i]->sense == Sense::Equal ? "=" : ">=");
    w.token(number(rows[i]->rhs));
    w.flush();
  }
  out << "Bounds\n";
  std::vector<std::string> binaries;
  for (std::size_t j = 0; j < inst.vars().size(); ++j) {
    const auto& v = inst.vars()[j];
    if (v.kind == VarKind::Binary) {
      binaries.push_back(names[j]);
      if (v.lower == 0 && v.upper == 1) continue;
    }
    const bool lo_inf = std::isinf(v.lower), hi_inf = std::isinf(v.upper);
    if (!lo_inf && !hi_inf && v.lower == v.upper) out << ' ' << names[j] << " = " << number(v.lower) << '\n';
    else if (lo_inf && hi_inf) out << ' ' << names[j] << " free\n";
    else
      out << ' ' << (lo_inf ? "-inf" : number(v.lower)) << " <= " << names[j] << " <= "
          << (hi_inf ? "+inf" : number(v.upper)) << '\n';
  }
  if (!binaries.empty()) {
    out << "Binaries\n";
    LineWriter w(out);
    for (const auto& b : binaries) w.token(b);
    w.flush();
  }
  out << "End\n";
  return out.str();
}

namespace {

enum class Tok { Name, Number, Sign, Rel, Colon, End };

struct Token {
  Tok kind = Tok::End;
  std::string text;
};

std::vector<Token> lex(std::string_view line, std::string& error) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    const char c = line[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\\') {
      break;
    } else if (c == '+' || c == '-') {
      // "+inf" / "-inf" are numbers in bound lines.
      if (line.substr(i + 1, 3) == "inf" || line.substr(i + 1, 3) == "Inf") {
        out.push_back({Tok::Number, std::string(line.substr(i, 4))});
        i += 4;
      } else {
        out.push_back({Tok::Sign, std::string(1, c)});
        ++i;
      }
    } else if (c == '<' || c == '>' || c == '=') {
      std::size_t j = i + 1;
      if (j < line.size() && (line[j] == '=' || line[j] == '<' || line[j] == '>')) ++j;
      out.push_back({Tok::Rel, std::string(line.substr(i, j - i))});
      i = j;
    } else if (c == ':') {
      out.push_back({Tok::Colon, ":"});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      std::size_t j = i;
      while (j < line.size() && (std::isdigit(static_cast<unsigned char>(line[j])) || line[j] == '.')) ++j;
      if (j < line.size() && (line[j] == 'e' || line[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < line.size() && (line[k] == '+' || line[k] == '-')) ++k;
        if (k < line.size() && std::isdigit(static_cast<unsigned char>(line[k]))) {
          j = k;
          while (j < line.size() && std::isdigit(static_cast<unsigned char>(line[j]))) ++j;
        }
      }
      out.push_back({Tok::Number, std::string(line.substr(i, j - i))});
      i = j;
    } else if (name_start(c)) {
      std::size_t j = i;
      while (j < line.size() && name_char(line[j]) && line[j] != ':') ++j;
      out.push_back({Tok::Name, std::string(line.substr(i, j - i))});
      i = j;
    } else {
      error = std::string("unexpected character '") + c + "'";
      return {};
    }
  }
  return out;
}

std::string lower(std::string_view s) {
  std::string out;
  for (char c : s) out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool relation(const std::string& r) { return r == "<=" || r == "=<" || r == ">=" || r == "=>" || r == "=" || r == "<" || r == ">"; }

// [sign] [number] name { sign [number] name }, consumed from `at`.
bool expression(const std::vector<Token>& t, std::size_t& at, std::set<std::string>& vars, std::string& error) {
  bool first = true;
  while (at < t.size() && t[at].kind != Tok::Rel) {
    if (t[at].kind == Tok::Sign) ++at;
    else if (!first) return error = "expected '+' or '-' between terms", false;
    if (at < t.size() && t[at].kind == Tok::Number) ++at;
    if (at >= t.size() || t[at].kind != Tok::Name) return error = "expected a variable name", false;
    vars.insert(t[at].text);
    ++at;
    first = false;
  }
  if (first) return error = "empty expression", false;
  return true;
}

}  // namespace

LpSyntaxReport check_lp_syntax(std::string_view text) {
  LpSyntaxReport report;
  enum class Section { Start, Objective, Constraints, Bounds, Binaries, Done } section = Section::Start;
  std::set<std::string> vars;
  std::vector<Token> pending;  // an objective or constraint spread over several lines
  int pending_line = 0;
  bool objective_seen = false;
  std::vector<Token> objective;
  int objective_line = 0;
  auto fail = [&](int line, std::string message) {
    report.ok = false;
    report.line = line;
    report.message = std::move(message);
    return report;
  };

  auto close_constraint = [&](std::string& error) {
    std::size_t at = 0;
    if (pending.size() >= 2 && pending[0].kind == Tok::Name && pending[1].kind == Tok::Colon) at = 2;
    if (!expression(pending, at, vars, error)) return false;
    if (at >= pending.size() || !relation(pending[at].text)) return error = "expected a relation", false;
    ++at;
    if (at < pending.size() && pending[at].kind == Tok::Sign) ++at;
    if (at >= pending.size() || pending[at].kind != Tok::Number) return error = "expected a right-hand side", false;
    if (++at != pending.size()) return error = "trailing tokens after the right-hand side", false;
    ++report.constraints;
    pending.clear();
    return true;
  };

  std::istringstream in{std::string(text)};
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (raw.size() > 255) return fail(lineno, "line longer than 255 characters");
    const auto trimmed = raw.substr(0, raw.find('\\'));
    std::string error;
    auto tokens = lex(trimmed, error);
    if (!error.empty()) return fail(lineno, error);
    if (tokens.empty()) continue;

    const std::string head = lower(trimmed.substr(trimmed.find_first_not_of(" \t")));
    auto keyword = [&](std::initializer_list<const char*> words) {
      std::string h = head;
      while (!h.empty() && std::isspace(static_cast<unsigned char>(h.back()))) h.pop_back();
      for (const char* w : words)
        if (h == w) return true;
      return false;
    };

    if (keyword({"minimize", "minimum", "min", "maximize", "maximum", "max"})) {
      if (section != Section::Start) return fail(lineno, "objective sense after the objective section");
      section = Section::Objective;
      continue;
    }
    if (keyword({"subject to", "such that", "st", "s.t."})) {
      if (section != Section::Objective) return fail(lineno, "constraints section out of order");
      if (objective.empty()) return fail(lineno, "missing objective");
      std::size_t at = 0;
      if (objective.size() >= 2 && objective[0].kind == Tok::Name && objective[1].kind == Tok::Colon) at = 2;
      if (!expression(objective, at, vars, error)) return fail(objective_line, error);
      if (at != objective.size()) return fail(objective_line, "relation in the objective");
      objective_seen = true;
      section = Section::Constraints;
      continue;
    }
    if (keyword({"bounds", "bound"})) {
      if (section != Section::Constraints) return fail(lineno, "bounds section out of order");
      if (!pending.empty()) return fail(pending_line, "unterminated constraint");
      section = Section::Bounds;
      continue;
    }
    if (keyword({"binaries", "binary", "bin"})) {
      if (section != Section::Constraints && section != Section::Bounds)
        return fail(lineno, "binaries section out of order");
      if (!pending.empty()) return fail(pending_line, "unterminated constraint");
      section = Section::Binaries;
      continue;
    }
    if (keyword({"end"})) {
      if (section == Section::Start || section == Section::Objective) return fail(lineno, "missing sections");
      if (!pending.empty()) return fail(pending_line, "unterminated constraint");
      section = Section::Done;
      continue;
    }

    switch (section) {
      case Section::Start:
        return fail(lineno, "expected Minimize or Maximize");
      case Section::Objective:
        if (objective.empty()) objective_line = lineno;
        objective.insert(objective.end(), tokens.begin(), tokens.end());
        break;
      case Section::Constraints: {
        if (pending.empty()) pending_line = lineno;
        pending.insert(pending.end(), tokens.begin(), tokens.end());
        // Complete once a relation has been followed by its right-hand side.
        bool complete = false;
        for (std::size_t k = 0; k < pending.size(); ++k)
          if (pending[k].kind == Tok::Rel && pending.back().kind == Tok::Number && k + 1 < pending.size()) complete = true;
        if (complete && !close_constraint(error)) return fail(pending_line, error);
        break;
      }
      case Section::Bounds: {
        const auto& t = tokens;
        auto is = [&](std::size_t k, Tok kind) { return k < t.size() && t[k].kind == kind; };
        bool ok = false;
        if (t.size() == 2 && is(0, Tok::Name) && lower(t[1].text) == "free") ok = true;
        else if (t.size() == 3 && is(0, Tok::Name) && is(1, Tok::Rel) && is(2, Tok::Number)) ok = relation(t[1].text);
        else if (t.size() == 3 && is(0, Tok::Number) && is(1, Tok::Rel) && is(2, Tok::Name)) ok = relation(t[1].text);
        else if (t.size() == 5 && is(0, Tok::Number) && is(1, Tok::Rel) && is(2, Tok::Name) && is(3, Tok::Rel) &&
                 is(4, Tok::Number))
          ok = relation(t[1].text) && relation(t[3].text);
        if (!ok) return fail(lineno, "malformed bound");
        for (const auto& tok : t)
          if (tok.kind == Tok::Name && lower(tok.text) != "free") vars.insert(tok.text);
        ++report.bounds;
        break;
      }
      case Section::Binaries:
        for (const auto& tok : tokens) {
          if (tok.kind != Tok::Name) return fail(lineno, "expected variable names");
          if (!vars.count(tok.text)) return fail(lineno, "binary '" + tok.text + "' does not appear in the model");
          ++report.binaries;
        }
        break;
      case Section::Done:
        return fail(lineno, "content after End");
    }
  }
  if (section != Section::Done) return fail(lineno, "missing End");
  if (!objective_seen) return fail(1, "missing objective");
  return report;
}

}  // namespace gridlayout
