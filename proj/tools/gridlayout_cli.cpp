#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iomanip>
#include <iostream>

#include "gridlayout/diversifier.hpp"
#include "gridlayout/io.hpp"

using namespace gridlayout;
using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

constexpr int kOk = 0, kFailed = 1, kUsage = 2;

struct Options {
  std::optional<double> time_limit;
  int band = 0;
  int grid_points = 3;
  std::optional<double> gutter;
  long node_limit = 400;
  int threads = 0;
  bool quiet = false;
  bool as_json = false;

  std::string problem;
  std::string out;
  std::string seed;
  std::vector<std::string> solutions;
  int k = 5;
  int radius = 2;
  bool overlay = false;
  std::string band_pct;  // "lo-hi" for solve
};

void log(const Options& o, const std::string& line) {
  if (!o.quiet) std::cerr << line << '\n';
}

json as_json(const LayoutSolution& s) { return json::parse(dump_solution(s)); }

LayoutProblem load(const Options& o) {
  auto p = load_problem(o.problem);
  if (o.gutter) p.gutter = *o.gutter;
  return p;
}

DiversifyConfig config(const Options& o) {
  DiversifyConfig cfg;
  cfg.grid_points = o.grid_points;
  cfg.band = o.band;
  cfg.per_solve_nodes = o.node_limit;
  cfg.threads = o.threads;
  if (o.time_limit) cfg.time_budget = std::chrono::duration<double>(*o.time_limit);
  return cfg;
}

std::string summary(const LayoutSolution& s) {
  std::string line = "grid lines " + std::to_string(s.stats.grid_lines) + ", outline cases " +
                     std::to_string(s.stats.rect_cases) + ", gamma " + std::to_string(s.stats.gamma) + ", pi " +
                     std::to_string(s.stats.pi);
  if (s.stats.optimality_pct) line += ", optimality " + std::to_string(*s.stats.optimality_pct) + "%";
  return line;
}

// Problem violations fail the command before any solve.
bool check_problem(const Options& o, const LayoutProblem& p) {
  const auto issues = validate_problem(p);
  if (issues.empty()) return true;
  if (o.as_json) {
    json v = json::array();
    for (const auto& i : issues) v.push_back({{"kind", to_string(i.kind)}, {"field", i.field}, {"message", i.message}});
    std::cout << json{{"valid", false}, {"violations", v}}.dump(2) << '\n';
  } else {
    for (const auto& i : issues) std::cerr << to_string(i.kind) << " at " << i.field << ": " << i.message << '\n';
  }
  return false;
}

int cmd_validate(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  if (o.as_json) std::cout << json{{"valid", true}, {"violations", json::array()}}.dump(2) << '\n';
  else std::cout << "valid: " << p.elements.size() << " elements\n";
  return kOk;
}

// Writes solution-N.json files; returns [{file, solution}].
json write_files(const Options& o, const std::vector<LayoutSolution>& out) {
  const fs::path dir = o.out.empty() ? fs::path("solutions") : fs::path(o.out);
  fs::create_directories(dir);
  json list = json::array();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto file = dir / ("solution-" + std::to_string(i + 1) + ".json");
    save_solution(file, out[i]);
    list.push_back({{"file", file.string()}, {"solution", as_json(out[i])}});
  }
  return list;
}

int write_solutions(const Options& o, const std::vector<LayoutSolution>& out, const char* what) {
  const auto list = write_files(o, out);
  if (o.as_json) {
    std::cout << json{{"count", out.size()}, {"solutions", list}}.dump(2) << '\n';
  } else {
    for (std::size_t i = 0; i < out.size(); ++i)
      std::cout << list[i]["file"].get<std::string>() << ": " << summary(out[i]) << '\n';
  }
  log(o, std::to_string(out.size()) + " " + what + " layout(s) written");
  return out.empty() ? kFailed : kOk;
}

int cmd_solve(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  auto cfg = config(o);
  std::optional<LayoutSolution> s;
  json info;
  if (!o.band_pct.empty()) {
    double lo = 0, hi = 0;
    if (std::sscanf(o.band_pct.c_str(), "%lf-%lf", &lo, &hi) != 2 || lo < 0 || hi > 100 || lo > hi)
      throw CLI::ValidationError("--optimality", "expected LO-HI within 0-100");
    const auto ref = optimality_reference(p, cfg);
    s = generate_in_band(p, ref, lo, hi, cfg);
    info = {{"best", ref.best}, {"worst", ref.worst}};
    if (!s) {
      std::cerr << "no layout found in the optimality band " << o.band_pct << '\n';
      if (o.as_json) std::cout << json{{"status", "not-found"}, {"reference", info}}.dump(2) << '\n';
      return kFailed;
    }
  } else {
    if (o.time_limit) {
      cfg.time_budget.reset();
      cfg.per_solve_time = std::chrono::duration<double>(*o.time_limit);
    }
    const auto r = solve_layout(p, cfg);
    log(o, std::string("status ") + to_string(r.result.status) + ", nodes " + std::to_string(r.result.nodes) +
               ", gap " + std::to_string(r.result.gap));
    info = {{"status", to_string(r.result.status)}, {"nodes", r.result.nodes}, {"gap", r.result.gap}};
    s = r.solution;
    if (!s) {
      std::cerr << "no layout found within the limits\n";
      if (o.as_json) std::cout << json{{"status", "not-found"}, {"search", info}}.dump(2) << '\n';
      return kFailed;
    }
  }
  if (!o.out.empty()) save_solution(o.out, *s);
  if (o.as_json) std::cout << json{{"search", info}, {"solution", as_json(*s)}}.dump(2) << '\n';
  else if (o.out.empty()) std::cout << dump_solution(*s);
  else std::cout << o.out << ": " << summary(*s) << '\n';
  return kOk;
}

int cmd_diversify(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  auto cfg = config(o);
  cfg.count = o.k;
  cfg.on_solution = [&](const LayoutSolution& s) { log(o, "found: " + summary(s)); };
  return write_solutions(o, diversify(p, cfg), "diverse");
}

int cmd_complete(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  auto cfg = config(o);
  cfg.on_solution = [&](const LayoutSolution& s) { log(o, "found: " + summary(s)); };
  return write_solutions(o, complete_partial(p, o.k, cfg), "completed");
}

int cmd_nearby(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  const auto seed = load_solution(o.seed);
  return write_solutions(o, nearby(p, seed, o.radius, o.k, config(o)), "nearby");
}

int cmd_score(const Options& o) {
  const auto p = load(o);
  if (o.solutions.size() != 1) throw CLI::ValidationError("score", "expected exactly one solution file");
  const auto s = load_solution(o.solutions[0]);
  const auto issues = validate_solution(p, s);
  const auto r = score(p, s);
  if (o.as_json) {
    json v = json::array();
    for (const auto& i : issues) v.push_back({{"kind", to_string(i.kind)}, {"field", i.field}, {"message", i.message}});
    std::cout << json{{"valid", issues.empty()},
                      {"violations", v},
                      {"gridLines", r.grid_lines},
                      {"rectCases", r.rect_cases},
                      {"edgeGroups", r.edge_groups},
                      {"gamma", r.gamma},
                      {"pi", r.pi},
                      {"objective", r.objective}}
                     .dump(2)
              << '\n';
  } else {
    for (const auto& i : issues) std::cerr << to_string(i.kind) << " at " << i.field << ": " << i.message << '\n';
    auto row = [](const char* label, auto value) { std::cout << std::left << std::setw(15) << label << value << '\n'; };
    row("grid lines", r.grid_lines);
    row("outline cases", r.rect_cases);
    row("edge groups", r.edge_groups);
    row("gamma", r.gamma);
    row("pi", r.pi);
    row("objective", r.objective);
  }
  return issues.empty() ? kOk : kFailed;
}

int cmd_render(const Options& o) {
  const auto p = load(o);
  if (o.solutions.empty()) throw CLI::ValidationError("render", "expected at least one solution file");
  std::vector<LayoutSolution> all;
  for (const auto& f : o.solutions) all.push_back(load_solution(f));
  SvgStyle style;
  style.overlay = o.overlay;
  write_text(o.out, render_gallery(p, all, style));
  if (o.as_json) std::cout << json{{"file", o.out}, {"panels", all.size()}}.dump(2) << '\n';
  else log(o, "wrote " + o.out);
  return kOk;
}

int cmd_export_lp(const Options& o) {
  const auto p = load(o);
  if (!check_problem(o, p)) return kFailed;
  auto m = build_layout_model(p);
  set_objective(m.instance, ObjectiveMode::Composite, p.weights, m.handles);
  const auto text = export_lp(m.instance);
  if (!o.out.empty()) write_text(o.out, text);
  const json info = {{"variables", m.instance.num_vars()},
                     {"binaries", m.instance.count_vars(VarKind::Binary)},
                     {"constraints", m.instance.num_active_constraints()}};
  if (o.as_json) {
    json doc = info;
    if (o.out.empty()) doc["lp"] = text;
    else doc["file"] = o.out;
    std::cout << doc.dump(2) << '\n';
  } else if (o.out.empty()) {
    std::cout << text;
  } else {
    log(o, "wrote " + o.out + " (" + info.dump() + ")");
  }
  return kOk;
}

int report(const Options& o, const std::string& kind, const std::string& message, int code,
           const json& extra = json::object()) {
  std::cerr << kind << ": " << message << '\n';
  if (o.as_json) {
    json err = {{"kind", kind}, {"message", message}};
    for (const auto& [k, v] : extra.items()) err[k] = v;
    std::cout << json{{"error", err}}.dump(2) << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Grid layout optimizer: alignment-driven packing and diverse layout suggestions."};
  app.require_subcommand(1);
  app.add_option("--time-limit", o.time_limit, "Wall-clock budget in seconds")->check(CLI::PositiveNumber);
  app.add_option("--band", o.band, "Signature tolerance around each diversity target")->check(CLI::NonNegativeNumber);
  app.add_option("--grid-points", o.grid_points, "Targets per signature axis")->check(CLI::Range(2, 50));
  app.add_option("--gutter", o.gutter, "Override the problem's gutter")->check(CLI::NonNegativeNumber);
  app.add_option("--node-limit", o.node_limit, "Branch-and-bound nodes per solve (negative: unlimited)");
  app.add_option("--threads", o.threads, "Parallel solves (0: hardware concurrency)")->check(CLI::NonNegativeNumber);
  app.add_flag("--quiet", o.quiet, "No progress output on stderr");
  app.add_flag("--json", o.as_json, "Machine-readable output on stdout");

  auto problem_arg = [&](CLI::App* sub) {
    sub->add_option("problem", o.problem, "Problem JSON file")->required()->check(CLI::ExistingFile);
    sub->fallthrough();
    return sub;
  };
  std::function<int(const Options&)> action;
  auto on = [&](CLI::App* sub, int (*fn)(const Options&)) { sub->callback([&action, fn] { action = fn; }); };

  auto* validate = problem_arg(app.add_subcommand("validate", "Check a problem file"));
  on(validate, cmd_validate);

  auto* solve = problem_arg(app.add_subcommand("solve", "Best layout for the composite objective"));
  solve->add_option("-o,--out", o.out, "Write the solution here instead of stdout");
  solve->add_option("--optimality", o.band_pct, "Target an optimality band LO-HI (percent)");
  on(solve, cmd_solve);

  auto* div = problem_arg(app.add_subcommand("diversify", "Mutually distinct layouts"));
  div->add_option("-k,--count", o.k, "Number of layouts")->check(CLI::PositiveNumber);
  div->add_option("-o,--out-dir", o.out, "Directory for solution-N.json (default: solutions)");
  on(div, cmd_diversify);

  auto* comp = problem_arg(app.add_subcommand("complete", "Layouts around the locked elements"));
  comp->add_option("-k,--count", o.k, "Number of layouts")->check(CLI::PositiveNumber);
  comp->add_option("-o,--out-dir", o.out, "Directory for solution-N.json (default: solutions)");
  on(comp, cmd_complete);

  auto* near = problem_arg(app.add_subcommand("nearby", "Alternatives close to a seed layout"));
  near->add_option("--seed", o.seed, "Seed solution JSON")->required()->check(CLI::ExistingFile);
  near->add_option("--radius", o.radius, "Largest signature distance")->check(CLI::PositiveNumber);
  near->add_option("-k,--count", o.k, "Number of layouts")->check(CLI::PositiveNumber);
  near->add_option("-o,--out-dir", o.out, "Directory for solution-N.json (default: solutions)");
  on(near, cmd_nearby);

  auto* sc = problem_arg(app.add_subcommand("score", "Metrics of a solution"));
  sc->add_option("solution", o.solutions, "Solution JSON file")->required()->check(CLI::ExistingFile);
  on(sc, cmd_score);

  auto* render = problem_arg(app.add_subcommand("render", "SVG of one or more solutions"));
  render->add_option("solutions", o.solutions, "Solution JSON files")->required()->check(CLI::ExistingFile);
  render->add_option("--svg", o.out, "Output SVG file")->required();
  render->add_flag("--overlay", o.overlay, "Draw grid lines and the outline");
  on(render, cmd_render);

  auto* lp = problem_arg(app.add_subcommand("export-lp", "LP text of the composite model"));
  lp->add_option("-o,--out", o.out, "Write the model here instead of stdout");
  on(lp, cmd_export_lp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(o, "UsageError", e.what(), kUsage);
  }

  try {
    return action(o);
  } catch (const CLI::ValidationError& e) {
    return report(o, "UsageError", e.what(), kUsage);
  } catch (const ParseError& e) {
    return report(o, "ParseError", e.what(), kUsage, {{"path", e.path()}, {"line", e.line()}, {"column", e.column()}});
  } catch (const TimeBudgetExhausted& e) {
    json files = json::array();
    for (const auto& f : write_files(o, e.partial())) files.push_back(f["file"]);
    return report(o, to_string(e.kind()), e.what(), kFailed, {{"partial", files}});
  } catch (const LayoutError& e) {
    return report(o, to_string(e.kind()), e.what(), kFailed);
  } catch (const std::exception& e) {
    return report(o, "Error", e.what(), kFailed);
  }
}
