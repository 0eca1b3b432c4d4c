#pragma once

#include <string>
#include <vector>

#include "gridlayout/bnb.hpp"
#include "gridlayout/core_model.hpp"
#include "gridlayout/milp.hpp"

namespace gridlayout::testing {

inline Element flex(std::string id, double min_w, double max_w, double min_h, double max_h) {
  Element e;
  e.id = std::move(id);
  e.min_width = min_w;
  e.max_width = max_w;
  e.min_height = min_h;
  e.max_height = max_h;
  return e;
}

inline Element fixed(std::string id, double w, double h) { return flex(std::move(id), w, w, h, h); }

inline LayoutProblem make_problem(double w, double h, std::vector<Element> elements) {
  LayoutProblem p;
  p.canvas = {w, h};
  p.elements = std::move(elements);
  return p;
}

struct Solved {
  MilpResult result;
  LayoutModel model;
  LayoutSolution solution;
};

// Builds the full model, optimizes the given mode and decodes the incumbent.
inline Solved solve_mode(const LayoutProblem& p, ObjectiveMode mode, ModelOptions options = {},
                         SolveConfig cfg = {}) {
  Solved s;
  s.model = build_layout_model(p, options);
  set_objective(s.model.instance, mode, p.weights, s.model.handles);
  if (cfg.polish.empty()) cfg.polish = compaction_terms(s.model.instance, s.model.n);
  const auto& inst = s.model.instance;
  if (!cfg.repair) cfg.repair = LayoutRepair(inst, p);
  s.result = solve(s.model.instance, cfg);
  if (s.result.incumbent)
    s.solution.placements = decode_placements(s.model.instance, p, s.result.incumbent->values);
  return s;
}

}  // namespace gridlayout::testing
