#pragma once

// Seeded generators for small and fuzzed layout problems.

#include <random>
#include <string>
#include <vector>

#include "gridlayout/core_model.hpp"

namespace gridlayout::testing {

struct FuzzOptions {
  int min_n = 1, max_n = 3;
  double lock_probability = 0.2;
  double pref_probability = 0.2;
  bool gutters = true;
};

inline LayoutProblem random_problem(std::mt19937& rng, const FuzzOptions& opt = {}) {
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto chance = [&](double pr) { return std::bernoulli_distribution(pr)(rng); };
  while (true) {
    LayoutProblem p;
    const int n = uniform(opt.min_n, opt.max_n);
    p.canvas = {static_cast<double>(uniform(8, 24) * 10), static_cast<double>(uniform(8, 24) * 10)};
    p.gutter = opt.gutters && chance(0.3) ? 5 : 0;
    const int W = static_cast<int>(p.canvas.width), H = static_cast<int>(p.canvas.height);
    for (int i = 0; i < n; ++i) {
      Element e;
      e.id = "e" + std::to_string(i);
      e.min_width = uniform(1, W / 20) * 5;
      e.max_width = std::min<double>(W, e.min_width + uniform(0, W / 10) * 5);
      e.min_height = uniform(1, H / 20) * 5;
      e.max_height = std::min<double>(H, e.min_height + uniform(0, H / 10) * 5);
      if (chance(opt.pref_probability)) e.h_pref = chance(0.5) ? HorizontalPref::Left : HorizontalPref::Right;
      if (chance(opt.pref_probability)) e.v_pref = chance(0.5) ? VerticalPref::Top : VerticalPref::Bottom;
      p.elements.push_back(e);
    }
    // At most one lock keeps the problem free of lock conflicts.
    if (chance(opt.lock_probability)) {
      auto& e = p.elements[uniform(0, n - 1)];
      const double w = e.min_width, h = e.min_height;
      e.locked = Rect{static_cast<double>(uniform(0, static_cast<int>((W - w) / 5)) * 5),
                      static_cast<double>(uniform(0, static_cast<int>((H - h) / 5)) * 5), w, h};
      e.h_pref = HorizontalPref::None;
      e.v_pref = VerticalPref::None;
    }
    if (validate_problem(p).empty()) return p;
  }
}

inline std::vector<LayoutProblem> small_corpus(int count, unsigned seed, const FuzzOptions& opt = {}) {
  std::mt19937 rng(seed);
  std::vector<LayoutProblem> out;
  for (int i = 0; i < count; ++i) out.push_back(random_problem(rng, opt));
  return out;
}

// Five-element dashboard template: header, sidebar, main area, two cards.

inline Element sized(std::string id, double w0, double w1, double h0, double h1) {
  Element e;
  e.id = std::move(id);
  e.min_width = w0, e.max_width = w1, e.min_height = h0, e.max_height = h1;
  return e;
}

inline LayoutProblem template_problem() {
  LayoutProblem p;
  p.canvas = {1200, 800};
  p.elements = {sized("header", 600, 1200, 60, 120), sized("sidebar", 150, 300, 300, 700),
                sized("main", 400, 900, 300, 600), sized("card1", 200, 500, 100, 250),
                sized("card2", 200, 500, 100, 250)};
  return p;
}

// Eight-element landing page.
inline LayoutProblem landing_problem() {
  LayoutProblem p;
  p.canvas = {1280, 960};
  p.elements = {sized("nav", 800, 1280, 50, 80),       sized("hero", 600, 1280, 250, 400),
                sized("feature1", 250, 420, 150, 260), sized("feature2", 250, 420, 150, 260),
                sized("feature3", 250, 420, 150, 260), sized("quote", 300, 700, 100, 200),
                sized("signup", 250, 500, 100, 200),   sized("footer", 800, 1280, 50, 90)};
  return p;
}

// Twelve-element analytics dashboard.
inline LayoutProblem dashboard_problem() {
  LayoutProblem p;
  p.canvas = {1440, 960};
  p.elements = {sized("header", 800, 1440, 50, 80),    sized("sidebar", 160, 260, 400, 900),
                sized("search", 200, 400, 40, 60),     sized("kpi1", 180, 300, 90, 140),
                sized("kpi2", 180, 300, 90, 140),      sized("kpi3", 180, 300, 90, 140),
                sized("kpi4", 180, 300, 90, 140),      sized("chart", 500, 900, 250, 400),
                sized("table", 400, 900, 200, 350),    sized("feed", 220, 360, 250, 500),
                sized("map", 300, 500, 200, 320),      sized("footer", 600, 1440, 40, 60)};
  return p;
}

}  // namespace gridlayout::testing
