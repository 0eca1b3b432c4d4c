#include "gridlayout/bnb.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>
#include <queue>
#include <unordered_set>

namespace gridlayout {

const char* to_string(MilpStatus status) {
  switch (status) {
    case MilpStatus::Optimal: return "Optimal";
    case MilpStatus::Feasible: return "Feasible";
    case MilpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

const char* to_string(LimitReason reason) {
  switch (reason) {
    case LimitReason::None: return "none";
    case LimitReason::TimeLimit: return "time-limit";
    case LimitReason::NodeLimit: return "node-limit";
    case LimitReason::Cancelled: return "cancelled";
  }
  return "?";
}

double max_violation(const MilpInstance& inst, std::span<const double> values) {
  double worst = 0;
  for (int j = 0; j < inst.num_vars(); ++j) {
    const auto& v = inst.vars()[j];
    worst = std::max({worst, v.lower - values[j], values[j] - v.upper});
  }
  for (const auto& c : inst.constraints()) {
    if (!c.active) continue;
    const double a = evaluate(c.terms, values);
    if (c.sense != Sense::GreaterEqual) worst = std::max(worst, a - c.rhs);
    if (c.sense != Sense::LessEqual) worst = std::max(worst, c.rhs - a);
  }
  return worst;
}

namespace {

using Clock = std::chrono::steady_clock;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Activity-based bound tightening over the rows of an LP model.
class Propagator {
 public:
  Propagator(const LpModel<double>& m, const std::vector<bool>& is_int, double int_tol)
      : is_int_(is_int), int_tol_(int_tol), rlo_(m.row_lower), rhi_(m.row_upper) {
    const int rows = static_cast<int>(m.A.rows()), cols = static_cast<int>(m.A.cols());
    Eigen::SparseMatrix<double, Eigen::RowMajor> R = m.A;
    R.makeCompressed();
    row_start_.assign(R.outerIndexPtr(), R.outerIndexPtr() + rows + 1);
    row_col_.assign(R.innerIndexPtr(), R.innerIndexPtr() + R.nonZeros());
    row_val_.assign(R.valuePtr(), R.valuePtr() + R.nonZeros());
    col_start_.assign(m.A.outerIndexPtr(), m.A.outerIndexPtr() + cols + 1);
    col_row_.assign(m.A.innerIndexPtr(), m.A.innerIndexPtr() + m.A.nonZeros());
    queued_.assign(rows, 0);
  }

  bool run(std::vector<double>& lo, std::vector<double>& hi, std::span<const int> changed) {
    const int rows = static_cast<int>(queued_.size());
    queue_.clear();
    std::fill(queued_.begin(), queued_.end(), 0);
    if (changed.empty()) {
      for (int r = 0; r < rows; ++r) push(r);
    } else {
      for (int j : changed) push_col(j);
    }
    long budget = 20L * rows + 1000;
    std::size_t head = 0;
    while (head < queue_.size()) {
      if (--budget < 0) break;
      const int r = queue_[head++];
      queued_[r] = 0;
      if (!row(r, lo, hi)) return false;
    }
    return true;
  }

 private:
  void push(int r) {
    if (!queued_[r]) queued_[r] = 1, queue_.push_back(r);
  }
  void push_col(int j) {
    for (int k = col_start_[j]; k < col_start_[j + 1]; ++k) push(col_row_[k]);
  }

  bool tighten(int j, double cand, bool upper, std::vector<double>& lo, std::vector<double>& hi) {
    if (!std::isfinite(cand)) return true;
    if (upper) {
      double v = is_int_[j] ? std::floor(cand + int_tol_) : cand + 1e-9 * (1 + std::abs(cand));
      const double thr = is_int_[j] ? 0.5 : 1e-7 * (1 + std::abs(hi[j]));
      if (v >= hi[j] - thr) return true;
      if (v < lo[j] - 1e-6 * (1 + std::abs(lo[j]))) return false;
      hi[j] = std::max(v, lo[j]);
    } else {
      double v = is_int_[j] ? std::ceil(cand - int_tol_) : cand - 1e-9 * (1 + std::abs(cand));
      const double thr = is_int_[j] ? 0.5 : 1e-7 * (1 + std::abs(lo[j]));
      if (v <= lo[j] + thr) return true;
      if (v > hi[j] + 1e-6 * (1 + std::abs(hi[j]))) return false;
      lo[j] = std::min(v, hi[j]);
    }
    push_col(j);
    return true;
  }

  bool row(int r, std::vector<double>& lo, std::vector<double>& hi) {
    const int b = row_start_[r], e = row_start_[r + 1];
    double minf = 0, maxf = 0;
    int mininf = 0, maxinf = 0;
    cmin_.resize(e - b);
    cmax_.resize(e - b);
    for (int k = b; k < e; ++k) {
      const double a = row_val_[k];
      const int j = row_col_[k];
      const double l = a > 0 ? lo[j] : hi[j], u = a > 0 ? hi[j] : lo[j];
      cmin_[k - b] = std::isfinite(l) ? a * l : -kInf;
      cmax_[k - b] = std::isfinite(u) ? a * u : kInf;
      if (std::isfinite(l)) minf += a * l; else ++mininf;
      if (std::isfinite(u)) maxf += a * u; else ++maxinf;
    }
    const double up = rhi_[r], dn = rlo_[r];
    if (std::isfinite(up) && mininf == 0 && minf > up + 1e-6 * (1 + std::abs(up))) return false;
    if (std::isfinite(dn) && maxinf == 0 && maxf < dn - 1e-6 * (1 + std::abs(dn))) return false;
    for (int k = b; k < e; ++k) {
      const double a = row_val_[k];
      const int j = row_col_[k];
      if (std::isfinite(up)) {
        const bool cinf = !std::isfinite(cmin_[k - b]);
        if (mininf == 0 || (mininf == 1 && cinf)) {
          const double rest = cinf ? minf : minf - cmin_[k - b];
          if (!tighten(j, (up - rest) / a, a > 0, lo, hi)) return false;
        }
      }
      if (std::isfinite(dn)) {
        const bool cinf = !std::isfinite(cmax_[k - b]);
        if (maxinf == 0 || (maxinf == 1 && cinf)) {
          const double rest = cinf ? maxf : maxf - cmax_[k - b];
          if (!tighten(j, (dn - rest) / a, a < 0, lo, hi)) return false;
        }
      }
    }
    return true;
  }

  const std::vector<bool>& is_int_;
  double int_tol_;
  Eigen::VectorXd rlo_, rhi_;
  std::vector<int> row_start_, row_col_, col_start_, col_row_;
  std::vector<double> row_val_, cmin_, cmax_;
  std::vector<int> queue_;
  std::vector<char> queued_;
};

struct Branch {
  std::shared_ptr<const Branch> parent;
  int var;
  double value;
};

struct Node {
  double bound;
  int depth;
  long seq;
  long parent;
  std::shared_ptr<const Branch> branch;
  std::shared_ptr<const Basis> basis;
};

// Lower priority first for std::priority_queue.
struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    const double ka = std::round(a.bound * 1e9), kb = std::round(b.bound * 1e9);
    if (ka != kb) return ka > kb;
    if (a.depth != b.depth) return a.depth < b.depth;
    return a.seq > b.seq;
  }
};

class Search {
 public:
  Search(const MilpInstance& inst, const SolveConfig& cfg)
      : inst_(inst), cfg_(cfg), repair_(cfg.repair), model_(to_lp_model(inst)) {
    start_ = Clock::now();
    if (cfg.time_limit) deadline_ = start_ + std::chrono::duration_cast<Clock::duration>(*cfg.time_limit);
    sign_ = inst.objective().sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
    n_ = static_cast<int>(model_.A.cols());
    is_int_.assign(n_, false);
    for (int j = 0; j < n_; ++j) {
      if (inst.vars()[j].kind == VarKind::Binary) {
        is_int_[j] = true;
        ints_.push_back(j);
      }
    }
    integral_ = std::round(model_.offset) == model_.offset;
    for (int j = 0; j < n_; ++j) {
      const double c = model_.cost[j];
      if (c == 0) continue;
      if (!is_int_[j]) has_continuous_cost_ = true;
      if (!is_int_[j] || std::round(c) != c) integral_ = false;
    }
    build_cleanup_model();
  }

  MilpResult run();

 private:
  bool stop_requested() const { return cfg_.should_stop && cfg_.should_stop(); }

  double cutoff() const {
    if (!std::isfinite(inc_)) return kInf;
    if (integral_) return inc_ - 1 + 1e-6;
    return inc_ - std::max(cfg_.gap_tolerance * std::max(1.0, std::abs(inc_)), 1e-9);
  }

  void build_cleanup_model();
  void try_incumbent(const Eigen::VectorXd& x, const std::vector<double>& lo, const std::vector<double>& hi);
  void heuristic(const Eigen::VectorXd& x, const std::vector<double>& lo, const std::vector<double>& hi);

  const MilpInstance& inst_;
  const SolveConfig& cfg_;
  std::function<bool(std::vector<double>&)> repair_;  // own copy: stateful repairs start fresh
  LpModel<double> model_;
  LpModel<double> cleanup_;
  bool cleanup_has_row_ = false;
  Clock::time_point start_;
  std::optional<Clock::time_point> deadline_;
  double sign_ = 1;
  int n_ = 0;
  std::vector<bool> is_int_;
  std::vector<int> ints_;
  bool integral_ = false;
  bool has_continuous_cost_ = false;
  double inc_ = kInf;
  std::vector<double> inc_x_;
  std::unique_ptr<Propagator> prop_;
  std::unique_ptr<BoundedDualSimplex<double>> heur_;
  std::unique_ptr<BoundedDualSimplex<double>> cleanup_lp_;
  std::unordered_set<std::size_t> repaired_;
  long lp_iterations_ = 0;
};

// The cleanup LP re-solves each integer-feasible point with the integers
// fixed exactly. With a polish objective it minimizes that instead, holding
// the primary objective's continuous part at its value through an extra row.
void Search::build_cleanup_model() {
  cleanup_ = model_;
  if (cfg_.polish.empty()) return;
  cleanup_.cost = Eigen::VectorXd::Zero(n_);
  for (const auto& t : cfg_.polish) cleanup_.cost[t.var] += t.coef;
  cleanup_.offset = 0;
  if (!has_continuous_cost_) return;
  const int m = static_cast<int>(model_.A.rows());
  std::vector<Eigen::Triplet<double>> trips;
  for (int j = 0; j < n_; ++j) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(model_.A, j); it; ++it) trips.emplace_back(it.row(), j, it.value());
    if (model_.cost[j] != 0) trips.emplace_back(m, j, model_.cost[j]);
  }
  cleanup_.A.resize(m + 1, n_);
  cleanup_.A.setFromTriplets(trips.begin(), trips.end());
  cleanup_.A.makeCompressed();
  cleanup_.row_lower.conservativeResize(m + 1);
  cleanup_.row_upper.conservativeResize(m + 1);
  cleanup_.row_lower[m] = -kInf;
  cleanup_.row_upper[m] = kInf;
  cleanup_has_row_ = true;
}

void Search::try_incumbent(const Eigen::VectorXd& x, const std::vector<double>& lo, const std::vector<double>& hi) {
  Eigen::VectorXd clo = Eigen::Map<const Eigen::VectorXd>(lo.data(), n_);
  Eigen::VectorXd chi = Eigen::Map<const Eigen::VectorXd>(hi.data(), n_);
  for (int j : ints_) clo[j] = chi[j] = std::round(x[j]);
  // Quick reject before paying for the cleanup solve.
  const double rough = model_.cost.dot(x) + model_.offset;
  if ((!has_continuous_cost_ || !cfg_.polish.empty()) && rough >= cutoff() + 1e-6) return;

  if (!cleanup_lp_) cleanup_lp_ = std::make_unique<BoundedDualSimplex<double>>(cleanup_, cfg_.lp);
  auto& s = *cleanup_lp_;
  if (cleanup_has_row_) {
    const double primary = model_.cost.dot(x);
    s.set_row_bounds(static_cast<int>(cleanup_.A.rows()) - 1, -kInf, primary + 1e-7 * (1 + std::abs(primary)));
  }
  s.set_column_bounds(clo, chi);
  const auto st = s.solve(kInf, deadline_, cfg_.should_stop);
  lp_iterations_ += s.iterations();
  if (st != LpStatus::Optimal) return;
  Eigen::VectorXd y = s.primal();
  for (int j : ints_) y[j] = clo[j];
  const double obj = model_.cost.dot(y) + model_.offset;
  const double z = integral_ ? std::round(obj) : obj;
  if (!(z < inc_ - 1e-9)) return;
  inc_ = z;
  inc_x_.assign(y.data(), y.data() + n_);
  if (cfg_.incumbent_callback) cfg_.incumbent_callback(Incumbent{inc_x_, sign_ * inc_});
}

// Fix-and-propagate rounding: integers are fixed in order of how decided
// the LP already is, flipping a value when propagation rejects it.
void Search::heuristic(const Eigen::VectorXd& x, const std::vector<double>& lo, const std::vector<double>& hi) {
  std::vector<int> order;
  for (int j : ints_)
    if (lo[j] != hi[j]) order.push_back(j);
  auto dist = [&](int j) { return std::abs(x[j] - std::round(x[j])); };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(a) < dist(b); });
  std::vector<double> l = lo, h = hi, sl, sh;
  for (int j : order) {
    if (l[j] == h[j]) continue;
    const double v = std::clamp(std::round(x[j]), l[j], h[j]);
    sl = l, sh = h;
    l[j] = h[j] = v;
    const int ch[] = {j};
    if (prop_->run(l, h, ch)) continue;
    l = std::move(sl), h = std::move(sh);
    l[j] = h[j] = 1 - v;
    if (!prop_->run(l, h, ch)) return;
  }
  heur_->set_column_bounds(Eigen::Map<const Eigen::VectorXd>(l.data(), n_), Eigen::Map<const Eigen::VectorXd>(h.data(), n_));
  const auto st = heur_->solve(cutoff(), deadline_, cfg_.should_stop);
  lp_iterations_ += heur_->iterations();
  if (st == LpStatus::Optimal) try_incumbent(heur_->primal(), l, h);
}

MilpResult Search::run() {
  MilpResult res;
  auto finish = [&](MilpResult& r) -> MilpResult& {
    r.elapsed = Clock::now() - start_;
    r.lp_iterations = lp_iterations_;
    if (std::isfinite(inc_)) {
      r.incumbent = Incumbent{inc_x_, sign_ * inc_};
      r.gap = std::abs(inc_ - r.bound) / std::max(1.0, std::abs(inc_));
    } else {
      r.gap = kInf;
    }
    r.bound *= sign_;
    return r;
  };

  std::vector<double> root_lo(model_.col_lower.data(), model_.col_lower.data() + n_);
  std::vector<double> root_hi(model_.col_upper.data(), model_.col_upper.data() + n_);
  for (int j : ints_) {
    root_lo[j] = std::ceil(root_lo[j] - cfg_.integrality_tolerance);
    root_hi[j] = std::floor(root_hi[j] + cfg_.integrality_tolerance);
  }
  prop_ = std::make_unique<Propagator>(model_, is_int_, cfg_.integrality_tolerance);
  if (!prop_->run(root_lo, root_hi, {})) {
    res.status = MilpStatus::Infeasible;
    res.bound = kInf;
    return finish(res);
  }
  BoundedDualSimplex<double> lp(model_, cfg_.lp);
  heur_ = std::make_unique<BoundedDualSimplex<double>>(model_, cfg_.lp);

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  std::optional<Node> dive;  // plunging: the preferred child is processed next
  long seq = 0, last = -1;
  open.push(Node{-kInf, 0, seq++, -1, nullptr, nullptr});
  double proven = -kInf;
  double pruned_min = kInf;
  LimitReason limit = LimitReason::None;
  double last_inc = inc_;
  long last_improved = 0;
  std::vector<double> lo, hi;
  std::vector<int> changed;
  const double itol = cfg_.integrality_tolerance;
  auto record = [&](double current) {
    double b = std::min(current, inc_);
    if (!open.empty()) b = std::min(b, open.top().bound);
    if (dive) b = std::min(b, dive->bound);
    proven = std::max(proven, b);
    res.bound_history.push_back(sign_ * proven);
  };

  while (dive || !open.empty()) {
    if (deadline_ && Clock::now() > *deadline_) {
      limit = LimitReason::TimeLimit;
      break;
    }
    if (stop_requested()) {
      limit = LimitReason::Cancelled;
      break;
    }
    if (inc_ < last_inc) last_inc = inc_, last_improved = res.nodes;
    if ((cfg_.node_limit >= 0 && res.nodes >= cfg_.node_limit) ||
        (cfg_.stall_node_limit >= 0 && inc_ < kInf && res.nodes - last_improved >= cfg_.stall_node_limit)) {
      limit = LimitReason::NodeLimit;
      break;
    }
    Node node;
    if (dive) {
      node = std::move(*dive);
      dive.reset();
      if (node.bound >= cutoff()) {
        pruned_min = std::min(pruned_min, node.bound);
        continue;
      }
    } else {
      node = open.top();
      if (node.bound >= cutoff()) {
        pruned_min = std::min(pruned_min, node.bound);
        while (!open.empty()) open.pop();
        break;
      }
      open.pop();
    }
    ++res.nodes;

    lo = root_lo, hi = root_hi;
    changed.clear();
    for (const Branch* b = node.branch.get(); b; b = b->parent.get()) {
      lo[b->var] = hi[b->var] = b->value;
      changed.push_back(b->var);
    }
    if (!changed.empty() && !prop_->run(lo, hi, changed)) {
      record(kInf);
      continue;
    }
    lp.set_column_bounds(Eigen::Map<const Eigen::VectorXd>(lo.data(), n_), Eigen::Map<const Eigen::VectorXd>(hi.data(), n_));
    if (node.parent != last && node.basis) lp.set_basis(*node.basis);
    last = node.seq;
    const auto st = lp.solve(cutoff(), deadline_, cfg_.should_stop);
    lp_iterations_ += lp.iterations();
    if (st == LpStatus::TimeLimit) {
      open.push(node);
      limit = stop_requested() ? LimitReason::Cancelled : LimitReason::TimeLimit;
      break;
    }
    if (st == LpStatus::Unbounded) throw LayoutError(ErrorKind::InvalidProblem, "LP relaxation is unbounded");
    if (st == LpStatus::IterationLimit) throw LayoutError(ErrorKind::NumericalBreakdown, "LP iteration limit reached");
    if (st == LpStatus::Infeasible) {
      record(kInf);
      continue;
    }
    const double z = st == LpStatus::Cutoff ? cutoff() : std::max(lp.objective(), node.bound);
    if (st == LpStatus::Cutoff || z >= cutoff()) {
      pruned_min = std::min(pruned_min, z);
      record(z);
      continue;
    }
    const Eigen::VectorXd x = lp.primal();
    int var = -1;
    double best = itol;
    for (int j : ints_) {
      const double d = std::abs(x[j] - std::round(x[j]));
      if (d > best + 1e-12) best = d, var = j;
    }
    if (var < 0) {
      try_incumbent(x, lo, hi);
      if (z >= cutoff()) pruned_min = std::min(pruned_min, z);
      record(z);
      continue;
    }
    if (repair_) {
      std::vector<double> y(x.data(), x.data() + n_);
      if (repair_(y)) {
        std::size_t h = 0;
        for (int j : ints_) h = h * 1000003u + static_cast<std::size_t>(std::llround(y[j]) + 7 * j);
        if (repaired_.insert(h).second) try_incumbent(Eigen::Map<const Eigen::VectorXd>(y.data(), n_), root_lo, root_hi);
      }
    }
    const int every = std::max(1, cfg_.heuristic_interval);
    if (res.nodes == 1 || res.nodes % every == 0) heuristic(x, lo, hi);
    if (z >= cutoff()) {
      pruned_min = std::min(pruned_min, z);
      record(z);
      continue;
    }
    std::shared_ptr<const Basis> basis;
    if (open.size() < 4000) basis = std::make_shared<Basis>(lp.basis());
    const double first = x[var] >= 0.5 ? 1.0 : 0.0;
    dive = Node{z, node.depth + 1, seq++, node.seq, std::make_shared<const Branch>(Branch{node.branch, var, first}), basis};
    open.push(Node{z, node.depth + 1, seq++, node.seq, std::make_shared<const Branch>(Branch{node.branch, var, 1.0 - first}),
                   basis});
    record(z);
  }
  if (dive) open.push(std::move(*dive));

  if (limit == LimitReason::None) {
    if (std::isfinite(inc_)) {
      res.status = MilpStatus::Optimal;
      // Every discarded node had a bound within the pruning tolerance.
      res.bound = integral_ ? inc_ : std::max(std::min(inc_, pruned_min), proven);
    } else {
      res.status = MilpStatus::Infeasible;
      res.bound = kInf;
    }
  } else {
    res.status = MilpStatus::Feasible;
    res.limit = limit;
    double b = std::isfinite(inc_) ? inc_ : kInf;
    b = std::min(b, pruned_min);
    if (!open.empty()) b = std::min(b, open.top().bound);
    if (integral_ && std::isfinite(b)) b = std::ceil(b - 1e-6);
    res.bound = std::max(std::min(b, std::isfinite(inc_) ? inc_ : kInf), proven);
  }
  if (res.bound_history.empty() || res.bound_history.back() != sign_ * res.bound) res.bound_history.push_back(sign_ * res.bound);
  return finish(res);
}

}  // namespace

MilpResult solve(const MilpInstance& inst, const SolveConfig& config) {
  Search search(inst, config);
  auto r = search.run();
  return r;
}

}  // namespace gridlayout
