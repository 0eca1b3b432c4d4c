#include "gridlayout/lp_simplex.hpp"

#include <algorithm>
#include <cmath>

namespace gridlayout {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "Optimal";
    case LpStatus::Infeasible: return "Infeasible";
    case LpStatus::Unbounded: return "Unbounded";
    case LpStatus::Cutoff: return "Cutoff";
    case LpStatus::IterationLimit: return "IterationLimit";
    case LpStatus::TimeLimit: return "TimeLimit";
  }
  return "?";
}

LpModel<double> to_lp_model(const MilpInstance& inst, std::vector<int>* row_of) {
  LpModel<double> lp;
  const int n = inst.num_vars();
  const auto& rows = inst.constraints();
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<double> rlo, rhi;
  if (row_of) row_of->assign(rows.size(), -1);
  constexpr double inf = std::numeric_limits<double>::infinity();
  int m = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& c = rows[i];
    if (!c.active) continue;
    for (const auto& t : c.terms) trips.emplace_back(m, t.var, t.coef);
    rlo.push_back(c.sense == Sense::LessEqual ? -inf : c.rhs);
    rhi.push_back(c.sense == Sense::GreaterEqual ? inf : c.rhs);
    if (row_of) (*row_of)[i] = m;
    ++m;
  }
  lp.A.resize(m, n);
  lp.A.setFromTriplets(trips.begin(), trips.end());
  lp.A.makeCompressed();
  lp.row_lower = Eigen::Map<Eigen::VectorXd>(rlo.data(), m);
  lp.row_upper = Eigen::Map<Eigen::VectorXd>(rhi.data(), m);
  lp.col_lower.resize(n);
  lp.col_upper.resize(n);
  for (int j = 0; j < n; ++j) {
    lp.col_lower[j] = inst.vars()[j].lower;
    lp.col_upper[j] = inst.vars()[j].upper;
  }
  const double sign = inst.objective().sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
  lp.cost = Eigen::VectorXd::Zero(n);
  for (const auto& t : inst.objective().terms) lp.cost[t.var] += sign * t.coef;
  lp.offset = sign * inst.objective().constant;
  return lp;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
BoundedDualSimplex<Scalar>::BoundedDualSimplex(const LpModel<Scalar>& model, LpOptions options)
    : opt_(options), A_(model.A), offset_(model.offset) {
  m_ = static_cast<int>(A_.rows());
  n_ = static_cast<int>(A_.cols());
  A_.makeCompressed();
  const int N = n_ + m_;
  col_scale_ = Vector::Ones(n_);
  row_scale_ = Vector::Ones(m_);
  if (opt_.scaling && A_.nonZeros() > 0) {
    const Scalar inf = std::numeric_limits<Scalar>::infinity();
    for (int pass = 0; pass < 6; ++pass) {
      Vector rmin = Vector::Constant(m_, inf), rmax = Vector::Zero(m_);
      for (int j = 0; j < n_; ++j)
        for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) {
          const Scalar a = std::abs(it.value()) * col_scale_[j];
          if (a == Scalar(0)) continue;
          rmin[it.row()] = std::min(rmin[it.row()], a);
          rmax[it.row()] = std::max(rmax[it.row()], a);
        }
      for (int r = 0; r < m_; ++r)
        if (rmax[r] > 0) row_scale_[r] = 1 / std::sqrt(rmin[r] * rmax[r]);
      for (int j = 0; j < n_; ++j) {
        Scalar cmin = inf, cmax = 0;
        for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) {
          const Scalar a = std::abs(it.value()) * row_scale_[it.row()];
          if (a == Scalar(0)) continue;
          cmin = std::min(cmin, a), cmax = std::max(cmax, a);
        }
        if (cmax > 0) col_scale_[j] = 1 / std::sqrt(cmin * cmax);
      }
    }
    auto pow2 = [](Scalar v) { return std::exp2(std::round(std::log2(v))); };
    for (int j = 0; j < n_; ++j) col_scale_[j] = pow2(col_scale_[j]);
    for (int r = 0; r < m_; ++r) row_scale_[r] = pow2(row_scale_[r]);
    for (int j = 0; j < n_; ++j)
      for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it)
        it.valueRef() *= row_scale_[it.row()] * col_scale_[j];
  }
  cost_ = Vector::Zero(N);
  cost_.head(n_) = model.cost.cwiseProduct(col_scale_);
  true_cost_ = cost_;
  lo_.resize(N);
  hi_.resize(N);
  art_lo_.assign(N, false);
  art_hi_.assign(N, false);
  const Scalar big = static_cast<Scalar>(opt_.artificial_bound);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = model.col_lower[j] / col_scale_[j];
    hi_[j] = model.col_upper[j] / col_scale_[j];
    if (!std::isfinite(static_cast<double>(lo_[j]))) lo_[j] = -big, art_lo_[j] = true;
    if (!std::isfinite(static_cast<double>(hi_[j]))) hi_[j] = big, art_hi_[j] = true;
  }
  // Infinite row bounds become the implied activity bounds.
  Vector amin = Vector::Zero(m_), amax = Vector::Zero(m_);
  std::vector<bool> amin_art(m_, false), amax_art(m_, false);
  for (int j = 0; j < n_; ++j) {
    for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) {
      const int r = static_cast<int>(it.row());
      const Scalar a = it.value();
      if (a > 0) {
        amin[r] += a * lo_[j], amax[r] += a * hi_[j];
        if (art_lo_[j]) amin_art[r] = true;
        if (art_hi_[j]) amax_art[r] = true;
      } else {
        amin[r] += a * hi_[j], amax[r] += a * lo_[j];
        if (art_hi_[j]) amin_art[r] = true;
        if (art_lo_[j]) amax_art[r] = true;
      }
    }
  }
  for (int r = 0; r < m_; ++r) {
    const int j = n_ + r;
    lo_[j] = model.row_lower[r] * row_scale_[r];
    hi_[j] = model.row_upper[r] * row_scale_[r];
    if (!std::isfinite(static_cast<double>(lo_[j]))) {
      lo_[j] = std::min(amin[r], hi_[j]) - 1;
      art_lo_[j] = amin_art[r];
    }
    if (!std::isfinite(static_cast<double>(hi_[j]))) {
      hi_[j] = std::max(amax[r], lo_[j]) + 1;
      art_hi_[j] = amax_art[r];
    }
  }
  x_ = Vector::Zero(N);
  d_ = Vector::Zero(N);
  slack_basis();
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::slack_basis() {
  const int N = n_ + m_;
  basis_.status.assign(N, VarStatus::AtLower);
  basis_.basic.resize(m_);
  pos_of_.assign(N, -1);
  for (int j = 0; j < n_; ++j) basis_.status[j] = cost_[j] >= 0 ? VarStatus::AtLower : VarStatus::AtUpper;
  for (int r = 0; r < m_; ++r) {
    basis_.basic[r] = n_ + r;
    basis_.status[n_ + r] = VarStatus::Basic;
    pos_of_[n_ + r] = r;
  }
  edge_weights_ = Vector::Ones(m_);  // exact for B = -I
  factor_ok_ = false;
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::set_column_bounds(const Vector& lower, const Vector& upper) {
  const Scalar big = static_cast<Scalar>(opt_.artificial_bound);
  for (int j = 0; j < n_; ++j) {
    lo_[j] = std::isfinite(static_cast<double>(lower[j])) ? lower[j] / col_scale_[j] : -big;
    hi_[j] = std::isfinite(static_cast<double>(upper[j])) ? upper[j] / col_scale_[j] : big;
  }
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::set_row_bounds(int row, Scalar lower, Scalar upper) {
  const int j = n_ + row;
  lower *= row_scale_[row];
  upper *= row_scale_[row];
  if (std::isfinite(static_cast<double>(lower))) lo_[j] = lower, art_lo_[j] = false;
  if (std::isfinite(static_cast<double>(upper))) hi_[j] = upper, art_hi_[j] = false;
  if (lo_[j] > hi_[j]) {
    if (std::isfinite(static_cast<double>(upper))) lo_[j] = hi_[j] - 1;
    else hi_[j] = lo_[j] + 1;
  }
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::set_basis(const Basis& basis) {
  if (basis.status.size() != static_cast<std::size_t>(n_ + m_) || basis.basic.size() != static_cast<std::size_t>(m_)) {
    slack_basis();
    return;
  }
  basis_ = basis;
  pos_of_.assign(n_ + m_, -1);
  for (int r = 0; r < m_; ++r) pos_of_[basis_.basic[r]] = r;
  edge_weights_ = Vector::Ones(m_);
  factor_ok_ = false;
}

template <typename Scalar>
bool BoundedDualSimplex<Scalar>::refactor() {
  ++refactorizations_;
  etas_.clear();
  if (m_ == 0) {
    factor_ok_ = true;
    return true;
  }
  std::vector<Eigen::Triplet<Scalar>> trips;
  trips.reserve(static_cast<std::size_t>(m_) * 3);
  for (int r = 0; r < m_; ++r) {
    const int j = basis_.basic[r];
    if (j < n_) {
      for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) trips.emplace_back(it.row(), r, it.value());
    } else {
      trips.emplace_back(j - n_, r, Scalar(-1));
    }
  }
  SparseMatrix B(m_, m_);
  B.setFromTriplets(trips.begin(), trips.end());
  B.makeCompressed();
  lu_.analyzePattern(B);
  lu_.factorize(B);
  factor_ok_ = lu_.info() == Eigen::Success;
  if (factor_ok_) {
    // SparseLU accepts tiny pivots; reject numerically singular bases.
    const Scalar logdet = lu_.logAbsDeterminant();
    factor_ok_ = std::isfinite(static_cast<double>(logdet));
  }
  return factor_ok_;
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::ftran(Vector& v) const {
  if (m_ == 0) return;
  v = lu_.solve(v).eval();
  for (const auto& eta : etas_) {
    const Scalar xr = v[eta.pos] / eta.pivot;
    v[eta.pos] = xr;
    if (xr == Scalar(0)) continue;
    for (const auto& [i, a] : eta.entries) v[i] -= a * xr;
  }
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::btran(Vector& v) const {
  if (m_ == 0) return;
  for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
    Scalar s = v[it->pos];
    for (const auto& [i, a] : it->entries) s -= a * v[i];
    v[it->pos] = s / it->pivot;
  }
  v = lu_.transpose().solve(v).eval();
}

template <typename Scalar>
Scalar BoundedDualSimplex<Scalar>::column_dot(int j, const Vector& v) const {
  if (j >= n_) return -v[j - n_];
  Scalar s = 0;
  for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) s += it.value() * v[it.row()];
  return s;
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::add_column(int j, Scalar scale, Vector& v) const {
  if (j >= n_) {
    v[j - n_] -= scale;
    return;
  }
  for (typename SparseMatrix::InnerIterator it(A_, j); it; ++it) v[it.row()] += scale * it.value();
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::compute_primal() {
  Vector rhs = Vector::Zero(m_);
  const int N = n_ + m_;
  for (int j = 0; j < N; ++j) {
    const auto s = basis_.status[j];
    if (s == VarStatus::Basic) continue;
    x_[j] = s == VarStatus::AtUpper ? hi_[j] : lo_[j];
    if (x_[j] != Scalar(0)) add_column(j, -x_[j], rhs);
  }
  ftran(rhs);
  for (int r = 0; r < m_; ++r) x_[basis_.basic[r]] = rhs[r];
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::compute_duals() {
  Vector y(m_);
  for (int r = 0; r < m_; ++r) y[r] = cost_[basis_.basic[r]];
  btran(y);
  const int N = n_ + m_;
  for (int j = 0; j < N; ++j) {
    d_[j] = basis_.status[j] == VarStatus::Basic ? Scalar(0) : cost_[j] - column_dot(j, y);
  }
}

template <typename Scalar>
void BoundedDualSimplex<Scalar>::settle_nonbasic() {
  const int N = n_ + m_;
  const Scalar tol = static_cast<Scalar>(opt_.dual_tolerance);
  for (int j = 0; j < N; ++j) {
    auto& s = basis_.status[j];
    if (s == VarStatus::Basic) continue;
    if (lo_[j] == hi_[j]) {
      s = VarStatus::AtLower;
    } else if (s == VarStatus::AtUpper && d_[j] > tol) {
      s = VarStatus::AtLower;
    } else if (s == VarStatus::AtLower && d_[j] < -tol) {
      s = VarStatus::AtUpper;
    }
  }
}

template <typename Scalar>
typename BoundedDualSimplex<Scalar>::Vector BoundedDualSimplex<Scalar>::row_duals() const {
  Vector y(m_);
  for (int r = 0; r < m_; ++r) y[r] = cost_[basis_.basic[r]];
  btran(y);
  return y.cwiseProduct(row_scale_);
}

template <typename Scalar>
Scalar BoundedDualSimplex<Scalar>::objective() const {
  return true_cost_.head(n_).dot(x_.head(n_)) + offset_;
}

template <typename Scalar>
int BoundedDualSimplex<Scalar>::choose_leaving() const {
  const Scalar tol = static_cast<Scalar>(opt_.primal_tolerance);
  int best = -1;
  Scalar best_val = 0;
  int best_col = std::numeric_limits<int>::max();
  const bool steepest = opt_.pricing == Pricing::SteepestEdge;
  for (int r = 0; r < m_; ++r) {
    const int j = basis_.basic[r];
    Scalar inf = 0;
    if (x_[j] < lo_[j] - tol) inf = lo_[j] - x_[j];
    else if (x_[j] > hi_[j] + tol) inf = x_[j] - hi_[j];
    if (inf <= 0) continue;
    if (bland_) {
      if (j < best_col) best_col = j, best = r;
    } else if (const Scalar score = steepest ? inf * inf / edge_weights_[r] : inf; score > best_val) {
      best_val = score, best = r;
    }
  }
  return best;
}

template <typename Scalar>
bool BoundedDualSimplex<Scalar>::at_artificial(int j) const {
  const auto s = basis_.status[j];
  return (s == VarStatus::AtLower && art_lo_[j]) || (s == VarStatus::AtUpper && art_hi_[j]);
}

template <typename Scalar>
Scalar BoundedDualSimplex<Scalar>::working_objective() const {
  return cost_.head(n_).dot(x_.head(n_)) + offset_;
}

// Shifts each structural cost by a small hashed amount, signed to widen the
// current reduced-cost margin. Columns with artificial or equal bounds stay.
template <typename Scalar>
void BoundedDualSimplex<Scalar>::perturb_costs() {
  cost_ = true_cost_;
  perturbation_slack_ = 0;
  perturbed_ = false;
  if (opt_.cost_perturbation <= 0) return;
  for (int j = 0; j < n_; ++j) {
    if (art_lo_[j] || art_hi_[j] || lo_[j] == hi_[j]) continue;
    std::uint64_t h = static_cast<std::uint64_t>(j + 1) * 0x9E3779B97F4A7C15ull;
    h ^= h >> 31;
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 29;
    const Scalar u = Scalar(0.5) + Scalar(0.5) * static_cast<Scalar>(h >> 11) / static_cast<Scalar>(1ull << 53);
    Scalar xi = static_cast<Scalar>(opt_.cost_perturbation) * (Scalar(1) + std::abs(true_cost_[j])) * u;
    if (basis_.status[j] == VarStatus::AtUpper) xi = -xi;
    cost_[j] += xi;
    perturbation_slack_ += std::abs(xi) * std::max(std::abs(lo_[j]), std::abs(hi_[j]));
    perturbed_ = true;
  }
}

template <typename Scalar>
LpStatus BoundedDualSimplex<Scalar>::solve(Scalar cutoff, std::optional<Clock::time_point> deadline,
                                           const std::function<bool()>& should_stop) {
  iterations_ = 0;
  bland_ = false;
  recoveries_ = 0;
  pivots_.clear();
  const int N = n_ + m_;
  for (int j = 0; j < n_; ++j)
    if (lo_[j] > hi_[j]) return LpStatus::Infeasible;

  auto recover = [&]() {
    if (++recoveries_ > 3) throw LayoutError(ErrorKind::NumericalBreakdown, "simplex basis singular after recovery");
    slack_basis();
    refactor();
  };
  auto fresh = [&]() {
    if (!refactor()) recover();
    compute_duals();
    settle_nonbasic();
    compute_primal();
  };
  perturb_costs();
  if (!factor_ok_) {
    fresh();
  } else {
    compute_duals();
    settle_nonbasic();
    compute_primal();
  }

  const Scalar ptol = static_cast<Scalar>(opt_.pivot_tolerance);
  const Scalar dtol = static_cast<Scalar>(opt_.dual_tolerance);
  const Scalar cut_tol = Scalar(1e-9) * (Scalar(1) + (std::isfinite(static_cast<double>(cutoff)) ? std::abs(cutoff) : Scalar(0)));
  Vector rho(m_), col(m_), tau(m_), alpha = Vector::Zero(N);
  long stall = 0;
  Scalar last_obj = working_objective();
  bool verified = false;

  while (true) {
    if (iterations_ >= opt_.max_iterations) return LpStatus::IterationLimit;
    if ((iterations_ & 31) == 0) {
      if (deadline && Clock::now() > *deadline) return LpStatus::TimeLimit;
      if (should_stop && should_stop()) return LpStatus::TimeLimit;
    }
    if (static_cast<int>(etas_.size()) >= opt_.refactor_interval) fresh();

    // The working objective is the dual bound of the shifted problem.
    const Scalar obj = working_objective() - perturbation_slack_;
    if (obj > cutoff + cut_tol) return LpStatus::Cutoff;

    const int r = choose_leaving();
    if (r < 0) {
      if (perturbed_) {
        // Primal feasible for the shifted costs: restore them and continue.
        cost_ = true_cost_;
        perturbed_ = false;
        perturbation_slack_ = 0;
        fresh();
        stall = 0;
        bland_ = false;
        last_obj = working_objective();
        verified = true;
        continue;
      }
      if (!verified) {
        // Recompute from a fresh factorization before declaring optimality.
        fresh();
        verified = true;
        continue;
      }
      for (int j = 0; j < N; ++j) {
        if (basis_.status[j] != VarStatus::Basic && at_artificial(j) && std::abs(d_[j]) > dtol)
          return LpStatus::Unbounded;
      }
      return LpStatus::Optimal;
    }
    verified = false;

    const int p = basis_.basic[r];
    const bool to_lower = x_[p] < lo_[p];
    const Scalar delta = to_lower ? x_[p] - lo_[p] : x_[p] - hi_[p];

    rho.setZero();
    rho[r] = 1;
    btran(rho);
    edge_weights_[r] = std::max(rho.squaredNorm(), Scalar(1e-12));

    // Pivot row and Harris two-pass ratio test.
    Scalar bound = std::numeric_limits<Scalar>::infinity();
    for (int j = 0; j < N; ++j) {
      const auto s = basis_.status[j];
      if (s == VarStatus::Basic || lo_[j] == hi_[j]) {
        alpha[j] = 0;
        continue;
      }
      const Scalar a = column_dot(j, rho);
      alpha[j] = a;
      const bool eligible = to_lower ? ((s == VarStatus::AtLower && a < -ptol) || (s == VarStatus::AtUpper && a > ptol))
                                     : ((s == VarStatus::AtLower && a > ptol) || (s == VarStatus::AtUpper && a < -ptol));
      if (!eligible) continue;
      const Scalar dj = s == VarStatus::AtLower ? d_[j] : -d_[j];
      bound = std::min(bound, (std::max(dj, Scalar(0)) + dtol) / std::abs(a));
    }
    int q = -1;
    Scalar q_mag = 0, q_ratio = std::numeric_limits<Scalar>::infinity();
    if (std::isfinite(static_cast<double>(bound))) {
      for (int j = 0; j < N; ++j) {
        const auto s = basis_.status[j];
        const Scalar a = alpha[j];
        if (s == VarStatus::Basic || a == Scalar(0)) continue;
        const bool eligible = to_lower ? ((s == VarStatus::AtLower && a < -ptol) || (s == VarStatus::AtUpper && a > ptol))
                                       : ((s == VarStatus::AtLower && a > ptol) || (s == VarStatus::AtUpper && a < -ptol));
        if (!eligible) continue;
        const Scalar dj = std::max(s == VarStatus::AtLower ? d_[j] : -d_[j], Scalar(0));
        const Scalar ratio = dj / std::abs(a);
        if (ratio > bound) continue;
        if (bland_) {
          if (ratio < q_ratio) q = j, q_ratio = ratio;
        } else if (std::abs(a) > q_mag) {
          q = j, q_mag = std::abs(a);
        }
      }
    }
    if (q < 0) {
      if (!etas_.empty()) {
        fresh();
        continue;
      }
      return LpStatus::Infeasible;
    }

    col.setZero();
    add_column(q, Scalar(1), col);
    ftran(col);
    const Scalar piv = col[r];
    const Scalar aq = alpha[q];
    if (std::abs(piv) < ptol || std::abs(piv - aq) > Scalar(1e-6) * (Scalar(1) + std::abs(aq))) {
      if (!etas_.empty()) {
        fresh();
        continue;
      }
      if (std::abs(piv) < ptol) {
        recover();
        fresh();
        continue;
      }
    }

    // Steepest-edge weights for the next basis.
    if (opt_.pricing == Pricing::SteepestEdge) {
      tau = rho;
      ftran(tau);
      const Scalar wr = edge_weights_[r];
      for (int i = 0; i < m_; ++i) {
        if (i == r || col[i] == Scalar(0)) continue;
        const Scalar k = col[i] / piv;
        edge_weights_[i] = std::max(edge_weights_[i] + k * (k * wr - Scalar(2) * tau[i]), Scalar(1e-12));
      }
      edge_weights_[r] = std::max(wr / (piv * piv), Scalar(1e-12));
    }

    // Dual update.
    const auto sq = basis_.status[q];
    Scalar dq = d_[q];
    if ((sq == VarStatus::AtLower && dq < 0) || (sq == VarStatus::AtUpper && dq > 0)) dq = 0;
    const Scalar theta_d = dq / piv;
    if (theta_d != Scalar(0)) {
      for (int j = 0; j < N; ++j) {
        if (basis_.status[j] != VarStatus::Basic && alpha[j] != Scalar(0)) d_[j] -= theta_d * alpha[j];
      }
    }
    d_[q] = 0;
    d_[p] = -theta_d;

    // Primal update.
    const Scalar theta_p = delta / piv;
    for (int i = 0; i < m_; ++i) {
      if (col[i] != Scalar(0)) x_[basis_.basic[i]] -= theta_p * col[i];
    }
    x_[q] += theta_p;
    x_[p] = to_lower ? lo_[p] : hi_[p];

    basis_.status[p] = to_lower ? VarStatus::AtLower : VarStatus::AtUpper;
    basis_.status[q] = VarStatus::Basic;
    basis_.basic[r] = q;
    pos_of_[p] = -1;
    pos_of_[q] = r;
    alpha[q] = 0;

    Eta eta;
    eta.pos = r;
    eta.pivot = piv;
    for (int i = 0; i < m_; ++i) {
      if (i != r && std::abs(col[i]) > Scalar(1e-14)) eta.entries.emplace_back(i, col[i]);
    }
    etas_.push_back(std::move(eta));
    if (record_pivots_) pivots_.emplace_back(q, p);

    ++iterations_;
    ++total_iterations_;
    const Scalar new_obj = working_objective();
    if (new_obj <= last_obj + Scalar(1e-12) * (Scalar(1) + std::abs(last_obj))) {
      if (++stall > 2L * std::max(m_, 1)) bland_ = true;
    } else {
      stall = 0;
    }
    last_obj = new_obj;
  }
}

template class BoundedDualSimplex<double>;

// ---------------------------------------------------------------------------

LpResult solve_lp(const MilpInstance& inst, std::span<const BoundOverride> overrides, const LpOptions& options) {
  std::vector<int> row_of;
  auto model = to_lp_model(inst, &row_of);
  for (const auto& o : overrides) {
    model.col_lower[o.var] = o.lower;
    model.col_upper[o.var] = o.upper;
  }
  BoundedDualSimplex<double> simplex(model, options);
  LpResult res;
  res.status = simplex.solve();
  res.iterations = simplex.iterations();
  const double sign = inst.objective().sense == ObjectiveSense::Maximize ? -1.0 : 1.0;
  if (res.status == LpStatus::Optimal || res.status == LpStatus::Unbounded) {
    Eigen::VectorXd x = simplex.primal();
    res.values.assign(x.data(), x.data() + x.size());
    res.objective = sign * simplex.objective();
    Eigen::VectorXd y = simplex.row_duals();
    res.row_duals.assign(row_of.size(), 0.0);
    for (std::size_t i = 0; i < row_of.size(); ++i)
      if (row_of[i] >= 0) res.row_duals[i] = y[row_of[i]];
    Eigen::VectorXd d = simplex.reduced_costs();
    res.reduced_costs.assign(d.data(), d.data() + d.size());
  }
  return res;
}

double dual_objective(const LpModel<double>& model, const Eigen::VectorXd& y) {
  double total = model.offset;
  for (Eigen::Index r = 0; r < y.size(); ++r) {
    const double v = y[r];
    if (v > 0) total += v * model.row_lower[r];
    else if (v < 0) total += v * model.row_upper[r];
  }
  Eigen::VectorXd d = model.cost - model.A.transpose() * y;
  for (Eigen::Index j = 0; j < d.size(); ++j) {
    const double v = d[j];
    if (v > 0) total += v * model.col_lower[j];
    else if (v < 0) total += v * model.col_upper[j];
  }
  return total;
}

}  // namespace gridlayout
