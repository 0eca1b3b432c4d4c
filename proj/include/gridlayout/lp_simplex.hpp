#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <chrono>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "gridlayout/milp.hpp"

namespace gridlayout {

enum class LpStatus { Optimal, Infeasible, Unbounded, Cutoff, IterationLimit, TimeLimit };

const char* to_string(LpStatus status);

/// Leaving-row choice: largest infeasibility scaled by the row's
/// steepest-edge weight, or the plain largest infeasibility.
enum class Pricing { SteepestEdge, Dantzig };

struct LpOptions {
  Pricing pricing = Pricing::SteepestEdge;
  double primal_tolerance = 1e-7;
  double dual_tolerance = 1e-9;
  double pivot_tolerance = 1e-9;
  int refactor_interval = 50;
  long max_iterations = 1'000'000;
  // Replaces infinite bounds during the solve; a nonbasic variable resting
  // on one at the optimum signals an unbounded problem.
  double artificial_bound = 1e7;
  // Relative size of the deterministic cost shift used against dual
  // degeneracy. It is removed before optimality is declared; 0 disables it.
  double cost_perturbation = 1e-6;
  // Geometric-mean row and column scaling, rounded to powers of two.
  bool scaling = true;
};

/// Minimization LP in row-range form:
///   min c'x + offset  s.t.  row_lower <= A x <= row_upper,  col_lower <= x <= col_upper.
template <typename Scalar>
struct LpModel {
  using Index = Eigen::Index;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  Eigen::SparseMatrix<Scalar, Eigen::ColMajor> A;
  Vector cost;
  Vector col_lower, col_upper;
  Vector row_lower, row_upper;
  Scalar offset = 0;
  Index rows() const { return A.rows(); }
  Index cols() const { return A.cols(); }
};

/// Lowers the active constraints of an instance to an LpModel. Maximization
/// is folded into the cost sign; `row_of` maps instance rows to LP rows
/// (-1 for inactive rows).
LpModel<double> to_lp_model(const MilpInstance& inst, std::vector<int>* row_of = nullptr);

enum class VarStatus : std::uint8_t { Basic, AtLower, AtUpper };

struct Basis {
  std::vector<VarStatus> status;  // structural columns, then one logical per row
  std::vector<int> basic;         // column index held by each basis position
  bool empty() const { return basic.empty(); }
};

/// Bounded-variable dual simplex. Every column, including the row logicals
/// s = A x, is boxed (infinite bounds are replaced by artificial ones), so
/// any basis can be made dual feasible by choosing the nonbasic bound from
/// the reduced-cost sign and only phase two is needed. Warm starts after
/// bound changes reuse the previous basis.
template <typename Scalar>
class BoundedDualSimplex {
 public:
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using SparseMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;
  using Clock = std::chrono::steady_clock;

  explicit BoundedDualSimplex(const LpModel<Scalar>& model, LpOptions options = {});

  /// Replaces the structural column bounds (sizes must match).
  void set_column_bounds(const Vector& lower, const Vector& upper);
  /// Replaces the bounds of one row; infinite values keep the implied bound.
  void set_row_bounds(int row, Scalar lower, Scalar upper);
  void set_basis(const Basis& basis);
  const Basis& basis() const { return basis_; }

  /// Runs the dual simplex. Stops early with Cutoff once the dual objective
  /// exceeds `cutoff`.
  LpStatus solve(Scalar cutoff = std::numeric_limits<Scalar>::infinity(),
                 std::optional<Clock::time_point> deadline = std::nullopt,
                 const std::function<bool()>& should_stop = {});

  Vector primal() const { return x_.head(n_).cwiseProduct(col_scale_); }
  /// Row duals y with reduced costs d = c - A'y (minimization sign).
  Vector row_duals() const;
  Vector reduced_costs() const { return d_.head(n_).cwiseQuotient(col_scale_); }
  Scalar objective() const;
  long iterations() const { return iterations_; }
  long total_iterations() const { return total_iterations_; }
  int refactorizations() const { return refactorizations_; }
  bool used_bland() const { return bland_; }
  /// Pivot log (entering, leaving column) for determinism checks.
  const std::vector<std::pair<int, int>>& pivots() const { return pivots_; }
  void record_pivots(bool on) { record_pivots_ = on; }

 private:
  struct Eta {
    int pos;
    Scalar pivot;
    std::vector<std::pair<int, Scalar>> entries;  // i != pos
  };

  bool refactor();
  void slack_basis();
  void ftran(Vector& v) const;
  void btran(Vector& v) const;
  void compute_primal();
  void compute_duals();
  void settle_nonbasic();
  Scalar column_dot(int j, const Vector& v) const;
  void add_column(int j, Scalar scale, Vector& v) const;
  int choose_leaving() const;
  bool at_artificial(int j) const;
  void perturb_costs();
  Scalar working_objective() const;

  LpOptions opt_;
  SparseMatrix A_;
  Scalar offset_ = 0;
  int recoveries_ = 0;
  int m_ = 0, n_ = 0;
  Vector col_scale_, row_scale_;  // x = col_scale * x~, s~ = row_scale * s
  Vector cost_;                 // n + m (logicals have zero cost), working copy
  Vector true_cost_;
  bool perturbed_ = false;
  Scalar perturbation_slack_ = 0;  // max effect of the shift on any objective value
  Vector lo_, hi_;              // effective bounds, n + m
  std::vector<bool> art_lo_, art_hi_;
  Vector x_, d_;
  Basis basis_;
  std::vector<int> pos_of_;     // column -> basis position or -1
  Vector edge_weights_;         // dual steepest edge: ||row r of B^-1||^2
  mutable Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu_;
  std::vector<Eta> etas_;
  bool factor_ok_ = false;
  bool bland_ = false;
  long iterations_ = 0;
  long total_iterations_ = 0;
  int refactorizations_ = 0;
  bool record_pivots_ = false;
  std::vector<std::pair<int, int>> pivots_;
};

extern template class BoundedDualSimplex<double>;

struct BoundOverride {
  int var = -1;
  double lower = 0;
  double upper = 0;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  std::vector<double> values;  // indexed by VarRef::index
  double objective = 0;        // in the instance's own sense
  long iterations = 0;
  std::vector<double> row_duals;      // per active instance row, minimization sign
  std::vector<double> reduced_costs;  // per variable, minimization sign
};

/// Solves the LP relaxation of an instance (binaries relaxed to [0,1])
/// under optional bound overrides.
LpResult solve_lp(const MilpInstance& inst, std::span<const BoundOverride> overrides = {},
                  const LpOptions& options = {});

/// Dual objective of the minimization form of `model` for row duals y:
///   sum_r y_r * (y_r > 0 ? row_lower : row_upper) + sum_j d_j * (d_j > 0 ? col_lower : col_upper)
/// with d = c - A'y. A lower bound on the LP optimum for any y.
double dual_objective(const LpModel<double>& model, const Eigen::VectorXd& y);

}  // namespace gridlayout
