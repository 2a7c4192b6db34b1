#include "robustcf/simplex_lp.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numeric>
#include <vector>

#include "robustcf/errors.hpp"

namespace robustcf {

namespace {

constexpr double kPivTol = 1e-9;
constexpr double kFeasTol = 1e-7;

struct Tableau {
  const Eigen::MatrixXd& A;
  Eigen::VectorXd b;  // sign-normalized
  std::vector<int> basis;
  Eigen::MatrixXd Binv;

  void refactor() {
    const int m = static_cast<int>(b.size());
    Eigen::MatrixXd B(m, m);
    for (int j = 0; j < m; ++j) B.col(j) = A.col(basis[j]);
    Binv = B.partialPivLu().inverse();
  }
};

// One simplex phase: price over `allowed` columns against costs `cost`.
// Returns true when optimal, false when unbounded.
bool run_phase(Tableau& t, const Eigen::VectorXd& cost, int n_allowed, int max_iter,
               bool& unbounded) {
  const int m = static_cast<int>(t.b.size());
  unbounded = false;
  int stall = 0;
  for (int iter = 0; iter < max_iter; ++iter) {
    Eigen::VectorXd xb = t.Binv * t.b;
    Eigen::VectorXd cb(m);
    for (int j = 0; j < m; ++j) cb[j] = cost[t.basis[j]];
    Eigen::VectorXd pi = t.Binv.transpose() * cb;

    // Pricing: Dantzig normally, Bland when degenerate pivots accumulate.
    const bool bland = stall > 2 * m + 20;
    int enter = -1;
    double best = -kPivTol;
    for (int j = 0; j < n_allowed; ++j) {
      double rc = cost[j] - pi.dot(t.A.col(j));
      if (rc < -kPivTol) {
        if (bland) {
          bool basic = false;
          for (int bidx : t.basis)
            if (bidx == j) { basic = true; break; }
          if (!basic) { enter = j; break; }
        } else if (rc < best) {
          best = rc;
          enter = j;
        }
      }
    }
    if (enter < 0) return true;  // optimal for this phase

    Eigen::VectorXd d = t.Binv * t.A.col(enter);
    int leave = -1;
    double min_ratio = 0.0;
    for (int i = 0; i < m; ++i) {
      if (d[i] > kPivTol) {
        double ratio = xb[i] / d[i];
        if (leave < 0 || ratio < min_ratio - 1e-12 ||
            (std::abs(ratio - min_ratio) <= 1e-12 && t.basis[i] > t.basis[leave])) {
          leave = i;
          min_ratio = ratio;
        }
      }
    }
    if (leave < 0) {
      unbounded = true;
      return false;
    }
    stall = (min_ratio < 1e-12) ? stall + 1 : 0;
    t.basis[leave] = enter;
    t.refactor();
  }
  return false;  // iteration cap
}

}  // namespace

LpSolution solve_lp(const LpStandard& lp) {
  const int m = static_cast<int>(lp.A.rows());
  const int n = static_cast<int>(lp.A.cols());
  if (lp.b.size() != m || lp.c.size() != n)
    throw ArgumentError("solve_lp: inconsistent dimensions");

  // Augment with artificials (identity on sign-normalized rows).
  Eigen::MatrixXd A(m, n + m);
  Eigen::VectorXd b = lp.b;
  A.leftCols(n) = lp.A;
  A.rightCols(m).setZero();
  for (int i = 0; i < m; ++i) {
    if (b[i] < 0) {
      b[i] = -b[i];
      A.row(i).head(n) = -lp.A.row(i);
    }
    A(i, n + i) = 1.0;
  }

  Tableau t{A, b, {}, {}};
  t.basis.resize(m);
  std::iota(t.basis.begin(), t.basis.end(), n);
  t.refactor();

  LpSolution sol;
  const int max_iter = 50 * (n + m) + 1000;

  // Phase 1: minimize the artificial mass.
  Eigen::VectorXd cost1 = Eigen::VectorXd::Zero(n + m);
  cost1.tail(m).setOnes();
  bool unbounded = false;
  if (!run_phase(t, cost1, n, max_iter, unbounded)) {
    sol.status = LpSolution::Status::Stalled;
    return sol;
  }
  {
    Eigen::VectorXd xb = t.Binv * b;
    double art = 0.0;
    for (int j = 0; j < m; ++j)
      if (t.basis[j] >= n) art += std::abs(xb[j]);
    if (art > kFeasTol) {
      sol.status = LpSolution::Status::Infeasible;
      return sol;
    }
  }

  // Phase 2 over the real columns (artificials keep zero cost and may only
  // linger as degenerate basics).
  Eigen::VectorXd cost2 = Eigen::VectorXd::Zero(n + m);
  cost2.head(n) = lp.c;
  if (!run_phase(t, cost2, n, max_iter, unbounded)) {
    sol.status = unbounded ? LpSolution::Status::Unbounded : LpSolution::Status::Stalled;
    return sol;
  }

  Eigen::VectorXd xb = t.Binv * b;
  sol.x = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < m; ++j)
    if (t.basis[j] < n) sol.x[t.basis[j]] = xb[j];
  sol.value = lp.c.dot(sol.x);
  Eigen::VectorXd cb(m);
  for (int j = 0; j < m; ++j) cb[j] = cost2[t.basis[j]];
  Eigen::VectorXd pi = t.Binv.transpose() * cb;
  // Undo the row sign normalization in the duals.
  sol.row_duals.resize(m);
  for (int i = 0; i < m; ++i)
    sol.row_duals[i] = (lp.b[i] < 0 ? -pi[i] : pi[i]);
  sol.status = LpSolution::Status::Optimal;
  return sol;
}

}  // namespace robustcf
