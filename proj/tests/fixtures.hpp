#pragma once

// Small discrete fixtures and the independent primal oracle used to verify
// the dual programs. The oracle optimizes directly over grid densities by
// nested grid refinement on the affine slice cut out by the equality rows;
// it never touches the dual solver.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <limits>
#include <memory>
#include <vector>

#include "robustcf/divergence.hpp"
#include "robustcf/expectation.hpp"
#include "robustcf/moment_model.hpp"
#include "robustcf/nelder_mead.hpp"

namespace robustcf::testing {

// ---------------------------------------------------------------------------
// Fixtures

/// Support {0,1} with uniform weights; optionally one equality row g2 = u.
/// k(u) = k_scale * u. theta is 1-dimensional and unused by the rows.
class TwoPointModel : public MomentModel {
 public:
  explicit TwoPointModel(bool with_mean_row, double k_scale = 1.0)
      : with_mean_row_(with_mean_row), k_scale_(k_scale) {
    box_.lower = Eigen::VectorXd::Constant(1, 0.0);
    box_.upper = Eigen::VectorXd::Constant(1, 1.0);
  }
  Dims dims() const override { return {0, with_mean_row_ ? 1 : 0, 0, 0}; }
  int u_dim() const override { return 1; }
  const ParameterBox& theta_box() const override { return box_; }
  std::string name() const override { return "two-point"; }
  void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd&,
              Eigen::Ref<Eigen::RowVectorXd> out) const override {
    if (with_mean_row_) out[0] = u[0];
  }
  double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd&) const override {
    return k_scale_ * u[0];
  }

 private:
  bool with_mean_row_;
  double k_scale_;
  ParameterBox box_;
};

inline ExpectationEngine two_point_engine() {
  Eigen::MatrixXd pts(2, 1);
  pts << 0.0, 1.0;
  Eigen::VectorXd w(2);
  w << 0.5, 0.5;
  return ExpectationEngine::grid(pts, w);
}

/// Support {-2,-1,0,1,2} with weights (0.1,0.2,0.4,0.2,0.1). Rows:
///   g1 = -1{u <= 0}            (inequality vs a targeted coverage level)
///   g2 = u - theta             (equality vs a targeted mean)
///   g4 = u^2 - 1.2 - theta/2   (equality to zero)
/// k(u) = sin(u) + u/2 (bounded, non-monotone).
class FivePointModel : public MomentModel {
 public:
  FivePointModel() {
    box_.lower = Eigen::VectorXd::Constant(1, -0.5);
    box_.upper = Eigen::VectorXd::Constant(1, 0.5);
  }
  Dims dims() const override { return {1, 1, 0, 1}; }
  int u_dim() const override { return 1; }
  const ParameterBox& theta_box() const override { return box_; }
  std::string name() const override { return "five-point"; }
  void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd& theta,
              Eigen::Ref<Eigen::RowVectorXd> out) const override {
    out[0] = u[0] <= 0.0 ? -1.0 : 0.0;
    out[1] = u[0] - theta[0];
    out[2] = u[0] * u[0] - 1.2 - 0.5 * theta[0];
  }
  double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd&) const override {
    return std::sin(u[0]) + 0.5 * u[0];
  }

 private:
  ParameterBox box_;
};

inline ExpectationEngine five_point_engine() {
  Eigen::MatrixXd pts(5, 1);
  pts << -2.0, -1.0, 0.0, 1.0, 2.0;
  Eigen::VectorXd w(5);
  w << 0.1, 0.2, 0.4, 0.2, 0.1;
  return ExpectationEngine::grid(pts, w);
}

// ---------------------------------------------------------------------------
// Primal oracle

struct OracleResult {
  bool feasible = false;
  double value = 0.0;
  Eigen::VectorXd m;  // density ratios at the support points
};

namespace detail {

struct OracleProblem {
  Eigen::VectorXd w, k;
  Eigen::MatrixXd g;       // n x d
  Eigen::VectorXd pbar;    // padded targets
  std::vector<int> eq_rows, ineq_rows;
  DivergenceKind kind = DivergenceKind::kl();
  double delta = 0.0;

  double divergence(const Eigen::VectorXd& m) const {
    double total = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      if (m[i] < 0.0) return std::numeric_limits<double>::infinity();
      total += w[i] * phi(kind, m[i]);
    }
    return total;
  }
  bool satisfies_rows(const Eigen::VectorXd& m, double tol) const {
    for (int r : ineq_rows)
      if ((w.array() * m.array() * g.col(r).array()).sum() > pbar[r] + tol) return false;
    return true;
  }
  double objective(const Eigen::VectorXd& m) const {
    return (w.array() * m.array() * k.array()).sum();
  }
};

// Direct minimizer of f over the affine slice m = m0 + N z by nested grid
// refinement; f returns +inf for infeasible points.
inline bool zoom_minimize(const std::function<double(const Eigen::VectorXd&)>& f, int r,
                          Eigen::VectorXd center, double radius, int rounds, int per_dim,
                          Eigen::VectorXd* argmin, double* minval) {
  bool found = false;
  Eigen::VectorXd best_z = center;
  double best = std::numeric_limits<double>::infinity();
  for (int round = 0; round < rounds; ++round) {
    Eigen::VectorXd base = found ? best_z : center;
    std::vector<int> idx(r, 0);
    Eigen::VectorXd z(r);
    bool carry = false;
    while (!carry) {
      for (int j = 0; j < r; ++j)
        z[j] = base[j] + radius * (2.0 * idx[j] / (per_dim - 1) - 1.0);
      double v = f(z);
      if (v < best) {
        best = v;
        best_z = z;
        found = true;
      }
      int j = 0;
      for (; j < r; ++j) {
        if (++idx[j] < per_dim) break;
        idx[j] = 0;
      }
      carry = j == r;
    }
    radius *= 3.0 / (per_dim - 1);  // keep a margin around the incumbent cell
  }
  if (!found || !std::isfinite(best)) return false;
  *argmin = best_z;
  *minval = best;
  return true;
}

// Simplex polish after the zoom rounds; narrow feasible corners are easier
// for an adaptive simplex than for axis-aligned grids.
inline void nm_polish(const std::function<double(const Eigen::VectorXd&)>& f,
                      Eigen::VectorXd* z, double* val, double step) {
  const int r = static_cast<int>(z->size());
  ParameterBox box;
  box.lower = Eigen::VectorXd::Constant(r, -1e6);
  box.upper = Eigen::VectorXd::Constant(r, 1e6);
  NelderMeadOptions opts;
  opts.max_evals = 6000;
  opts.f_tol = 0.0;
  opts.x_tol = 1e-13;
  for (double s : {step, step / 100.0}) {
    NelderMeadResult res =
        nelder_mead_minimize(f, *z, Eigen::VectorXd::Constant(r, std::max(s, 1e-10)), box, opts);
    if (res.value < *val) {
      *val = res.value;
      *z = res.x;
    }
  }
}

}  // namespace detail

/// Brute-force extreme counterfactual over grid densities at fixed theta:
/// min/max of E[m k] over m >= 0 with unit mass, the model's moment rows, and
/// divergence <= delta. Independent enumeration, for duality verification.
inline OracleResult primal_oracle(const MomentModel& model, const Eigen::VectorXd& theta,
                                  const ExpectationEngine& engine, const DivergenceKind& kind,
                                  const ReducedForm& P, double delta, bool upper) {
  detail::OracleProblem prob;
  prob.kind = kind;
  prob.delta = delta;
  prob.w = engine.weights();
  const Eigen::MatrixXd& pts = engine.points();
  const Dims dims = model.dims();
  prob.g = model.eval_g_batch(pts, theta);
  prob.k = model.eval_k_batch(pts, theta);
  prob.pbar = P.stacked_padded(dims);
  for (int r = 0; r < dims.total(); ++r) {
    bool ineq = r < dims.d1 || (r >= dims.d1 + dims.d2 && r < dims.d1 + dims.d2 + dims.d3);
    (ineq ? prob.ineq_rows : prob.eq_rows).push_back(r);
  }

  const Eigen::Index n = prob.w.size();
  // Affine slice: rows = unit mass plus the equality moment rows.
  const int neq = 1 + static_cast<int>(prob.eq_rows.size());
  Eigen::MatrixXd A(neq, n);
  Eigen::VectorXd b(neq);
  A.row(0) = prob.w.transpose();
  b[0] = 1.0;
  for (int i = 0; i < neq - 1; ++i) {
    int r = prob.eq_rows[i];
    A.row(1 + i) = (prob.w.array() * prob.g.col(r).array()).transpose();
    b[1 + i] = prob.pbar[r];
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(A);
  Eigen::VectorXd m0 = cod.solve(b);
  if ((A * m0 - b).lpNorm<Eigen::Infinity>() > 1e-9) return {};  // inconsistent equalities
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  lu.setThreshold(1e-10);
  const int r = static_cast<int>(lu.dimensionOfKernel());
  Eigen::MatrixXd N(n, r);
  if (r > 0) {
    N = lu.kernel();
    // Orthonormalize the kernel for a well-scaled z parametrization.
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(N);
    N = qr.householderQ() * Eigen::MatrixXd::Identity(n, r);
  }

  auto to_m = [&](const Eigen::VectorXd& z) { return (m0 + N * z).eval(); };

  // Constraint excess as smooth penalties so the walk can find thin feasible
  // slivers; candidates are certified feasible afterwards.
  auto violation = [&](const Eigen::VectorXd& m) {
    double pen = 0.0;
    for (Eigen::Index i = 0; i < m.size(); ++i)
      if (m[i] < 0.0) pen += m[i] * m[i];
    for (int rr : prob.ineq_rows) {
      double excess = (prob.w.array() * m.array() * prob.g.col(rr).array()).sum() - prob.pbar[rr];
      if (excess > 0.0) pen += excess * excess;
    }
    return pen;
  };
  // Largest combined constraint excess (for the feasibility bisection).
  auto max_excess = [&](const Eigen::VectorXd& m) {
    double worst = -m.minCoeff();
    for (int rr : prob.ineq_rows)
      worst = std::max(worst, (prob.w.array() * m.array() * prob.g.col(rr).array()).sum() -
                                  prob.pbar[rr]);
    worst = std::max(worst, prob.divergence(m.cwiseMax(0.0)) - prob.delta);
    return worst;
  };

  // Phase 1: center the search on the minimum-divergence point.
  auto div_obj = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd m = to_m(z);
    return prob.divergence(m.cwiseMax(0.0)) + 1e12 * violation(m);
  };
  const double wmin = prob.w.minCoeff();
  const double R = (std::sqrt(static_cast<double>(n)) + 2.0) / wmin;
  Eigen::VectorXd z_center = Eigen::VectorXd::Zero(r);
  if (r > 0) {
    double div_val = 0.0;
    if (!detail::zoom_minimize(div_obj, r, Eigen::VectorXd::Zero(r), R, 12, 17, &z_center,
                               &div_val))
      return {};
    detail::nm_polish(div_obj, &z_center, &div_val, 1e-3 * R);
  }
  Eigen::VectorXd m_center = to_m(z_center);
  if (violation(m_center) > 1e-14 || (m_center.array() < -1e-7).any()) return {};
  m_center = m_center.cwiseMax(0.0);
  double div_min = prob.divergence(m_center);
  if (div_min > delta + 1e-9) return {};  // no density within the budget

  OracleResult out;
  out.feasible = true;
  if (r == 0) {
    out.value = prob.objective(m_center);
    out.m = m_center;
    return out;
  }

  // Phase 2: optimize the counterfactual over the budgeted ball around the
  // center (z-radius ~ sqrt(2 (delta - div_min)/wmin)), with the budget and
  // rows as penalties.
  double gap = std::max(delta - div_min, 0.0);
  double radius = std::min(R, 4.0 * std::sqrt(2.0 * gap / wmin) + 1e-6);
  const double sign = upper ? -1.0 : 1.0;
  auto k_obj = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd m = to_m(z);
    Eigen::VectorXd mc = m.cwiseMax(0.0);
    double over = std::max(prob.divergence(mc) - prob.delta, 0.0);
    return sign * prob.objective(mc) + 1e12 * (violation(m) + over * over);
  };
  Eigen::VectorXd z_best;
  double val = 0.0;
  if (!detail::zoom_minimize(k_obj, r, z_center, radius, 14, 17, &z_best, &val)) return {};

  // Certify feasibility by shaving toward the strictly feasible center: every
  // constraint is convex along the segment, so bisect on the worst excess.
  Eigen::VectorXd m_best = to_m(z_best);
  if (max_excess(m_best) > 0.0) {
    double t_lo = 0.0, t_hi = 1.0;
    for (int it = 0; it < 60; ++it) {
      double t = 0.5 * (t_lo + t_hi);
      Eigen::VectorXd mt = m_center + t * (m_best - m_center);
      (max_excess(mt) <= 0.0 ? t_lo : t_hi) = t;
    }
    m_best = m_center + t_lo * (m_best - m_center);
  }
  m_best = m_best.cwiseMax(0.0);
  out.value = prob.objective(m_best);
  out.m = m_best;
  return out;
}

}  // namespace robustcf::testing
