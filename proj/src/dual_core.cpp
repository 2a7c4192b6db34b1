#include "robustcf/dual_core.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "robustcf/errors.hpp"
#include "robustcf/lbfgs_box.hpp"
#include "robustcf/simplex_lp.hpp"

namespace robustcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::MaxIter: return "max-iter";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Boundary: return "boundary";
  }
  return "?";
}

DiscreteStage stage_discrete(const MomentModel& model, const Eigen::VectorXd& theta,
                             const ExpectationEngine& engine, bool need_k) {
  if (!engine.discrete())
    throw CapabilityError("stage_discrete: engine has no discrete support");
  DiscreteStage st;
  st.weights = engine.weights();
  st.g = model.eval_g_batch(engine.points(), theta);
  for (Eigen::Index j = 0; j < st.g.cols(); ++j) {
    if (!st.g.col(j).allFinite()) {
      Eigen::Index i = 0;
      for (; i < st.g.rows(); ++i)
        if (!std::isfinite(st.g(i, j))) break;
      throw NumericError("moment row " + std::to_string(j) + " non-finite at support point " +
                         std::to_string(i));
    }
  }
  if (need_k) {
    st.k = model.eval_k_batch(engine.points(), theta);
    if (!st.k.allFinite()) throw NumericError("counterfactual non-finite on support");
  }
  return st;
}

namespace {

struct PackedLayout {
  bool has_eta = false;
  bool has_zeta = false;
  int d = 0;
  int size() const { return (has_eta ? 1 : 0) + (has_zeta ? 1 : 0) + d; }
  int zeta_index() const { return has_eta ? 1 : 0; }
  int lambda_offset() const { return (has_eta ? 1 : 0) + (has_zeta ? 1 : 0); }
};

// Inner dual objective over packed variables [eta][zeta][lambda]; maximized.
// eta enters linearly through the perspective form (eta phi)*, so the
// objective is jointly concave and a box lower bound at the eta floor keeps
// the maximization global.
// sk = +1 for the lower program, -1 for the mirrored upper, 0 for delta*.
class InnerObjective {
 public:
  InnerObjective(const DivergenceKind& kind, PackedLayout layout, double sk, double delta,
                 Eigen::VectorXd pbar, const DiscreteStage* stage, const CellBasis* cells,
                 const Eigen::VectorXd* theta)
      : kind_(kind),
        layout_(layout),
        sk_(sk),
        delta_(delta),
        pbar_(std::move(pbar)),
        stage_(stage),
        cells_(cells),
        theta_(theta) {
    if (stage_) {
      logw_ = stage_->weights.array().max(1e-300).log();
      n_ = stage_->weights.size();
    }
  }

  double operator()(const Eigen::VectorXd& x, Eigen::VectorXd& grad) const {
    grad.setZero(layout_.size());
    const double eta = layout_.has_eta ? x[0] : 1.0;
    const double zeta = layout_.has_zeta ? x[layout_.zeta_index()] : 0.0;
    const Eigen::VectorXd lambda = x.tail(layout_.d);
    if (cells_) return eval_cells(eta, lambda, x, grad);
    if (kind_.profiles_zeta()) return eval_kl(eta, lambda, grad);
    return eval_generic(eta, zeta, lambda, grad);
  }

 private:
  double eval_kl(double eta, const Eigen::VectorXd& lambda, Eigen::VectorXd& grad) const {
    // v_i = (-sk*K_i - (G lambda)_i)/eta; value = -eta*LSE(v + log w) - eta*delta - lambda'P
    Eigen::VectorXd u = -(stage_->g * lambda);
    if (sk_ != 0.0) u -= sk_ * stage_->k;
    Eigen::VectorXd a = u / eta + logw_;
    double amax = a.maxCoeff();
    if (!std::isfinite(amax)) return -kInf;
    Eigen::VectorXd ex = (a.array() - amax).exp();
    double z = ex.sum();
    double lse = amax + std::log(z);
    double value = -eta * lse - eta * delta_ - lambda.dot(pbar_);
    if (!std::isfinite(value)) return -kInf;
    Eigen::VectorXd mt = ex / z;  // softmax weights
    grad.tail(layout_.d) = stage_->g.transpose() * mt - pbar_;
    if (layout_.has_eta) {
      double mv = mt.dot(u) / eta;  // E_m[v]
      grad[0] = -lse + mv - delta_;
    }
    return value;
  }

  double eval_generic(double eta, double zeta, const Eigen::VectorXd& lambda,
                      Eigen::VectorXd& grad) const {
    Eigen::VectorXd w = -(stage_->g * lambda);
    if (sk_ != 0.0) w -= sk_ * stage_->k;
    w.array() -= zeta;
    const Eigen::VectorXd& p = stage_->weights;
    double A = 0.0, C = 0.0, D = 0.0;
    Eigen::VectorXd pm(n_);
    for (Eigen::Index i = 0; i < n_; ++i) {
      double v = w[i] / eta;
      double fc = phi_conjugate(kind_, v);
      if (!std::isfinite(fc)) return -kInf;
      double m = phi_conjugate_derivative(kind_, v);
      A += p[i] * fc;
      C += p[i] * m * v;
      D += p[i] * m;
      pm[i] = p[i] * m;
    }
    double value = -eta * A - eta * delta_ - zeta - lambda.dot(pbar_);
    if (!std::isfinite(value)) return -kInf;
    grad.tail(layout_.d) = stage_->g.transpose() * pm - pbar_;
    if (layout_.has_zeta) grad[layout_.zeta_index()] = D - 1.0;
    if (layout_.has_eta) grad[0] = -A + C - delta_;
    return value;
  }

  double eval_cells(double eta, const Eigen::VectorXd& lambda, const Eigen::VectorXd&,
                    Eigen::VectorXd& grad) const {
    // KL only; zeta profiled. value = -eta*log_mgf(theta, -sk/eta, -lambda/eta) - eta*delta - lambda'P
    double ds = 0.0;
    Eigen::VectorXd dt(layout_.d);
    double s = layout_.has_eta ? -sk_ / eta : 0.0;
    Eigen::VectorXd t = -lambda / eta;
    double lm = cells_->log_mgf(*theta_, s, t, &ds, &dt);
    double value = -eta * lm - eta * delta_ - lambda.dot(pbar_);
    if (!std::isfinite(value)) return -kInf;
    grad.tail(layout_.d) = dt - pbar_;
    if (layout_.has_eta) {
      grad[0] = -lm - (sk_ * ds + dt.dot(lambda)) / eta - delta_;
    }
    return value;
  }

  DivergenceKind kind_;
  PackedLayout layout_;
  double sk_;
  double delta_;
  Eigen::VectorXd pbar_;
  const DiscreteStage* stage_;
  const CellBasis* cells_;
  const Eigen::VectorXd* theta_;
  Eigen::VectorXd logw_;
  Eigen::Index n_ = 0;
};

Eigen::VectorXd lower_bounds_for(const PackedLayout& layout, const Dims& dims,
                                 const SolverSettings& settings) {
  Eigen::VectorXd lb = Eigen::VectorXd::Constant(layout.size(), -kInf);
  if (layout.has_eta) lb[0] = settings.eta_floor;
  int off = layout.lambda_offset();
  for (int i = 0; i < dims.d1; ++i) lb[off + i] = 0.0;
  for (int i = 0; i < dims.d3; ++i) lb[off + dims.d1 + dims.d2 + i] = 0.0;
  return lb;
}

Eigen::VectorXd project_cone(Eigen::VectorXd lambda, const Dims& dims) {
  for (int i = 0; i < dims.d1; ++i) lambda[i] = std::max(lambda[i], 0.0);
  for (int i = 0; i < dims.d3; ++i)
    lambda[dims.d1 + dims.d2 + i] = std::max(lambda[dims.d1 + dims.d2 + i], 0.0);
  return lambda;
}

Eigen::VectorXd pack(const PackedLayout& layout, double eta, double zeta,
                     const Eigen::VectorXd& lambda, const SolverSettings& settings) {
  Eigen::VectorXd x(layout.size());
  if (layout.has_eta) x[0] = std::max(eta, settings.eta_floor);
  if (layout.has_zeta) x[layout.zeta_index()] = zeta;
  x.tail(layout.d) = lambda;
  return x;
}

struct LinfMapping {
  LpSolution lp;
  DualSolveResult result;
};

DualSolveResult run_linf(const MomentModel& model, const Eigen::VectorXd& theta,
                         const ExpectationEngine& grid, const ReducedForm& P, bool include_k,
                         bool upper) {
  if (!grid.discrete())
    throw CapabilityError("linf programs require an engine with discrete support");
  const Dims dims = model.dims();
  DiscreteStage st = stage_discrete(model, theta, grid, include_k);
  const Eigen::Index n = st.weights.size();
  const int d = dims.total();
  const int n_slack = dims.d1 + dims.d3;

  // Distribution-form LP over grid masses q >= 0 and inequality slacks:
  //   minimize  (+-k)'q   s.t.  1'q = 1,  g'q (+ slack) = Pbar.
  LpStandard lp;
  const int rows = 1 + d;
  const int cols = static_cast<int>(n) + n_slack;
  lp.A.setZero(rows, cols);
  lp.b.setZero(rows);
  lp.c.setZero(cols);
  lp.A.row(0).head(n).setOnes();
  lp.b[0] = 1.0;
  Eigen::VectorXd pbar = P.stacked_padded(dims);
  for (int r = 0; r < d; ++r) {
    lp.A.row(1 + r).head(n) = st.g.col(r).transpose();
    lp.b[1 + r] = pbar[r];
  }
  int sc = static_cast<int>(n);
  for (int i = 0; i < dims.d1; ++i) lp.A(1 + i, sc++) = 1.0;
  for (int i = 0; i < dims.d3; ++i) lp.A(1 + dims.d1 + dims.d2 + i, sc++) = 1.0;
  if (include_k) lp.c.head(n) = upper ? (-st.k).eval() : st.k;

  LpSolution sol = solve_lp(lp);
  DualSolveResult res;
  res.multipliers = Multipliers::zero(dims);
  if (sol.status == LpSolution::Status::Infeasible) {
    res.status = SolveStatus::Unbounded;
    res.value = upper ? -kInf : kInf;
    return res;
  }
  if (sol.status != LpSolution::Status::Optimal) {
    res.status = SolveStatus::MaxIter;
    res.value = upper ? -kInf : kInf;
    return res;
  }
  res.status = SolveStatus::Converged;
  res.value = upper ? -sol.value : sol.value;
  Eigen::VectorXd lambda = -sol.row_duals.tail(d);
  res.multipliers = Multipliers::from_stacked(dims, 0.0, sol.row_duals[0],
                                              project_cone(std::move(lambda), dims));
  return res;
}

DualSolveResult solve_inner(const MomentModel& model, const Eigen::VectorXd& theta,
                            const EngineSource& source, const DivergenceKind& kind,
                            const ReducedForm& P, double delta, DualProgram program,
                            const SolverSettings& settings, const WarmStart* warm) {
  const Dims dims = model.dims();
  const ExpectationEngine engine = source.at(theta);
  const bool counterfactual = program != DualProgram::Feasibility;
  if (counterfactual && model.implicit_k())
    throw CapabilityError(
        "implicit-dependence counterfactual has no inner dual; use the criterion functions");

  const CellBasis* cells = nullptr;
  std::optional<DiscreteStage> stage;
  if (engine.kind() == ExpectationEngine::Kind::ClosedFormCells) {
    if (!kind.profiles_zeta())
      throw CapabilityError("closed-form cell engine only represents KL dual objectives");
    cells = engine.cells();
    if (cells->moment_dim() != dims.total())
      throw CapabilityError("cell basis dimension does not match the model");
  } else {
    stage.emplace(stage_discrete(model, theta, engine, counterfactual));
  }

  PackedLayout layout;
  layout.has_eta = counterfactual;
  layout.has_zeta = !kind.profiles_zeta();
  layout.d = dims.total();

  const double sk = program == DualProgram::Upper ? -1.0 : (program == DualProgram::Lower ? 1.0 : 0.0);
  Eigen::VectorXd pbar = P.stacked_padded(dims);
  InnerObjective obj(kind, layout, sk, counterfactual ? delta : 0.0, pbar,
                     stage ? &*stage : nullptr, cells, &theta);

  // Multistarts: lambda = 0; a least-squares linearization; the caller's warm
  // start from a neighboring solve.
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(pack(layout, 1.0, 0.0, Eigen::VectorXd::Zero(layout.d), settings));
  if (stage && settings.multistart_count >= 2) {
    const Eigen::VectorXd& p = stage->weights;
    Eigen::VectorXd gbar = stage->g.transpose() * p;
    Eigen::MatrixXd gc = stage->g.rowwise() - gbar.transpose();
    Eigen::MatrixXd cov =
        gc.transpose() * (p.asDiagonal() * gc) +
        1e-8 * Eigen::MatrixXd::Identity(layout.d, layout.d);
    double eta0 = 1.0;
    Eigen::VectorXd rhs = gbar - pbar;
    if (counterfactual) {
      double kbar = stage->k.dot(p);
      Eigen::VectorXd kc = stage->k.array() - kbar;
      double kvar = (p.array() * kc.array().square()).sum();
      eta0 = std::min(std::max(std::sqrt(std::max(kvar, 1e-12) / (2.0 * delta)), 1e-2), 1e3);
      Eigen::VectorXd cov_gk = gc.transpose() * (p.asDiagonal() * kc);
      rhs = eta0 * rhs - sk * cov_gk;
      rhs /= eta0;
    }
    Eigen::VectorXd lam = project_cone(cov.ldlt().solve(rhs), dims);
    double zeta0 = 0.0;
    if (layout.has_zeta) {
      Eigen::VectorXd w0 = -(stage->g * lam);
      if (counterfactual) w0 -= sk * stage->k;
      zeta0 = w0.dot(p);
    }
    starts.push_back(pack(layout, eta0, zeta0, lam, settings));
  } else if (cells && counterfactual && settings.multistart_count >= 2) {
    starts.push_back(pack(layout, 0.1, 0.0, Eigen::VectorXd::Zero(layout.d), settings));
  }
  if (warm && warm->previous && settings.multistart_count >= 1) {
    const Multipliers& mw = *warm->previous;
    if (mw.stacked().size() == layout.d)
      starts.push_back(pack(layout, counterfactual ? std::max(mw.eta, 1e-6) : 1.0, mw.zeta,
                            project_cone(mw.stacked(), dims), settings));
  }

  Eigen::VectorXd lb = lower_bounds_for(layout, dims, settings);
  LbfgsOptions lopts;
  lopts.grad_tol = settings.grad_tol;
  lopts.max_iter = settings.max_iter;

  LbfgsResult best;
  best.value = -kInf;
  bool any_diverged = false;
  int total_iters = 0;
  auto fn = [&obj](const Eigen::VectorXd& x, Eigen::VectorXd& g) { return obj(x, g); };
  for (const auto& s0 : starts) {
    LbfgsResult r = maximize_concave(fn, s0, lb, lopts);
    total_iters += r.iterations;
    if (r.diverged) {
      any_diverged = true;
      continue;
    }
    if (r.value > best.value || best.x.size() == 0) best = std::move(r);
  }

  DualSolveResult res;
  res.iterations = total_iters;
  if (any_diverged && (best.x.size() == 0 || best.value > 1e7)) {
    res.status = SolveStatus::Unbounded;
    res.value = program == DualProgram::Upper ? -kInf : kInf;
    res.multipliers = Multipliers::zero(dims);
    return res;
  }
  if (best.x.size() == 0) {
    res.status = SolveStatus::MaxIter;
    res.value = program == DualProgram::Upper ? -kInf : kInf;
    res.multipliers = Multipliers::zero(dims);
    return res;
  }

  double eta = layout.has_eta ? best.x[0] : 0.0;
  // eta at the floor: the supremum is approached as eta -> 0 and the smooth
  // program degenerates to the essential-inf/sup limit.
  if (layout.has_eta && best.x[0] <= settings.eta_floor * (1.0 + 1e-9)) {
    if (engine.kind() == ExpectationEngine::Kind::Grid) {
      return run_linf(model, theta, engine, P, true, program == DualProgram::Upper);
    }
    res.status = SolveStatus::Boundary;
  } else {
    res.status = best.converged ? SolveStatus::Converged : SolveStatus::MaxIter;
  }

  double zeta = layout.has_zeta ? best.x[layout.zeta_index()] : 0.0;
  Eigen::VectorXd lambda = best.x.tail(layout.d);
  if (kind.profiles_zeta()) {
    // Implied unit-mass multiplier for KL; also used in density recovery.
    if (cells) {
      double s = counterfactual ? -sk / eta : 0.0;
      Eigen::VectorXd t = counterfactual ? (-lambda / eta).eval() : (-lambda).eval();
      double lm = cells->log_mgf(theta, s, t);
      zeta = counterfactual ? eta * lm : lm;
    } else {
      Eigen::VectorXd u = -(stage->g * lambda);
      if (counterfactual) u -= sk * stage->k;
      double et = counterfactual ? eta : 1.0;
      Eigen::VectorXd a = u / et + stage->weights.array().max(1e-300).log().matrix();
      double amax = a.maxCoeff();
      zeta = et * (amax + std::log((a.array() - amax).exp().sum()));
    }
  }
  res.value = program == DualProgram::Upper ? -best.value : best.value;
  res.grad_norm = best.grad_norm;
  res.multipliers = Multipliers::from_stacked(dims, eta, zeta, lambda);
  return res;
}

}  // namespace

DualSolveResult delta_star(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, const SolverSettings& settings,
                           const WarmStart* warm) {
  return solve_inner(model, theta, engine, kind, P, 0.0, DualProgram::Feasibility, settings,
                     warm);
}

DualSolveResult lower_dual(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, double delta, const SolverSettings& settings,
                           const WarmStart* warm) {
  if (!(delta > 0.0)) throw ArgumentError("lower_dual: delta must be positive");
  return solve_inner(model, theta, engine, kind, P, delta, DualProgram::Lower, settings, warm);
}

DualSolveResult upper_dual(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, double delta, const SolverSettings& settings,
                           const WarmStart* warm) {
  if (!(delta > 0.0)) throw ArgumentError("upper_dual: delta must be positive");
  return solve_inner(model, theta, engine, kind, P, delta, DualProgram::Upper, settings, warm);
}

ObjectiveProbe dual_objective_probe(const MomentModel& model, const Eigen::VectorXd& theta,
                                    const EngineSource& source, const DivergenceKind& kind,
                                    const ReducedForm& P, double delta, DualProgram program,
                                    const Multipliers& at) {
  const Dims dims = model.dims();
  const ExpectationEngine engine = source.at(theta);
  const bool counterfactual = program != DualProgram::Feasibility;
  const CellBasis* cells = nullptr;
  std::optional<DiscreteStage> stage;
  if (engine.kind() == ExpectationEngine::Kind::ClosedFormCells) {
    if (!kind.profiles_zeta())
      throw CapabilityError("closed-form cell engine only represents KL dual objectives");
    cells = engine.cells();
  } else {
    stage.emplace(stage_discrete(model, theta, engine, counterfactual));
  }
  PackedLayout layout;
  layout.has_eta = counterfactual;
  layout.has_zeta = !kind.profiles_zeta();
  layout.d = dims.total();
  const double sk =
      program == DualProgram::Upper ? -1.0 : (program == DualProgram::Lower ? 1.0 : 0.0);
  InnerObjective obj(kind, layout, sk, counterfactual ? delta : 0.0, P.stacked_padded(dims),
                     stage ? &*stage : nullptr, cells, &theta);
  SolverSettings dummy;
  Eigen::VectorXd x = pack(layout, counterfactual ? at.eta : 1.0, at.zeta, at.stacked(), dummy);
  ObjectiveProbe probe;
  probe.has_eta = layout.has_eta;
  probe.has_zeta = layout.has_zeta;
  probe.gradient.resize(layout.size());
  probe.value = obj(x, probe.gradient);
  return probe;
}

std::function<double(Eigen::Ref<const Eigen::RowVectorXd>)> recover_density(
    const DivergenceKind& kind, const DualSolveResult& result, const MomentModel& model,
    const Eigen::VectorXd& theta, const EngineSource&, DualProgram program,
    const SolverSettings& settings) {
  if (result.status != SolveStatus::Converged)
    throw CapabilityError("recover_density: dual solve did not converge");
  const bool counterfactual = program != DualProgram::Feasibility;
  if (counterfactual && !(result.multipliers.eta > settings.eta_floor))
    throw CapabilityError(
        "recover_density: eta at the boundary; density is not identified from the L-inf limit");

  const double eta = counterfactual ? result.multipliers.eta : 1.0;
  const double zeta = result.multipliers.zeta;
  const double sk = program == DualProgram::Upper ? -1.0 : (program == DualProgram::Lower ? 1.0 : 0.0);
  const Eigen::VectorXd lambda = result.multipliers.stacked();
  const Dims dims = model.dims();
  DivergenceKind k2 = kind;
  return [&model, k2, eta, zeta, sk, lambda, dims,
          th = theta](Eigen::Ref<const Eigen::RowVectorXd> u) {
    Eigen::RowVectorXd g(dims.total());
    model.eval_g(u, th, g);
    double w = -zeta - g * lambda;
    if (sk != 0.0) w -= sk * model.eval_k(u, th);
    return phi_conjugate_derivative(k2, w / eta);
  };
}

DualSolveResult linf_lower(const MomentModel& model, const Eigen::VectorXd& theta,
                           const ExpectationEngine& grid, const ReducedForm& P,
                           bool include_k) {
  return run_linf(model, theta, grid, P, include_k, false);
}

DualSolveResult linf_upper(const MomentModel& model, const Eigen::VectorXd& theta,
                           const ExpectationEngine& grid, const ReducedForm& P,
                           bool include_k) {
  return run_linf(model, theta, grid, P, include_k, true);
}

}  // namespace robustcf
