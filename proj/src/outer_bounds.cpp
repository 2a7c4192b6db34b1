#include "robustcf/outer_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>

#include "robustcf/errors.hpp"
#include "robustcf/lowdisc.hpp"
#include "robustcf/nelder_mead.hpp"

namespace robustcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPenaltyBase = 1e8;
}

std::string to_string(CriterionCase c) {
  switch (c) {
    case CriterionCase::StrictInterior: return "interior";
    case CriterionCase::KnifeEdge: return "knife-edge";
    case CriterionCase::Infeasible: return "infeasible";
  }
  return "?";
}

namespace {

// E[m k] under the delta* minimum-divergence distribution (the unique feasible
// distribution in the knife-edge case).
double knife_edge_value(const MomentModel& model, const Eigen::VectorXd& theta,
                        const ExpectationEngine& engine, const DivergenceKind& kind,
                        const DualSolveResult& feas) {
  const Eigen::VectorXd lambda = feas.multipliers.stacked();
  if (engine.kind() == ExpectationEngine::Kind::ClosedFormCells) {
    double ds = 0.0;
    engine.cells()->log_mgf(theta, 0.0, -lambda, &ds);
    return ds;
  }
  DiscreteStage st = stage_discrete(model, theta, engine, true);
  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < st.weights.size(); ++i) {
    double m = phi_conjugate_derivative(kind, -feas.multipliers.zeta - st.g.row(i).dot(lambda));
    num += st.weights[i] * m * st.k[i];
    den += st.weights[i] * m;
  }
  return num / den;
}

CriterionValue criterion_impl(bool lower, const MomentModel& model,
                              const Eigen::VectorXd& theta, const EngineSource& engine,
                              const DivergenceKind& kind, const ReducedForm& P, double delta,
                              const SolverSettings& settings, CriterionWarm* warm) {
  CriterionValue out;
  WarmStart* wf = warm ? &warm->feasibility : nullptr;
  out.feasibility = delta_star(model, theta, engine, kind, P, settings, wf);
  if (warm && out.feasibility.status == SolveStatus::Converged)
    warm->feasibility.previous = out.feasibility.multipliers;

  const double ds = out.feasibility.value;
  const bool unbounded = out.feasibility.status == SolveStatus::Unbounded;

  if (model.implicit_k()) {
    if (!unbounded && ds <= delta) {
      out.kase = CriterionCase::StrictInterior;
      out.value = model.implicit_k_value(theta);
    } else {
      out.kase = CriterionCase::Infeasible;
      out.value = lower ? kInf : -kInf;
    }
    return out;
  }

  if (unbounded || ds > delta + settings.knife_tol) {
    out.kase = CriterionCase::Infeasible;
    out.value = lower ? kInf : -kInf;
    return out;
  }
  if (ds < delta - settings.knife_tol) {
    out.kase = CriterionCase::StrictInterior;
    WarmStart* wc = warm ? &warm->counterfactual : nullptr;
    out.inner = lower ? lower_dual(model, theta, engine, kind, P, delta, settings, wc)
                      : upper_dual(model, theta, engine, kind, P, delta, settings, wc);
    if (warm && (out.inner.status == SolveStatus::Converged ||
                 out.inner.status == SolveStatus::Boundary))
      warm->counterfactual.previous = out.inner.multipliers;
    out.value = out.inner.value;
    return out;
  }
  // Knife edge: the minimum-divergence distribution is the only feasible one.
  out.kase = CriterionCase::KnifeEdge;
  out.value = knife_edge_value(model, theta, engine.at(theta), kind, out.feasibility);
  out.inner = out.feasibility;
  return out;
}

}  // namespace

CriterionValue criterion_lower(const MomentModel& model, const Eigen::VectorXd& theta,
                               const EngineSource& engine, const DivergenceKind& kind,
                               const ReducedForm& P, double delta,
                               const SolverSettings& settings, CriterionWarm* warm) {
  return criterion_impl(true, model, theta, engine, kind, P, delta, settings, warm);
}

CriterionValue criterion_upper(const MomentModel& model, const Eigen::VectorXd& theta,
                               const EngineSource& engine, const DivergenceKind& kind,
                               const ReducedForm& P, double delta,
                               const SolverSettings& settings, CriterionWarm* warm) {
  return criterion_impl(false, model, theta, engine, kind, P, delta, settings, warm);
}

namespace {

struct SearchOutcome {
  double objective = kInf;  // minimized: lower criterion or negated upper
  Eigen::VectorXd theta;
  CriterionValue crit;
  int evals = 0;
};

// Signed objective used by the simplex walk. Infeasible points get a penalty
// shaped by the feasibility gap so the walk is pulled back toward Theta_delta.
double walk_objective(bool lower, const CriterionValue& cv, double delta) {
  if (cv.kase == CriterionCase::Infeasible) {
    double gap = std::isfinite(cv.feasibility.value) ? cv.feasibility.value - delta : 1e6;
    return kPenaltyBase * (1.0 + std::min(gap, 1e6));
  }
  return lower ? cv.value : -cv.value;
}

SearchOutcome local_search(bool lower, const MomentModel& model, const EngineSource& engine,
                           const DivergenceKind& kind, const ReducedForm& P, double delta,
                           const SearchSettings& search, const Eigen::VectorXd& start,
                           const CriterionWarm& warm_seed, double step_scale) {
  const ParameterBox& box = model.theta_box();
  CriterionWarm warm = warm_seed;
  CriterionValue last_crit;
  auto objective = [&](const Eigen::VectorXd& th) {
    CriterionValue cv = criterion_impl(lower, model, th, engine, kind, P, delta,
                                       search.solver, &warm);
    last_crit = cv;
    return walk_objective(lower, cv, delta);
  };

  Eigen::VectorXd step =
      step_scale * (box.upper - box.lower).cwiseMax(1e-12);
  NelderMeadOptions nm;
  nm.max_evals = search.max_evals;
  nm.f_tol = search.f_tol;
  nm.x_tol = search.x_tol;
  NelderMeadResult r = nelder_mead_minimize(objective, start, step, box, nm);
  int total_evals = r.evals;
  for (int round = 0; round < search.refine_rounds; ++round) {
    Eigen::VectorXd fine_step = step / std::pow(5.0, round + 1);
    NelderMeadResult r2 = nelder_mead_minimize(objective, r.x, fine_step, box, nm);
    total_evals += r2.evals;
    if (r2.value <= r.value) r = std::move(r2);
  }

  SearchOutcome out;
  out.theta = box.clamp(r.x);
  // Re-solve at the reported point so the outcome carries its exact criterion.
  CriterionWarm final_warm = warm;
  out.crit = criterion_impl(lower, model, out.theta, engine, kind, P, delta, search.solver,
                            &final_warm);
  out.objective = walk_objective(lower, out.crit, delta);
  out.evals = total_evals + 1;
  return out;
}

ExtremeResult run_one_side(bool lower, const MomentModel& model, const EngineSource& engine,
                           const DivergenceKind& kind, const ReducedForm& P, double delta,
                           const SearchSettings& search, const std::optional<Eigen::VectorXd>& warm_theta,
                           const CriterionWarm& warm_seed) {
  const ParameterBox& box = model.theta_box();
  std::vector<Eigen::VectorXd> starts =
      low_discrepancy_points(box, search.multistarts, search.seed);
  for (const auto& s : search.extra_starts) starts.push_back(box.clamp(s));
  if (warm_theta) starts.push_back(box.clamp(*warm_theta));

  ExtremeResult res;
  res.total_starts = static_cast<int>(starts.size());

  // Rank starts by their criterion value, discarding infeasible ones.
  struct Ranked {
    double objective;
    Eigen::VectorXd theta;
    CriterionValue crit;
  };
  std::vector<Ranked> feasible;
  int evals = 0;
  for (const auto& s : starts) {
    CriterionWarm warm = warm_seed;
    CriterionValue cv =
        criterion_impl(lower, model, s, engine, kind, P, delta, search.solver, &warm);
    ++evals;
    if (cv.kase == CriterionCase::Infeasible) continue;
    feasible.push_back({walk_objective(lower, cv, delta), s, cv});
  }
  res.feasible_starts = static_cast<int>(feasible.size());
  if (feasible.empty()) {
    res.kase = CriterionCase::Infeasible;
    res.value = lower ? kInf : -kInf;
    res.criterion_evals = evals;
    res.theta = Eigen::VectorXd::Zero(box.dim());
    return res;
  }
  std::sort(feasible.begin(), feasible.end(), [](const Ranked& a, const Ranked& b) {
    return a.objective < b.objective;
  });
  int n_local = std::min<int>(search.max_local, static_cast<int>(feasible.size()));

  double step_scale = search.step_frac;
  if (search.delta_scaled_steps)
    step_scale = std::clamp(2.0 * std::sqrt(delta), 1e-3, search.step_frac);

  std::vector<SearchOutcome> outcomes(n_local);
  auto run_idx = [&](int i) {
    outcomes[i] = local_search(lower, model, engine, kind, P, delta, search,
                               feasible[i].theta, warm_seed, step_scale);
  };
  if (search.workers > 1 && n_local > 1) {
    std::vector<std::future<void>> futs;
    futs.reserve(n_local);
    for (int i = 0; i < n_local; ++i)
      futs.push_back(std::async(std::launch::async, run_idx, i));
    for (auto& f : futs) f.get();
  } else {
    for (int i = 0; i < n_local; ++i) run_idx(i);
  }

  int best = 0;
  for (int i = 1; i < n_local; ++i)
    if (outcomes[i].objective < outcomes[best].objective) best = i;
  std::vector<double> seen;
  for (const auto& o : outcomes) {
    if (o.objective >= kPenaltyBase) continue;
    bool dup = false;
    for (double v : seen)
      if (std::abs(v - o.objective) <= 1e-3 * std::max(1.0, std::abs(v))) dup = true;
    if (!dup) seen.push_back(o.objective);
  }

  const SearchOutcome& win = outcomes[best];
  for (const auto& o : outcomes) evals += o.evals;
  res.value = win.crit.kase == CriterionCase::Infeasible ? (lower ? kInf : -kInf)
                                                         : win.crit.value;
  res.kase = win.crit.kase;
  res.theta = win.theta;
  res.inner = win.crit.kase == CriterionCase::StrictInterior ? win.crit.inner
                                                             : win.crit.feasibility;
  res.feasibility = win.crit.feasibility;
  res.distinct_optima = static_cast<int>(seen.size());
  res.criterion_evals = evals;
  return res;
}

}  // namespace

std::pair<ExtremeResult, ExtremeResult> extreme_counterfactuals(
    const MomentModel& model, const EngineSource& engine, const DivergenceKind& kind,
    const ReducedForm& P, double delta, const SearchSettings& search, const OuterWarm* warm) {
  ExtremeResult lo = run_one_side(true, model, engine, kind, P, delta, search,
                                  warm ? warm->theta_lower : std::nullopt,
                                  warm ? warm->warm_lower : CriterionWarm{});
  ExtremeResult hi = run_one_side(false, model, engine, kind, P, delta, search,
                                  warm ? warm->theta_upper : std::nullopt,
                                  warm ? warm->warm_upper : CriterionWarm{});
  return {lo, hi};
}

BoundsCurve bounds_curve(const MomentModel& model, const EngineSource& engine,
                         const DivergenceKind& kind, const ReducedForm& P,
                         const std::vector<double>& delta_grid,
                         const SearchSettings& search) {
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    if (delta_grid[i] <= 0.0 || (i > 0 && delta_grid[i] <= delta_grid[i - 1]))
      throw ArgumentError("bounds_curve: delta grid must be positive and strictly increasing");
  }
  BoundsCurve curve;
  OuterWarm warm;
  bool have_warm = false;
  for (size_t i = 0; i < delta_grid.size(); ++i) {
    SearchSettings row_search = search;
    if (have_warm) row_search.multistarts = std::max(2, search.multistarts / 4);
    auto [lo, hi] = extreme_counterfactuals(model, engine, kind, P, delta_grid[i], row_search,
                                            have_warm ? &warm : nullptr);
    BoundsRow row;
    row.delta = delta_grid[i];
    row.kappa_lower = lo.value;
    row.kappa_upper = hi.value;
    row.theta_lower = lo.theta;
    row.theta_upper = hi.theta;
    row.case_lower = lo.kase;
    row.case_upper = hi.kase;
    row.inner_iters_lower = lo.inner.iterations;
    row.inner_iters_upper = hi.inner.iterations;
    row.lambda12_lower = lo.inner.multipliers.lambda12();
    row.lambda12_upper = hi.inner.multipliers.lambda12();

    if (!curve.rows.empty()) {
      const BoundsRow& prev = curve.rows.back();
      if (row.kappa_lower > prev.kappa_lower) {
        row.kappa_lower = prev.kappa_lower;
        row.envelope_lower = true;
      }
      if (row.kappa_upper < prev.kappa_upper) {
        row.kappa_upper = prev.kappa_upper;
        row.envelope_upper = true;
      }
    }
    if (lo.kase != CriterionCase::Infeasible) {
      warm.theta_lower = lo.theta;
      warm.warm_lower.feasibility.previous = lo.feasibility.multipliers;
      if (lo.kase == CriterionCase::StrictInterior)
        warm.warm_lower.counterfactual.previous = lo.inner.multipliers;
      have_warm = true;
    }
    if (hi.kase != CriterionCase::Infeasible) {
      warm.theta_upper = hi.theta;
      warm.warm_upper.feasibility.previous = hi.feasibility.multipliers;
      if (hi.kase == CriterionCase::StrictInterior)
        warm.warm_upper.counterfactual.previous = hi.inner.multipliers;
      have_warm = true;
    }
    curve.rows.push_back(std::move(row));
  }
  return curve;
}

Eigen::Matrix2d unique_multiplier_variance(const Eigen::VectorXd& lower_lambda12,
                                           const Eigen::VectorXd& upper_lambda12,
                                           const Eigen::MatrixXd& Sigma) {
  const Eigen::Index d = lower_lambda12.size();
  if (upper_lambda12.size() != d || Sigma.rows() != d || Sigma.cols() != d)
    throw ArgumentError("unique_multiplier_variance: dimension mismatch");
  if (!Sigma.isApprox(Sigma.transpose(), 1e-9))
    throw ArgumentError("unique_multiplier_variance: Sigma must be symmetric");
  Eigen::MatrixXd B(2, d);
  B.row(0) = upper_lambda12.transpose();
  B.row(1) = -lower_lambda12.transpose();
  return B * Sigma * B.transpose();
}

Eigen::MatrixXd multinomial_sigma(const Eigen::VectorXd& cell_probs, long n_obs) {
  if (n_obs <= 0) throw ArgumentError("multinomial_sigma: n_obs must be positive");
  Eigen::MatrixXd out =
      Eigen::MatrixXd(cell_probs.asDiagonal()) - cell_probs * cell_probs.transpose();
  return out / static_cast<double>(n_obs);
}

}  // namespace robustcf
