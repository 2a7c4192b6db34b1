#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "robustcf/dual_core.hpp"

namespace robustcf {

enum class CriterionCase { StrictInterior, KnifeEdge, Infeasible };

std::string to_string(CriterionCase c);

/// Sample criterion value at one theta: the dual bound in the strict-interior
/// case, the unique-distribution expectation at the knife edge, +-inf when no
/// distribution in the neighborhood satisfies the moments.
struct CriterionValue {
  double value = 0.0;
  CriterionCase kase = CriterionCase::Infeasible;
  DualSolveResult inner;        // counterfactual dual (strict-interior case)
  DualSolveResult feasibility;  // the delta* solve
};

/// Warm-start bundle threaded through neighboring criterion evaluations.
struct CriterionWarm {
  WarmStart feasibility;
  WarmStart counterfactual;
};

CriterionValue criterion_lower(const MomentModel& model, const Eigen::VectorXd& theta,
                               const EngineSource& engine, const DivergenceKind& kind,
                               const ReducedForm& P, double delta,
                               const SolverSettings& settings,
                               CriterionWarm* warm = nullptr);
CriterionValue criterion_upper(const MomentModel& model, const Eigen::VectorXd& theta,
                               const EngineSource& engine, const DivergenceKind& kind,
                               const ReducedForm& P, double delta,
                               const SolverSettings& settings,
                               CriterionWarm* warm = nullptr);

struct SearchSettings {
  int multistarts = 16;         // fresh low-discrepancy starts
  int max_local = 6;            // local searches launched from the best starts
  int max_evals = 400;          // criterion evaluations per local search
  double f_tol = 1e-9;
  double x_tol = 1e-7;
  double step_frac = 0.25;      // initial simplex size as a fraction of the box
  bool delta_scaled_steps = true;
  int refine_rounds = 1;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<Eigen::VectorXd> extra_starts;  // e.g. the point estimate
  SolverSettings solver;
};

struct ExtremeResult {
  double value = 0.0;
  Eigen::VectorXd theta;
  CriterionCase kase = CriterionCase::Infeasible;
  DualSolveResult inner;
  DualSolveResult feasibility;
  int feasible_starts = 0;
  int total_starts = 0;
  int distinct_optima = 0;
  int criterion_evals = 0;
};

/// Warm information carried between delta-grid rows.
struct OuterWarm {
  std::optional<Eigen::VectorXd> theta_lower, theta_upper;
  CriterionWarm warm_lower, warm_upper;
};

/// Minimizes the lower criterion and maximizes the upper criterion over the
/// parameter box by multistart simplex search, discarding infeasible starts.
std::pair<ExtremeResult, ExtremeResult> extreme_counterfactuals(
    const MomentModel& model, const EngineSource& engine, const DivergenceKind& kind,
    const ReducedForm& P, double delta, const SearchSettings& search,
    const OuterWarm* warm = nullptr);

struct BoundsRow {
  double delta = 0.0;
  double kappa_lower = 0.0, kappa_upper = 0.0;
  Eigen::VectorXd theta_lower, theta_upper;
  CriterionCase case_lower = CriterionCase::Infeasible;
  CriterionCase case_upper = CriterionCase::Infeasible;
  int inner_iters_lower = 0, inner_iters_upper = 0;
  bool envelope_lower = false, envelope_upper = false;  // monotone enforcement fired
  Eigen::VectorXd lambda12_lower, lambda12_upper;
};

struct BoundsCurve {
  std::vector<BoundsRow> rows;
};

/// Sweeps an increasing delta grid, warm-starting each row from the previous
/// one and enforcing (and recording) the monotone envelope.
BoundsCurve bounds_curve(const MomentModel& model, const EngineSource& engine,
                         const DivergenceKind& kind, const ReducedForm& P,
                         const std::vector<double>& delta_grid, const SearchSettings& search);

/// Gaussian limit covariance for the plug-in bound estimators when the
/// optimal multipliers are unique: [ub'; -lb'] Sigma [ub, -lb].
Eigen::Matrix2d unique_multiplier_variance(const Eigen::VectorXd& lower_lambda12,
                                           const Eigen::VectorXd& upper_lambda12,
                                           const Eigen::MatrixXd& Sigma);

/// Multinomial covariance (diag(p) - p p')/n of cell-frequency estimators.
Eigen::MatrixXd multinomial_sigma(const Eigen::VectorXd& cell_probs, long n_obs);

}  // namespace robustcf
