#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>

#include "robustcf/divergence.hpp"
#include "robustcf/expectation.hpp"
#include "robustcf/moment_model.hpp"

namespace robustcf {

enum class SolveStatus { Converged, MaxIter, Unbounded, Infeasible, Boundary };

std::string to_string(SolveStatus s);

struct DualSolveResult {
  double value = 0.0;
  Multipliers multipliers;
  double grad_norm = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::MaxIter;
};

struct SolverSettings {
  double grad_tol = 1e-8;
  int max_iter = 500;
  double eta_floor = 1e-10;
  double knife_tol = 1e-9;
  int multistart_count = 3;
};

/// Optional warm start carried across neighboring (theta, delta) solves.
struct WarmStart {
  std::optional<Multipliers> previous;
};

/// Minimal divergence of any distribution satisfying the moment conditions at
/// theta: sup over (zeta, lambda) of
///   -E[phi*(-zeta - lambda'g)] - zeta - lambda12'P,
/// with zeta profiled out analytically for KL. Unbounded value means theta is
/// infeasible for every neighborhood size.
DualSolveResult delta_star(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, const SolverSettings& settings,
                           const WarmStart* warm = nullptr);

/// Dual of the smallest counterfactual over the delta-neighborhood at theta:
///   sup over (eta>0, zeta, lambda) of
///   -E[(eta phi)*(-k - zeta - lambda'g)] - eta*delta - zeta - lambda12'P.
/// Always a lower bound on the primal by weak duality; equals it when
/// delta_star(theta) < delta under the Slater condition.
DualSolveResult lower_dual(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, double delta, const SolverSettings& settings,
                           const WarmStart* warm = nullptr);

/// Mirrored program for the largest counterfactual (Lagrangian infimum).
DualSolveResult upper_dual(const MomentModel& model, const Eigen::VectorXd& theta,
                           const EngineSource& engine, const DivergenceKind& kind,
                           const ReducedForm& P, double delta, const SolverSettings& settings,
                           const WarmStart* warm = nullptr);

enum class DualProgram { Feasibility, Lower, Upper };

/// Density-ratio evaluator m(u) recovered from a converged dual solve:
/// the derivative of the scaled conjugate at the optimal argument. Requires
/// eta above the floor for the counterfactual duals.
std::function<double(Eigen::Ref<const Eigen::RowVectorXd>)> recover_density(
    const DivergenceKind& kind, const DualSolveResult& result, const MomentModel& model,
    const Eigen::VectorXd& theta, const EngineSource& engine, DualProgram program,
    const SolverSettings& settings);

/// Sharp-bound linear programs on a discrete support (the delta = infinity
/// essential-inf/sup duals):
///   max over (lambda, t) of t - lambda12'P  s.t.  t <= k(u_i) + lambda'g(u_i).
/// With k = 0 this is the feasibility program (theta feasible iff value 0).
DualSolveResult linf_lower(const MomentModel& model, const Eigen::VectorXd& theta,
                           const ExpectationEngine& grid, const ReducedForm& P,
                           bool include_k = true);
DualSolveResult linf_upper(const MomentModel& model, const Eigen::VectorXd& theta,
                           const ExpectationEngine& grid, const ReducedForm& P,
                           bool include_k = true);

/// Value and analytic gradient of an inner dual objective at the given
/// multipliers, packed as [eta][zeta][lambda] (eta only for counterfactual
/// programs, zeta absent when the divergence profiles it). Exposed for
/// gradient verification and diagnostics.
struct ObjectiveProbe {
  double value = 0.0;
  Eigen::VectorXd gradient;
  bool has_eta = false;
  bool has_zeta = false;
};
ObjectiveProbe dual_objective_probe(const MomentModel& model, const Eigen::VectorXd& theta,
                                    const EngineSource& engine, const DivergenceKind& kind,
                                    const ReducedForm& P, double delta, DualProgram program,
                                    const Multipliers& at);

/// Shared precomputation for one (model, theta, engine): the counterfactual
/// values and moment rows on the discrete support.
struct DiscreteStage {
  Eigen::VectorXd k;       // empty when not needed
  Eigen::MatrixXd g;       // n x d
  Eigen::VectorXd weights; // n
};
DiscreteStage stage_discrete(const MomentModel& model, const Eigen::VectorXd& theta,
                             const ExpectationEngine& engine, bool need_k);

}  // namespace robustcf
