#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <vector>

#include "robustcf/expectation.hpp"
#include "robustcf/moment_model.hpp"

namespace robustcf {

/// Plug-in local-sensitivity estimate and the GMM-style matrices it is built
/// from. s_hat and s_hat_influence are algebraically identical routes
/// (expanded quadratic form vs. the variance of the influence function).
struct SensitivityReport {
  double s_hat = 0.0;
  double s_hat_influence = 0.0;
  double kappa_hat = 0.0;
  Eigen::MatrixXd H;      // (d2+d4) x dtheta
  Eigen::RowVectorXd J;   // 1 x dtheta
  Eigen::MatrixXd V;      // (d2+d4) x (d2+d4)
  Eigen::RowVectorXd Q;   // 1 x (d2+d4)
  bool ridge_applied = false;
};

struct SensitivityOptions {
  double fd_step_rel = 1e-5;
  std::optional<Eigen::MatrixXd> H_override;
  std::optional<Eigen::RowVectorXd> J_override;
  /// Smooth closed-form maps theta -> E[h] / E[k] for the finite differences;
  /// when absent the engine expectations are differenced directly (only
  /// sensible for integrands smooth in theta).
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> smooth_moment_map;
  std::function<double(const Eigen::VectorXd&)> smooth_kappa_map;
};

/// Local sensitivity for an explicit-dependence counterfactual in an
/// equality-only model (d1 = d3 = 0), h = (g2 - P2; g4).
SensitivityReport sensitivity_explicit(const MomentModel& model,
                                       const Eigen::VectorXd& theta_hat,
                                       const ExpectationEngine& engine,
                                       const Eigen::VectorXd& P2,
                                       const SensitivityOptions& options = {});

/// Implicit-dependence case: s = 2 Q V Q' with Q = J (H'V^-1 H)^-1 H'V^-1.
SensitivityReport sensitivity_implicit(const MomentModel& model,
                                       const Eigen::VectorXd& theta_hat,
                                       const ExpectationEngine& engine,
                                       const Eigen::VectorXd& P2,
                                       const Eigen::RowVectorXd& k_gradient,
                                       const SensitivityOptions& options = {});

/// kappa_hat -/+ sqrt(delta * s_hat) per delta.
std::vector<std::pair<double, double>> extrapolated_bounds(double kappa_hat, double s_hat,
                                                           const std::vector<double>& deltas);

/// Builds the explicit-dependence report from externally supplied moments
/// (models with closed-form matrices). Ehk_centered = E[h (k - kappa)],
/// var_k = E[(k - kappa)^2].
SensitivityReport assemble_explicit_sensitivity(const Eigen::MatrixXd& H,
                                                const Eigen::RowVectorXd& J,
                                                const Eigen::MatrixXd& V,
                                                const Eigen::VectorXd& Ehk_centered,
                                                double var_k, double kappa);

}  // namespace robustcf
