#pragma once

#include <Eigen/Core>
#include <memory>

#include "robustcf/expectation.hpp"
#include "robustcf/local_sens.hpp"
#include "robustcf/moment_model.hpp"

namespace robustcf {

/// Complete-information two-firm entry game with a market-size regressor
/// z in {0,1,2} (coefficient normalized to 1) and a counterfactual tax tau on
/// monopolists. The benchmark distribution is N(0, I2).
struct GameConfig {
  double tau = 1.5;
  int z_focus = 1;
  /// Observed conditional probabilities, rows z = 0,1,2 and columns
  /// (0,0), (1,1), (1,0), (0,1).
  Eigen::Matrix<double, 3, 4> probs;

  static GameConfig defaults();
};

/// theta = (beta1, beta2, Delta); Delta > 0. Moment blocks d = (6, 6, 0, 2):
/// six monopoly-region inequality rows, six no-entry/duopoly equality rows,
/// and the two mean-zero shape rows from the location normalization.
std::shared_ptr<const MomentModel> build_game_model(const GameConfig& config);

/// Targeted moments with the negation convention of the inequality direction
/// (both g rows and P stack negated probabilities).
ReducedForm game_reduced_form(const GameConfig& config);

/// Analytic cell machinery: log E[exp(s k + t'g)] via per-player threshold
/// cells and the truncated-normal mgf on the mean rows.
std::shared_ptr<const CellBasis> game_cell_basis(const GameConfig& config);
ExpectationEngine game_closed_form_engine(const GameConfig& config);

/// eta * log E[exp((k + lambda'g)/eta)] (k dropped when include_k is false,
/// which is the feasibility-program variant).
double game_closed_form_log_mgf(const GameConfig& config, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lambda_stacked, double eta,
                                bool include_k = true);

/// Theta-adaptive Gauss-Legendre product grid whose cells align with the
/// current parameter's indicator thresholds; exact quadrature for the game's
/// piecewise-smooth dual integrands.
EngineSource game_quadrature_engine(const GameConfig& config, int nodes_per_cell = 20,
                                    double half_width = 8.0);

/// Least-squares inversion of the six equality rows (no-entry and duopoly
/// probabilities across z) under the bivariate normal benchmark.
Eigen::Vector3d estimate_game_theta(const GameConfig& config);

/// E^{F*}[k] at theta for the focus regressor value: the model-implied
/// monopoly probability under the tax.
double game_counterfactual_mean(const GameConfig& config, const Eigen::Vector3d& theta);

/// Model-implied pre-tax monopoly probability 1 - p00 - p11 at z_focus.
double game_pretax_monopoly_prob(const GameConfig& config, const Eigen::Vector3d& theta);

/// Model-implied equality-row probabilities (p00, p11 per z), used by the
/// estimator and tests.
Eigen::VectorXd game_equality_probs(const Eigen::Vector3d& theta);

struct GameLocalMatrices {
  Eigen::MatrixXd H;       // 8 x 3
  Eigen::RowVectorXd J;    // 1 x 3
  Eigen::MatrixXd V;       // 8 x 8
  Eigen::VectorXd Ehk;     // E[h k], uncentered
  Eigen::VectorXd Eh;      // E[h] (zero when the model matches P exactly)
  double kappa = 0.0;      // E[k]
};

/// Closed-form local-sensitivity matrices; valid only where every inequality
/// row is slack (throws otherwise).
GameLocalMatrices game_local_matrices(const GameConfig& config, const Eigen::Vector3d& theta);

/// Sensitivity report assembled from the analytic matrices.
SensitivityReport game_sensitivity(const GameConfig& config, const Eigen::Vector3d& theta);

}  // namespace robustcf
