#pragma once

#include <Eigen/Core>
#include <memory>

#include "robustcf/expectation.hpp"
#include "robustcf/local_sens.hpp"
#include "robustcf/moment_model.hpp"

namespace robustcf {

/// Infinite-horizon monopolist entry/exit model. Observed state
/// x = (s, a_prev) with market level s in {H, M, L}; actions {stay out,
/// participate}; payoff shocks are a 2-vector of i.i.d. type-I extreme value
/// draws under the benchmark. States are ordered
/// (H,0), (M,0), (L,0), (H,1), (M,1), (L,1).
struct DdcConfig {
  double beta = 0.95;
  double scrap = 10.0;
  Eigen::Vector3d demand_intercepts{20.0, 17.0, 12.0};
  Eigen::Matrix3d q;          // market-state transitions, rows sum to 1
  Eigen::Matrix<double, 6, 1> ccps;  // estimated P(1|x)
  double subsidy = 0.9;       // entry-cost reduction in the counterfactual
  int focus_state = 0;        // state index whose counterfactual CCP is k

  static DdcConfig defaults();
};

/// theta_pi = (c_d, c_e, c_f, c_m); v and v_tilde are the pre- and
/// post-intervention ex-ante value vectors stacked into theta for the
/// neighborhood analysis.
struct DdcTheta {
  Eigen::Vector4d theta_pi;
  Eigen::Matrix<double, 6, 1> v;
  Eigen::Matrix<double, 6, 1> v_tilde;

  Eigen::VectorXd stacked() const;
  static DdcTheta from_stacked(const Eigen::VectorXd& theta);
};

enum class Regime { Pre, Post };

/// Per-state flow payoffs pi(a, x); Post uses the subsidized entry cost.
Eigen::Matrix<double, 6, 1> ddc_flow_payoffs(const DdcConfig& config,
                                             const Eigen::Vector4d& theta_pi, int action,
                                             Regime regime);

/// Transition matrix M_a on the six states implied by q and the deterministic
/// a_prev update.
Eigen::Matrix<double, 6, 6> ddc_transition(const DdcConfig& config, int action);

/// Closed-form logit value iteration v = gammaE + log(e^{pi0+beta M0 v} +
/// e^{pi1+beta M1 v}), to sup-norm 1e-12.
Eigen::Matrix<double, 6, 1> solve_logit_value(const DdcConfig& config,
                                              const Eigen::Vector4d& theta_pi, Regime regime);

/// CCPs implied by a value vector: logistic in the choice-specific difference.
Eigen::Matrix<double, 6, 1> ddc_logit_ccps(const DdcConfig& config,
                                           const Eigen::Vector4d& theta_pi, Regime regime,
                                           const Eigen::Matrix<double, 6, 1>& v);

/// Empirical-measure value fixed point: v = E_engine[max(...)] iterated to
/// sup-norm 1e-12 under an arbitrary discrete engine.
Eigen::Matrix<double, 6, 1> solve_value_fixed_point_under_engine(
    const DdcConfig& config, const Eigen::Vector4d& theta_pi, Regime regime,
    const ExpectationEngine& engine);

/// Inverts estimated CCPs into payoff parameters by least squares over the
/// closed-form logit map, then attaches both value vectors.
DdcTheta estimate_ddc_theta(const Eigen::Matrix<double, 6, 1>& ccps, const DdcConfig& config);

/// Counterfactual CCPs at theta (the logit CCPs at v_tilde).
Eigen::Matrix<double, 6, 1> counterfactual_ccps(const DdcConfig& config, const DdcTheta& theta);

/// Moment model with d = (0, 6, 0, 12): six pre-intervention CCP indicator
/// rows and twelve value fixed-point rows; k is the counterfactual entry
/// indicator in the focus state. The box spans +-25% of the benchmark
/// solution per coordinate.
std::shared_ptr<const MomentModel> build_ddc_model(const DdcConfig& config,
                                                   const DdcTheta& anchor);

ReducedForm ddc_reduced_form(const Eigen::Matrix<double, 6, 1>& ccps);

struct DdcLocalMatrices {
  Eigen::MatrixXd H;     // 18 x 16, analytic logistic blocks
  Eigen::RowVectorXd J;  // 1 x 16
  Eigen::MatrixXd V;     // 18 x 18, engine moments
  Eigen::VectorXd Ehk;   // E[h (k - kappa)], engine moments
  double kappa = 0.0;
  double var_k = 0.0;
};

DdcLocalMatrices ddc_local_matrices(const DdcConfig& config, const DdcTheta& theta,
                                    const ExpectationEngine& engine);

SensitivityReport ddc_sensitivity(const DdcConfig& config, const DdcTheta& theta,
                                  const ExpectationEngine& engine);

/// Theta-adaptive quadrature engine for the DDC integrands: all rows depend
/// on u only through (u0, w = u1 - u0), so points are placed on Gauss-Legendre
/// cells of the (u0, w) plane split at the indicator thresholds.
EngineSource ddc_quadrature_engine(const DdcConfig& config, int w_nodes = 32, int u0_nodes = 48);

}  // namespace robustcf
