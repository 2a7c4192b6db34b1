#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "robustcf/run_config.hpp"

namespace robustcf {

/// Everything a CLI run needs for one counterfactual: the model, its engine,
/// targeted moments, divergence, the point estimate and benchmark value, and
/// a lazy sensitivity hook.
struct ModelBundle {
  std::string model_name;
  std::string focus_label;
  std::shared_ptr<const MomentModel> model;
  EngineSource engine{ExpectationEngine::grid(Eigen::MatrixXd::Zero(1, 1),
                                              Eigen::VectorXd::Ones(1))};
  DivergenceKind kind = DivergenceKind::kl();
  ReducedForm P;
  Eigen::VectorXd theta_hat;
  double kappa_hat = 0.0;
  double pre_line = 0.0;
  std::vector<double> delta_grid;
  std::function<SensitivityReport()> sensitivity;
};

std::vector<std::string> registered_models();

/// One bundle per counterfactual requested by the config (the DDC produces
/// one per focus state).
std::vector<ModelBundle> build_bundles(const RunConfig& config);

}  // namespace robustcf
