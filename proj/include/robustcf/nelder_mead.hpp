#pragma once

#include <Eigen/Core>
#include <functional>

#include "robustcf/moment_model.hpp"

namespace robustcf {

/// Derivative-free simplex minimizer with box clamping. The objective may
/// return +inf / very large penalties for infeasible points; the simplex
/// simply never moves there.
struct NelderMeadOptions {
  int max_evals = 400;
  double f_tol = 1e-9;
  double x_tol = 1e-7;
};

struct NelderMeadResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int evals = 0;
};

NelderMeadResult nelder_mead_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
    const Eigen::VectorXd& initial_step, const ParameterBox& box,
    const NelderMeadOptions& opts);

}  // namespace robustcf
