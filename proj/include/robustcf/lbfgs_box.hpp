#pragma once

#include <Eigen/Core>
#include <functional>

namespace robustcf {

/// Maximizes a smooth concave function subject to per-coordinate lower bounds
/// (use -inf for free coordinates) by limited-memory quasi-Newton steps
/// projected onto the box.
struct LbfgsOptions {
  double grad_tol = 1e-8;    // on the projected gradient, sup norm
  int max_iter = 500;
  int memory = 10;
  double value_guard = 1e8;  // |f| beyond this is treated as divergence
};

struct LbfgsResult {
  Eigen::VectorXd x;
  double value = 0.0;
  double grad_norm = 0.0;  // projected gradient, sup norm
  int iterations = 0;
  bool converged = false;
  bool diverged = false;   // objective exceeded the value guard
};

/// f(x, grad) returns the objective and fills the ascent gradient.
LbfgsResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
    Eigen::VectorXd x0, const Eigen::VectorXd& lower_bounds, const LbfgsOptions& opts);

}  // namespace robustcf
