#pragma once

#include <Eigen/Core>

namespace robustcf {

/// Dense two-phase revised simplex for standard-form programs
///   minimize c'x  subject to  A x = b,  x >= 0,
/// sized for few rows and many columns (grid-mass programs). Row duals are
/// returned so support-function multipliers can be read off.
struct LpStandard {
  Eigen::MatrixXd A;
  Eigen::VectorXd b;
  Eigen::VectorXd c;
};

struct LpSolution {
  enum class Status { Optimal, Infeasible, Unbounded, Stalled };
  Status status = Status::Stalled;
  double value = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd row_duals;
};

LpSolution solve_lp(const LpStandard& lp);

}  // namespace robustcf
