#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace robustcf {

/// Row counts of the moment blocks (g1,...,g4): inequalities vs targeted
/// moments, equalities vs targeted moments, inequalities vs zero, equalities
/// vs zero.
struct Dims {
  int d1 = 0, d2 = 0, d3 = 0, d4 = 0;
  int total() const { return d1 + d2 + d3 + d4; }
};

/// Per-coordinate bounds on the parameter space Theta.
struct ParameterBox {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
  int dim() const { return static_cast<int>(lower.size()); }
  bool contains(const Eigen::VectorXd& theta, double tol = 0.0) const;
  Eigen::VectorXd clamp(const Eigen::VectorXd& theta) const;
};

/// Dual variables of the inner programs. Sign constraints: eta >= 0 and
/// lambda1, lambda3 >= 0 (the cone on the moment-inequality rows).
struct Multipliers {
  double eta = 0.0;
  double zeta = 0.0;
  Eigen::VectorXd lambda1, lambda2, lambda3, lambda4;

  static Multipliers zero(const Dims& dims);
  static Multipliers from_stacked(const Dims& dims, double eta, double zeta,
                                  const Eigen::VectorXd& stacked);

  /// (lambda1', lambda2', lambda3', lambda4')' in g order.
  Eigen::VectorXd stacked() const;
  /// First d1 + d2 entries; these multiply the targeted moments P.
  Eigen::VectorXd lambda12() const;
};

/// Targeted moments, partitioned conformably with (g1, g2).
struct ReducedForm {
  Eigen::VectorXd P1, P2;
  /// (P1', P2', 0_{d3}', 0_{d4}')' padded to the full g dimension.
  Eigen::VectorXd stacked_padded(const Dims& dims) const;
};

/// A structural model: moment functions g = (g1,...,g4), a counterfactual k
/// with explicit (function of U) or implicit (function of theta only)
/// dependence, and a compact parameter box. Evaluators must be pure; models
/// are immutable and safe to share across workers.
class MomentModel {
 public:
  virtual ~MomentModel() = default;

  virtual Dims dims() const = 0;
  virtual int u_dim() const = 0;
  virtual const ParameterBox& theta_box() const = 0;
  virtual std::string name() const { return "model"; }

  /// Writes the d = d1+..+d4 moment rows at (u, theta) in (g1,g2,g3,g4) order.
  virtual void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd& theta,
                      Eigen::Ref<Eigen::RowVectorXd> out) const = 0;

  virtual bool implicit_k() const { return false; }
  virtual double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u,
                        const Eigen::VectorXd& theta) const;
  virtual double implicit_k_value(const Eigen::VectorXd& theta) const;

  /// Batch forms; defaults loop the scalar evaluators, models may override.
  virtual Eigen::MatrixXd eval_g_batch(const Eigen::MatrixXd& points,
                                       const Eigen::VectorXd& theta) const;
  virtual Eigen::VectorXd eval_k_batch(const Eigen::MatrixXd& points,
                                       const Eigen::VectorXd& theta) const;
};

enum class ShapeRowKind { InequalityToZero, EqualityToZero };

/// A user shape restriction E^F[row(U)] <= 0 or = 0 (mean/scale
/// normalizations, quantile bands, smoothness caps, ...).
struct ShapeRow {
  ShapeRowKind kind;
  std::function<double(Eigen::Ref<const Eigen::RowVectorXd>)> eval;
  std::string label;
};

/// Returns a new model with the rows appended to g3 (inequalities) or g4
/// (equalities); the original model is untouched.
std::shared_ptr<const MomentModel> append_shape_restrictions(
    std::shared_ptr<const MomentModel> base, std::vector<ShapeRow> rows);

}  // namespace robustcf
