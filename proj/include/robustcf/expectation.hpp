#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace robustcf {

/// Immutable matrix of draws from the benchmark distribution; rows are draws,
/// columns are components of U. Shared read-only across parallel solves.
struct DrawSet {
  Eigen::MatrixXd draws;
  std::string distribution;
  std::uint64_t seed = 0;
};

DrawSet make_gumbel_draws(Eigen::Index n, int dim, std::uint64_t seed);
DrawSet make_gaussian_draws(Eigen::Index n, int dim, std::uint64_t seed);

/// Model-supplied analytic expectation machinery behind a ClosedFormCells
/// engine. log_mgf evaluates log E^{F*}[exp(s k(U,theta) + t'g(U,theta))]
/// with optional gradients in (s, t).
class CellBasis {
 public:
  virtual ~CellBasis() = default;
  virtual int moment_dim() const = 0;
  virtual double log_mgf(const Eigen::VectorXd& theta, double s, const Eigen::VectorXd& t,
                         double* ds = nullptr, Eigen::VectorXd* dt = nullptr) const = 0;
  virtual double expect_k(const Eigen::VectorXd& theta) const = 0;
  virtual Eigen::VectorXd expect_g(const Eigen::VectorXd& theta) const = 0;
};

/// Computes E^{F*}[f(U)]: a weighted grid, a fixed Monte Carlo draw set, or
/// model-supplied closed-form cells. Immutable after construction.
class ExpectationEngine {
 public:
  enum class Kind { ClosedFormCells, MonteCarlo, Grid };

  static ExpectationEngine monte_carlo(DrawSet draws);
  static ExpectationEngine grid(Eigen::MatrixXd points, Eigen::VectorXd weights);
  static ExpectationEngine closed_form(std::shared_ptr<const CellBasis> cells);

  Kind kind() const { return kind_; }
  bool discrete() const { return kind_ != Kind::ClosedFormCells; }
  int dim() const;
  Eigen::Index size() const;

  /// Support points (Grid/MonteCarlo only).
  const Eigen::MatrixXd& points() const;
  /// Nonnegative weights summing to 1 (MonteCarlo: uniform 1/n).
  const Eigen::VectorXd& weights() const;
  const CellBasis* cells() const { return cells_.get(); }

  /// E[f(U)]. Throws CapabilityError for closed-form engines, which only
  /// represent the moment integrands registered by their model.
  double expect(const std::function<double(Eigen::Ref<const Eigen::RowVectorXd>)>& f) const;

 private:
  ExpectationEngine() = default;
  Kind kind_ = Kind::Grid;
  std::shared_ptr<const Eigen::MatrixXd> points_;
  std::shared_ptr<const Eigen::VectorXd> weights_;
  std::shared_ptr<const CellBasis> cells_;
};

/// Tensor-product grid of per-axis midpoints on [-half_width, half_width] with
/// weights proportional to the product of standard normal densities,
/// renormalized to sum to 1.
ExpectationEngine make_gaussian_grid(int per_axis, double half_width, int dim = 2);

/// 1-D grid of midpoints on [lo, hi] weighted by an arbitrary density.
ExpectationEngine make_density_grid_1d(const std::function<double(double)>& pdf, double lo,
                                       double hi, int n);

/// An engine that may depend on theta (e.g. quadrature cells aligned with the
/// model's current thresholds). A fixed engine is the common case.
class EngineSource {
 public:
  /* implicit */ EngineSource(ExpectationEngine fixed)
      : fixed_(std::move(fixed)), theta_dependent_(false) {}
  explicit EngineSource(std::function<ExpectationEngine(const Eigen::VectorXd&)> provider)
      : provider_(std::move(provider)), theta_dependent_(true) {}

  ExpectationEngine at(const Eigen::VectorXd& theta) const {
    return theta_dependent_ ? provider_(theta) : *fixed_;
  }
  bool theta_dependent() const { return theta_dependent_; }

 private:
  std::optional<ExpectationEngine> fixed_;
  std::function<ExpectationEngine(const Eigen::VectorXd&)> provider_;
  bool theta_dependent_;
};

}  // namespace robustcf
