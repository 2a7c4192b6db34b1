#include "robustcf/expectation.hpp"

#include <cmath>

#include "robustcf/errors.hpp"
#include "robustcf/rng.hpp"
#include "robustcf/stats.hpp"

namespace robustcf {

DrawSet make_gumbel_draws(Eigen::Index n, int dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw ArgumentError("make_gumbel_draws: n, dim must be >= 1");
  DrawSet ds;
  ds.distribution = "gumbel";
  ds.seed = seed;
  ds.draws.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j)
      ds.draws(i, j) = gumbel_draw(seed, static_cast<std::uint64_t>(i) * dim + j);
  return ds;
}

DrawSet make_gaussian_draws(Eigen::Index n, int dim, std::uint64_t seed) {
  if (n < 1 || dim < 1) throw ArgumentError("make_gaussian_draws: n, dim must be >= 1");
  DrawSet ds;
  ds.distribution = "gaussian";
  ds.seed = seed;
  ds.draws.resize(n, dim);
  for (Eigen::Index i = 0; i < n; ++i)
    for (int j = 0; j < dim; ++j)
      ds.draws(i, j) = gaussian_draw(seed, static_cast<std::uint64_t>(i) * dim + j);
  return ds;
}

ExpectationEngine ExpectationEngine::monte_carlo(DrawSet draws) {
  ExpectationEngine e;
  e.kind_ = Kind::MonteCarlo;
  Eigen::Index n = draws.draws.rows();
  if (n < 1) throw ArgumentError("monte_carlo engine: empty draw set");
  e.points_ = std::make_shared<Eigen::MatrixXd>(std::move(draws.draws));
  e.weights_ = std::make_shared<Eigen::VectorXd>(Eigen::VectorXd::Constant(n, 1.0 / n));
  return e;
}

ExpectationEngine ExpectationEngine::grid(Eigen::MatrixXd points, Eigen::VectorXd weights) {
  if (points.rows() != weights.size())
    throw ArgumentError("grid engine: points/weights size mismatch");
  if ((weights.array() < 0.0).any()) throw ArgumentError("grid engine: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ArgumentError("grid engine: weights must sum to 1 within 1e-12");
  ExpectationEngine e;
  e.kind_ = Kind::Grid;
  e.points_ = std::make_shared<Eigen::MatrixXd>(std::move(points));
  e.weights_ = std::make_shared<Eigen::VectorXd>(std::move(weights));
  return e;
}

ExpectationEngine ExpectationEngine::closed_form(std::shared_ptr<const CellBasis> cells) {
  if (!cells) throw ArgumentError("closed_form engine: null cell basis");
  ExpectationEngine e;
  e.kind_ = Kind::ClosedFormCells;
  e.cells_ = std::move(cells);
  return e;
}

int ExpectationEngine::dim() const {
  if (kind_ == Kind::ClosedFormCells) return 0;
  return static_cast<int>(points_->cols());
}

Eigen::Index ExpectationEngine::size() const {
  if (kind_ == Kind::ClosedFormCells) return 0;
  return points_->rows();
}

const Eigen::MatrixXd& ExpectationEngine::points() const {
  if (!points_) throw CapabilityError("engine has no discrete support");
  return *points_;
}

const Eigen::VectorXd& ExpectationEngine::weights() const {
  if (!weights_) throw CapabilityError("engine has no discrete support");
  return *weights_;
}

double ExpectationEngine::expect(
    const std::function<double(Eigen::Ref<const Eigen::RowVectorXd>)>& f) const {
  if (kind_ == Kind::ClosedFormCells)
    throw CapabilityError(
        "closed-form engine cannot integrate arbitrary functions; "
        "only its model's registered moments");
  const Eigen::MatrixXd& pts = *points_;
  const Eigen::VectorXd& w = *weights_;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) acc += w[i] * f(pts.row(i));
  return acc;
}

ExpectationEngine make_gaussian_grid(int per_axis, double half_width, int dim) {
  if (per_axis < 2) throw ArgumentError("make_gaussian_grid: per_axis must be >= 2");
  if (dim < 1 || dim > 3) throw ArgumentError("make_gaussian_grid: dim in {1,2,3}");
  const double h = 2.0 * half_width / per_axis;
  Eigen::VectorXd axis(per_axis), axis_w(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    axis[i] = -half_width + (i + 0.5) * h;
    axis_w[i] = norm_pdf(axis[i]);
  }
  Eigen::Index total = 1;
  for (int d = 0; d < dim; ++d) total *= per_axis;
  Eigen::MatrixXd pts(total, dim);
  Eigen::VectorXd w(total);
  for (Eigen::Index idx = 0; idx < total; ++idx) {
    Eigen::Index rem = idx;
    double wt = 1.0;
    for (int d = 0; d < dim; ++d) {
      int i = static_cast<int>(rem % per_axis);
      rem /= per_axis;
      pts(idx, d) = axis[i];
      wt *= axis_w[i];
    }
    w[idx] = wt;
  }
  w /= w.sum();
  return ExpectationEngine::grid(std::move(pts), std::move(w));
}

ExpectationEngine make_density_grid_1d(const std::function<double(double)>& pdf, double lo,
                                       double hi, int n) {
  if (n < 2 || !(hi > lo)) throw ArgumentError("make_density_grid_1d: bad range or n");
  const double h = (hi - lo) / n;
  Eigen::MatrixXd pts(n, 1);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) {
    pts(i, 0) = lo + (i + 0.5) * h;
    w[i] = pdf(pts(i, 0));
  }
  w /= w.sum();
  return ExpectationEngine::grid(std::move(pts), std::move(w));
}

}  // namespace robustcf
