#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "robustcf/divergence.hpp"
#include "robustcf/errors.hpp"
#include "robustcf/expectation.hpp"

using namespace robustcf;

namespace {

// Brute-force conjugate sup_{t>=0}(ty - phi(t)) on a fine t grid; the
// independent oracle for the derived chi^2 / Cressie-Read forms.
double conjugate_by_search(const DivergenceKind& kind, double y) {
  double best = -1e300;
  for (double t = 0.0; t <= 10.0 + 1e-12; t += 0.001) {
    double v = t * y - phi(kind, t);
    if (v > best) best = v;
  }
  return best;
}

const DivergenceKind kAll[] = {DivergenceKind::kl(), DivergenceKind::chi_squared(),
                               DivergenceKind::cressie_read(1.5), DivergenceKind::hybrid()};

}  // namespace

TEST_CASE("phi at the reference points") {
  for (const auto& kind : kAll) {
    CHECK(phi(kind, 1.0) == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(phi(kind, -0.5) == std::numeric_limits<double>::infinity());
    CHECK(std::isfinite(phi(kind, 0.0)));
  }
  CHECK(phi(DivergenceKind::kl(), 0.0) == doctest::Approx(1.0));
  CHECK(phi(DivergenceKind::chi_squared(), 0.0) == doctest::Approx(0.5));
  CHECK(phi(DivergenceKind::hybrid(), 0.0) == doctest::Approx(1.0));
  // Continuity at the hybrid knee: both branches equal 1 at x = e.
  CHECK(phi(DivergenceKind::hybrid(), M_E) == doctest::Approx(1.0).epsilon(1e-12));
  // chi^2 is Cressie-Read with p = 2.
  for (double x : {0.0, 0.3, 1.7, 4.2})
    CHECK(phi(DivergenceKind::chi_squared(), x) ==
          doctest::Approx(phi(DivergenceKind::cressie_read(2.0), x)).epsilon(1e-14));
}

TEST_CASE("conjugates match the displayed forms and the search oracle") {
  CHECK(phi_conjugate(DivergenceKind::kl(), 0.0) == doctest::Approx(0.0));
  CHECK(phi_conjugate(DivergenceKind::hybrid(), 1.0) == doctest::Approx(M_E - 1.0));
  CHECK(phi_conjugate(DivergenceKind::chi_squared(), -2.0) == doctest::Approx(-0.5));
  // The chi^2 conjugate is derived, not quoted; verify it against brute force.
  for (double y : {-3.0, -1.5, -1.0, -0.4, 0.0, 0.8, 2.0})
    CHECK(phi_conjugate(DivergenceKind::chi_squared(), y) ==
          doctest::Approx(conjugate_by_search(DivergenceKind::chi_squared(), y)).epsilon(5e-6));
  for (double y : {-3.0, -1.0, 0.0, 0.5, 1.4})
    CHECK(phi_conjugate(DivergenceKind::cressie_read(1.5), y) ==
          doctest::Approx(conjugate_by_search(DivergenceKind::cressie_read(1.5), y))
              .epsilon(5e-6));
}

TEST_CASE("scaled conjugate and its derivative") {
  CHECK(scaled_conjugate(DivergenceKind::kl(), 2.0, 0.0) == doctest::Approx(0.0));
  CHECK(scaled_conjugate(DivergenceKind::kl(), 0.0, -3.0) == 0.0);
  CHECK(scaled_conjugate(DivergenceKind::kl(), 0.0, 3.0) ==
        std::numeric_limits<double>::infinity());
  CHECK(scaled_conjugate(DivergenceKind::hybrid(), 1.0, 2.0) ==
        doctest::Approx(0.5 * M_E * 5.0 - 1.0).epsilon(1e-12));

  CHECK(scaled_conjugate_derivative(DivergenceKind::kl(), 1.0, 0.0) == doctest::Approx(1.0));
  CHECK(scaled_conjugate_derivative(DivergenceKind::hybrid(), 1.0, 2.0) ==
        doctest::Approx(2.0 * M_E).epsilon(1e-12));
  CHECK(scaled_conjugate_derivative(DivergenceKind::chi_squared(), 1.0, -2.0) == 0.0);

  // Support-function limit as eta drops to zero.
  for (const auto& kind : kAll)
    CHECK(std::abs(scaled_conjugate(kind, 1e-8, -0.5)) < 1e-6);
}

TEST_CASE("Fenchel-Young inequality with equality at the recovering point") {
  for (const auto& kind : kAll) {
    for (int i = 0; i < 50; ++i) {
      double x = 0.02 + 4.0 * i / 49.0;
      for (int j = 0; j < 50; ++j) {
        double y = -4.0 + 8.0 * j / 49.0;
        double lhs = x * y;
        double rhs = phi(kind, x) + phi_conjugate(kind, y);
        CHECK(lhs <= rhs + 1e-10);
        double xstar = scaled_conjugate_derivative(kind, 1.0, y);
        double gap = phi(kind, xstar) + phi_conjugate(kind, y) - xstar * y;
        CHECK(std::abs(gap) < 1e-10);
      }
    }
  }
}

TEST_CASE("conjugate convexity and monotonicity by finite differences") {
  const double h = 1e-3;
  for (const auto& kind : kAll) {
    for (double y = -10.0; y <= 10.0; y += 0.25) {
      double second =
          phi_conjugate(kind, y + h) - 2 * phi_conjugate(kind, y) + phi_conjugate(kind, y - h);
      CHECK(second >= -1e-9);
      CHECK(phi_conjugate(kind, y + h) >= phi_conjugate(kind, y) - 1e-12);
    }
  }
}

TEST_CASE("hybrid smoothness at the branch points") {
  const double h = 1e-7;
  auto kind = DivergenceKind::hybrid();
  // phi at x = e: matching values and one-sided derivatives.
  double left = (phi(kind, M_E) - phi(kind, M_E - h)) / h;
  double right = (phi(kind, M_E + h) - phi(kind, M_E)) / h;
  CHECK(std::abs(left - right) < 1e-6);
  // Psi at y = 1.
  CHECK(std::abs(phi_conjugate(kind, 1.0 - 1e-12) - phi_conjugate(kind, 1.0 + 1e-12)) < 1e-11);
  double dl = (phi_conjugate(kind, 1.0) - phi_conjugate(kind, 1.0 - h)) / h;
  double dr = (phi_conjugate(kind, 1.0 + h) - phi_conjugate(kind, 1.0)) / h;
  CHECK(std::abs(dl - dr) < 1e-6);
}

TEST_CASE("phi''(1) = 1 for KL and hybrid") {
  const double h = 1e-4;
  for (const auto& kind : {DivergenceKind::kl(), DivergenceKind::hybrid()}) {
    double second = (phi(kind, 1 + h) - 2 * phi(kind, 1.0) + phi(kind, 1 - h)) / (h * h);
    CHECK(second == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("divergence of a discrete reweighting") {
  Eigen::VectorXd w(2), m(2);
  w << 0.5, 0.5;
  m << 1.0, 1.0;
  for (const auto& kind : kAll) CHECK(divergence_of(kind, m, w) == doctest::Approx(0.0));

  m << 2.0, 0.0;
  double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);  // discrete KL cross-check
  // Direct formula: (phi(2) + phi(0))/2 for the two-point reweighting with
  // masses (0.9, 0.1)... the ratio values here are (2, 0) against (1/2, 1/2).
  CHECK(divergence_of(DivergenceKind::kl(), m, w) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));
  Eigen::VectorXd m2(2);
  m2 << 1.8, 0.2;
  CHECK(divergence_of(DivergenceKind::kl(), m2, w) == doctest::Approx(expected).epsilon(1e-12));

  Eigen::VectorXd bad(3);
  bad.setOnes();
  CHECK_THROWS_AS(divergence_of(DivergenceKind::kl(), bad, w), ArgumentError);
}

TEST_CASE("grid KL between shifted normals recovers the quadratic rule") {
  ExpectationEngine grid = make_gaussian_grid(200, 8.0, 2);
  for (Eigen::Vector2d mu : {Eigen::Vector2d(1.0, 0.0), Eigen::Vector2d(0.5, 0.5)}) {
    const Eigen::MatrixXd& pts = grid.points();
    Eigen::VectorXd m(pts.rows());
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      double du = mu.dot(pts.row(i));
      m[i] = std::exp(du - 0.5 * mu.squaredNorm());
    }
    double kl = divergence_of(DivergenceKind::kl(), m, grid.weights());
    CHECK(std::abs(kl - 0.5 * mu.squaredNorm()) < 1e-3);
  }
}

TEST_CASE("moment compatibility diagnostics") {
  // Bounded indicator samples pass under KL.
  Eigen::VectorXd bounded(5000);
  for (int i = 0; i < bounded.size(); ++i) bounded[i] = i % 3 == 0 ? 1.0 : 0.0;
  CHECK(check_moment_compatibility(DivergenceKind::kl(), bounded).pass);

  // Norms of type-I extreme value vectors: too thick for KL, fine for hybrid.
  DrawSet ds = make_gumbel_draws(20000, 2, 99);
  Eigen::VectorXd norms(ds.draws.rows());
  for (Eigen::Index i = 0; i < norms.size(); ++i) norms[i] = ds.draws.row(i).norm();
  CHECK_FALSE(check_moment_compatibility(DivergenceKind::kl(), norms).pass);
  CHECK(check_moment_compatibility(DivergenceKind::hybrid(), norms).pass);
}
