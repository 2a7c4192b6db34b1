#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robustcf/simplex_lp.hpp"

using namespace robustcf;

TEST_CASE("basic standard-form solve") {
  // min -x1 - 2 x2 s.t. x1 + x2 + s = 4, x1 + 3 x2 + t = 6, x >= 0.
  LpStandard lp;
  lp.A.resize(2, 4);
  lp.A << 1, 1, 1, 0,
          1, 3, 0, 1;
  lp.b.resize(2);
  lp.b << 4, 6;
  lp.c.resize(4);
  lp.c << -1, -2, 0, 0;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpSolution::Status::Optimal);
  CHECK(sol.value == doctest::Approx(-5.0));  // x = (3, 1)
  CHECK(sol.x[0] == doctest::Approx(3.0));
  CHECK(sol.x[1] == doctest::Approx(1.0));
}

TEST_CASE("infeasible program detected") {
  // x1 = -1 with x1 >= 0 is infeasible.
  LpStandard lp;
  lp.A.resize(1, 1);
  lp.A << 1;
  lp.b.resize(1);
  lp.b << -1;
  lp.c.resize(1);
  lp.c << 1;
  CHECK(solve_lp(lp).status == LpSolution::Status::Infeasible);
}

TEST_CASE("duals satisfy complementary slackness on a transport-style program") {
  // min c'x s.t. 1'x = 1, a'x = 0.3, x >= 0: a two-row mass program.
  LpStandard lp;
  const int n = 5;
  lp.A.resize(2, n);
  lp.c.resize(n);
  Eigen::VectorXd a(n);
  a << 0.0, 0.25, 0.5, 0.75, 1.0;
  for (int i = 0; i < n; ++i) {
    lp.A(0, i) = 1.0;
    lp.A(1, i) = a[i];
    lp.c[i] = (a[i] - 0.4) * (a[i] - 0.4);
  }
  lp.b.resize(2);
  lp.b << 1.0, 0.3;
  LpSolution sol = solve_lp(lp);
  REQUIRE(sol.status == LpSolution::Status::Optimal);
  CHECK(std::abs(lp.A.row(0).dot(sol.x) - 1.0) < 1e-9);
  CHECK(std::abs(lp.A.row(1).dot(sol.x) - 0.3) < 1e-9);
  // Dual feasibility: reduced costs nonnegative at the optimum.
  for (int i = 0; i < n; ++i)
    CHECK(lp.c[i] - sol.row_duals.dot(lp.A.col(i)) >= -1e-8);
  // Strong duality.
  CHECK(sol.row_duals.dot(lp.b) == doctest::Approx(sol.value).epsilon(1e-9));
}
