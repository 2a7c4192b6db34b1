#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "robustcf/dual_core.hpp"
#include "robustcf/errors.hpp"
#include "robustcf/rng.hpp"

using namespace robustcf;
using namespace robustcf::testing;

namespace {

const Eigen::VectorXd kTheta0 = Eigen::VectorXd::Zero(1);

ReducedForm empty_rf() { return ReducedForm{Eigen::VectorXd(0), Eigen::VectorXd(0)}; }

ReducedForm two_point_rf(double p) {
  ReducedForm rf;
  rf.P1.resize(0);
  rf.P2 = Eigen::VectorXd::Constant(1, p);
  return rf;
}

ReducedForm five_point_rf(double coverage, double mean) {
  ReducedForm rf;
  rf.P1 = Eigen::VectorXd::Constant(1, -coverage);
  rf.P2 = Eigen::VectorXd::Constant(1, mean);
  return rf;
}

}  // namespace

TEST_CASE("delta* with a benchmark-consistent row is zero at lambda = 0") {
  TwoPointModel model(true);
  ReducedForm rf = two_point_rf(0.5);
  SolverSettings settings;
  for (auto kind : {DivergenceKind::kl(), DivergenceKind::hybrid(), DivergenceKind::chi_squared()}) {
    DualSolveResult ds = delta_star(model, kTheta0, two_point_engine(), kind, rf, settings);
    REQUIRE(ds.status == SolveStatus::Converged);
    CHECK(std::abs(ds.value) < 1e-10);
    CHECK(ds.multipliers.stacked().lpNorm<Eigen::Infinity>() < 1e-4);
  }
}

TEST_CASE("two-point delta*: discrete KL projection in closed form") {
  TwoPointModel model(true);
  ReducedForm rf = two_point_rf(0.9);
  SolverSettings settings;
  DualSolveResult ds =
      delta_star(model, kTheta0, two_point_engine(), DivergenceKind::kl(), rf, settings);
  REQUIRE(ds.status == SolveStatus::Converged);
  const double expected = 0.9 * std::log(1.8) + 0.1 * std::log(0.2);
  CHECK(ds.value == doctest::Approx(expected).epsilon(1e-8));

  // The minimum-divergence density is pinned by the constraints: m = (0.2, 1.8).
  auto m = recover_density(DivergenceKind::kl(), ds, model, kTheta0, two_point_engine(),
                           DualProgram::Feasibility, settings);
  Eigen::RowVectorXd u0(1), u1(1);
  u0 << 0.0;
  u1 << 1.0;
  CHECK(m(u0) == doctest::Approx(0.2).epsilon(1e-4));
  CHECK(m(u1) == doctest::Approx(1.8).epsilon(1e-4));

  // Cross-check against the independent primal oracle.
  OracleResult oracle = primal_oracle(model, kTheta0, two_point_engine(), DivergenceKind::kl(),
                                      rf, expected + 1e-6, false);
  REQUIRE(oracle.feasible);
  CHECK(oracle.m[0] == doctest::Approx(0.2).epsilon(1e-3));
  CHECK(oracle.m[1] == doctest::Approx(1.8).epsilon(1e-3));
}

TEST_CASE("two-point lower dual equals the one-dimensional primal") {
  // No moment rows: minimize the mass q at u = 1 subject to
  // KL((q, 1-q) || (1/2, 1/2)) <= delta.
  TwoPointModel model(false);
  ReducedForm rf = empty_rf();
  SolverSettings settings;
  const double delta = 0.1;
  DualSolveResult lo =
      lower_dual(model, kTheta0, two_point_engine(), DivergenceKind::kl(), rf, delta, settings);
  REQUIRE(lo.status == SolveStatus::Converged);

  double qstar = 1.0;
  for (double q = 1e-9; q <= 1.0; q += 1e-6) {
    double kl = q * std::log(2 * q) + (1 - q) * std::log(2 * (1 - q));
    if (kl <= delta) {
      qstar = q;
      break;
    }
  }
  CHECK(qstar == doctest::Approx(0.2802).epsilon(2e-3));
  CHECK(lo.value == doctest::Approx(qstar).epsilon(1e-5));

  DualSolveResult hi =
      upper_dual(model, kTheta0, two_point_engine(), DivergenceKind::kl(), rf, delta, settings);
  REQUIRE(hi.status == SolveStatus::Converged);
  CHECK(hi.value == doctest::Approx(1.0 - qstar).epsilon(1e-5));
}

TEST_CASE("constant counterfactual is distribution free") {
  TwoPointModel model(true, 0.0);  // k identically zero
  ReducedForm rf = two_point_rf(0.6);
  SolverSettings settings;
  for (double delta : {0.05, 0.5}) {
    DualSolveResult lo = lower_dual(model, kTheta0, two_point_engine(),
                                    DivergenceKind::hybrid(), rf, delta, settings);
    DualSolveResult hi = upper_dual(model, kTheta0, two_point_engine(),
                                    DivergenceKind::hybrid(), rf, delta, settings);
    CHECK(std::abs(lo.value) < 1e-7);
    CHECK(std::abs(hi.value) < 1e-7);
  }
}

TEST_CASE("large delta pushes the dual to the essential infimum") {
  FivePointModel model;
  ReducedForm rf = five_point_rf(0.05, 0.0);
  SolverSettings settings;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  double kmin = std::sin(-2.0) - 1.0;  // k at the leftmost support point
  DualSolveResult lo = lower_dual(model, theta, five_point_engine(), DivergenceKind::kl(), rf,
                                  1e3, settings);
  CHECK(lo.value == doctest::Approx(kmin).epsilon(1e-3));
  DualSolveResult lp = linf_lower(model, theta, five_point_engine(), rf);
  REQUIRE(lp.status == SolveStatus::Converged);
  CHECK(lo.value <= lp.value + 1e-6);
}

TEST_CASE("sandwich at vanishing delta") {
  // Small-scale counterfactual so the width sqrt(delta * s) sits below 1e-4.
  TwoPointModel model(true, 0.05);
  ReducedForm rf = two_point_rf(0.5);
  SolverSettings settings;
  const double ek = 0.05 * 0.5;
  for (auto kind : {DivergenceKind::kl(), DivergenceKind::hybrid()}) {
    DualSolveResult lo =
        lower_dual(model, kTheta0, two_point_engine(), kind, rf, 1e-6, settings);
    DualSolveResult hi =
        upper_dual(model, kTheta0, two_point_engine(), kind, rf, 1e-6, settings);
    CHECK(std::abs(lo.value - ek) < 1e-4);
    CHECK(std::abs(hi.value - ek) < 1e-4);
    CHECK(lo.value <= ek + 1e-12);
    CHECK(hi.value >= ek - 1e-12);
  }
}

TEST_CASE("monotonicity of the bounds in delta under warm starts") {
  FivePointModel model;
  ReducedForm rf = five_point_rf(0.35, 0.1);
  SolverSettings settings;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  WarmStart warm_lo, warm_hi;
  double prev_lo = 1e300, prev_hi = -1e300;
  for (double delta : {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
    DualSolveResult lo = lower_dual(model, theta, five_point_engine(),
                                    DivergenceKind::hybrid(), rf, delta, settings, &warm_lo);
    DualSolveResult hi = upper_dual(model, theta, five_point_engine(),
                                    DivergenceKind::hybrid(), rf, delta, settings, &warm_hi);
    CHECK(lo.value <= prev_lo + 1e-9);
    CHECK(hi.value >= prev_hi - 1e-9);
    prev_lo = lo.value;
    prev_hi = hi.value;
    warm_lo.previous = lo.multipliers;
    warm_hi.previous = hi.multipliers;
  }
}

TEST_CASE("recovered density satisfies the moments and the budget") {
  FivePointModel model;
  ReducedForm rf = five_point_rf(0.35, 0.1);
  SolverSettings settings;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  ExpectationEngine eng = five_point_engine();
  const double delta = 0.08;
  for (auto kind : {DivergenceKind::kl(), DivergenceKind::hybrid(), DivergenceKind::chi_squared()}) {
    for (DualProgram prog : {DualProgram::Lower, DualProgram::Upper}) {
      DualSolveResult res =
          prog == DualProgram::Lower
              ? lower_dual(model, theta, eng, kind, rf, delta, settings)
              : upper_dual(model, theta, eng, kind, rf, delta, settings);
      REQUIRE(res.status == SolveStatus::Converged);
      auto m = recover_density(kind, res, model, theta, eng, prog, settings);
      Eigen::VectorXd mv(5);
      for (int i = 0; i < 5; ++i) {
        mv[i] = m(eng.points().row(i));
        CHECK(mv[i] >= 0.0);
      }
      double mass = (eng.weights().array() * mv.array()).sum();
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-6));
      Eigen::MatrixXd g = model.eval_g_batch(eng.points(), theta);
      Eigen::VectorXd pbar = rf.stacked_padded(model.dims());
      Eigen::VectorXd moments = g.transpose() * (eng.weights().asDiagonal() * mv);
      CHECK(moments[0] <= pbar[0] + 1e-5);
      CHECK(std::abs(moments[1] - pbar[1]) < 1e-5);
      CHECK(std::abs(moments[2] - pbar[2]) < 1e-5);
      if (res.multipliers.eta > 1e-6)
        CHECK(divergence_of(kind, mv, eng.weights()) <= delta + 1e-5);
    }
  }
}

TEST_CASE("density recovery refuses boundary and non-converged solves") {
  TwoPointModel model(false);
  SolverSettings settings;
  DualSolveResult fake;
  fake.status = SolveStatus::Boundary;
  CHECK_THROWS_AS(recover_density(DivergenceKind::kl(), fake, model, kTheta0,
                                  two_point_engine(), DualProgram::Lower, settings),
                  CapabilityError);
  fake.status = SolveStatus::Converged;
  fake.multipliers = Multipliers::zero(model.dims());
  fake.multipliers.eta = 1e-12;  // at the floor
  CHECK_THROWS_AS(recover_density(DivergenceKind::kl(), fake, model, kTheta0,
                                  two_point_engine(), DualProgram::Lower, settings),
                  CapabilityError);
}

TEST_CASE("linf programs on the grid") {
  FivePointModel model;
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(1);
  ExpectationEngine eng = five_point_engine();

  SUBCASE("no rows: extreme grid values of k") {
    TwoPointModel plain(false);
    ReducedForm none = empty_rf();
    DualSolveResult lo = linf_lower(plain, kTheta0, two_point_engine(), none);
    DualSolveResult hi = linf_upper(plain, kTheta0, two_point_engine(), none);
    CHECK(lo.value == doctest::Approx(0.0));
    CHECK(hi.value == doctest::Approx(1.0));
  }

  SUBCASE("feasibility program is zero at a feasible theta") {
    ReducedForm rf = five_point_rf(0.35, 0.1);
    DualSolveResult f = linf_lower(model, theta, eng, rf, false);
    REQUIRE(f.status == SolveStatus::Converged);
    CHECK(std::abs(f.value) < 1e-10);
  }

  SUBCASE("unachievable target reports unbounded") {
    ReducedForm rf = five_point_rf(0.35, 3.0);  // E[u] = 3 impossible on [-2,2]
    DualSolveResult f = linf_lower(model, theta, eng, rf, false);
    CHECK(f.status == SolveStatus::Unbounded);
    CHECK(f.value == std::numeric_limits<double>::infinity());
    DualSolveResult hi = linf_upper(model, theta, eng, rf);
    CHECK(hi.status == SolveStatus::Unbounded);
    CHECK(hi.value == -std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("analytic gradients match central finite differences") {
  FivePointModel five;
  TwoPointModel two(true);
  const DivergenceKind kinds[] = {DivergenceKind::kl(), DivergenceKind::chi_squared(),
                                  DivergenceKind::cressie_read(1.5), DivergenceKind::hybrid()};
  int checked = 0;
  for (int rep = 0; rep < 20; ++rep) {
    for (int which = 0; which < 2; ++which) {
      const MomentModel& model = which == 0 ? static_cast<MomentModel&>(five) : two;
      ExpectationEngine eng = which == 0 ? five_point_engine() : two_point_engine();
      ReducedForm rf = which == 0 ? five_point_rf(0.3, 0.05) : two_point_rf(0.55);
      const Dims dims = model.dims();
      for (const auto& kind : kinds) {
        for (DualProgram prog :
             {DualProgram::Feasibility, DualProgram::Lower, DualProgram::Upper}) {
          std::uint64_t ctr = 1000 * rep + 100 * which + checked;
          Eigen::VectorXd lam(dims.total());
          for (int j = 0; j < dims.total(); ++j)
            lam[j] = 2.0 * uniform01(42, ctr * 31 + j) - 1.0;
          for (int j = 0; j < dims.d1; ++j) lam[j] = std::abs(lam[j]);
          Multipliers at =
              Multipliers::from_stacked(dims, 0.5 + uniform01(42, ctr * 31 + 50),
                                        uniform01(42, ctr * 31 + 51) - 0.5, lam);
          ObjectiveProbe probe =
              dual_objective_probe(model, kTheta0, eng, kind, rf, 0.2, prog, at);
          if (!std::isfinite(probe.value)) continue;
          const double h = 1e-6;
          for (int j = 0; j < probe.gradient.size(); ++j) {
            auto perturb = [&](double eps) {
              Multipliers p = at;
              Eigen::VectorXd lam2 = p.stacked();
              int off = (probe.has_eta ? 1 : 0) + (probe.has_zeta ? 1 : 0);
              if (probe.has_eta && j == 0)
                p.eta += eps;
              else if (probe.has_zeta && j == (probe.has_eta ? 1 : 0))
                p.zeta += eps;
              else
                lam2[j - off] += eps;
              p = Multipliers::from_stacked(dims, p.eta, p.zeta, lam2);
              return dual_objective_probe(model, kTheta0, eng, kind, rf, 0.2, prog, p).value;
            };
            double fd = (perturb(h) - perturb(-h)) / (2 * h);
            double scale = std::max({1.0, std::abs(fd), std::abs(probe.gradient[j])});
            CHECK(std::abs(fd - probe.gradient[j]) / scale < 1e-5);
          }
          ++checked;
        }
      }
    }
  }
  CHECK(checked > 100);
}

TEST_CASE("weak and strong duality against the primal oracle, randomized") {
  SolverSettings settings;
  const DivergenceKind kinds[] = {DivergenceKind::kl(), DivergenceKind::chi_squared(),
                                  DivergenceKind::cressie_read(1.5), DivergenceKind::hybrid()};
  int strong_checked = 0;
  for (int cs = 0; cs < 100; ++cs) {
    const DivergenceKind& kind = kinds[cs % 4];
    const bool use_five = cs % 2 == 0;
    TwoPointModel two(true);
    FivePointModel five;
    const MomentModel& model = use_five ? static_cast<MomentModel&>(five) : two;
    ExpectationEngine eng = use_five ? five_point_engine() : two_point_engine();
    Eigen::VectorXd theta(1);
    theta << (use_five ? uniform01(7, cs) - 0.5 : uniform01(7, cs));
    double delta = std::exp(std::log(0.01) + uniform01(8, cs) * std::log(200.0));
    ReducedForm rf = use_five ? five_point_rf(0.05 + 0.8 * uniform01(9, cs),
                                              -1.2 + 2.4 * uniform01(10, cs))
                              : two_point_rf(0.05 + 0.9 * uniform01(9, cs));

    // Randomized start passed through the warm-start channel.
    const Dims dims = model.dims();
    Eigen::VectorXd lam(dims.total());
    for (int j = 0; j < dims.total(); ++j) lam[j] = 4.0 * uniform01(11, cs * 31 + j) - 2.0;
    for (int j = 0; j < dims.d1; ++j) lam[j] = std::abs(lam[j]);
    WarmStart warm;
    warm.previous = Multipliers::from_stacked(dims, std::exp(uniform01(12, cs) * 2.0 - 1.0),
                                              uniform01(13, cs) - 0.5, lam);

    DualSolveResult ds = delta_star(model, theta, eng, kind, rf, settings, &warm);
    OracleResult olo = primal_oracle(model, theta, eng, kind, rf, delta, false);
    OracleResult ohi = primal_oracle(model, theta, eng, kind, rf, delta, true);
    CHECK(olo.feasible == ohi.feasible);

    if (!olo.feasible) {
      CHECK(ds.value > delta - 1e-6);
      continue;
    }
    DualSolveResult lo = lower_dual(model, theta, eng, kind, rf, delta, settings, &warm);
    DualSolveResult hi = upper_dual(model, theta, eng, kind, rf, delta, settings, &warm);

    // Weak duality, unconditionally.
    CHECK(lo.value <= olo.value + 1e-9);
    CHECK(hi.value >= ohi.value - 1e-9);
    CHECK(olo.value <= ohi.value + 1e-9);

    // Strong duality away from the knife edge.
    if (ds.status == SolveStatus::Converged && ds.value < delta - 1e-6) {
      CHECK(std::abs(lo.value - olo.value) <= 1e-4);
      CHECK(std::abs(hi.value - ohi.value) <= 1e-4);
      ++strong_checked;
    }
  }
  CHECK(strong_checked > 40);
}

TEST_CASE("eta floor escape on grids reaches the linf program") {
  TwoPointModel model(false);
  ReducedForm rf = empty_rf();
  SolverSettings settings;
  DualSolveResult lo = lower_dual(model, kTheta0, two_point_engine(), DivergenceKind::kl(),
                                  rf, 1e8, settings);
  REQUIRE(lo.status == SolveStatus::Converged);
  CHECK(lo.value == doctest::Approx(0.0).epsilon(1e-9));
}
