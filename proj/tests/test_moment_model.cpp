#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "robustcf/entry_game.hpp"
#include "robustcf/moment_model.hpp"

using namespace robustcf;

namespace {

// Toy model with no rows: a blank slate for shape-restriction tests.
class BlankModel : public MomentModel {
 public:
  BlankModel() {
    box_.lower = Eigen::VectorXd::Constant(1, -1.0);
    box_.upper = Eigen::VectorXd::Constant(1, 1.0);
  }
  Dims dims() const override { return {0, 0, 0, 0}; }
  int u_dim() const override { return 2; }
  const ParameterBox& theta_box() const override { return box_; }
  void eval_g(Eigen::Ref<const Eigen::RowVectorXd>, const Eigen::VectorXd&,
              Eigen::Ref<Eigen::RowVectorXd>) const override {}

 private:
  ParameterBox box_;
};

}  // namespace

TEST_CASE("multiplier stacking round trip") {
  Dims dims{2, 3, 1, 2};
  Multipliers m = Multipliers::zero(dims);
  CHECK(m.stacked().isZero());
  CHECK(m.lambda12().isZero());
  m.lambda1 << 1.0, 2.0;
  m.lambda2 << 3.0, 4.0, 5.0;
  m.lambda3 << 6.0;
  m.lambda4 << 7.0, 8.0;
  m.eta = 0.5;
  m.zeta = -0.25;
  Eigen::VectorXd s = m.stacked();
  CHECK(s.size() == 8);
  Multipliers back = Multipliers::from_stacked(dims, m.eta, m.zeta, s);
  CHECK(back.lambda1 == m.lambda1);
  CHECK(back.lambda2 == m.lambda2);
  CHECK(back.lambda3 == m.lambda3);
  CHECK(back.lambda4 == m.lambda4);
  CHECK(back.eta == m.eta);
  CHECK(back.zeta == m.zeta);
}

TEST_CASE("lambda12 is just lambda2 when there are no inequalities") {
  Dims dims{0, 2, 0, 1};
  Multipliers m = Multipliers::zero(dims);
  m.lambda2 << 1.5, -2.5;
  m.lambda4 << 9.0;
  CHECK(m.lambda12() == m.lambda2);
}

TEST_CASE("game dimensions give stack length 14 and lambda12 length 12") {
  auto model = build_game_model(GameConfig::defaults());
  Dims d = model->dims();
  CHECK(d.d1 == 6);
  CHECK(d.d2 == 6);
  CHECK(d.d3 == 0);
  CHECK(d.d4 == 2);
  Multipliers m = Multipliers::zero(d);
  CHECK(m.stacked().size() == 14);
  CHECK(m.lambda12().size() == 12);
}

TEST_CASE("appending shape rows grows d4 and preserves existing rows") {
  auto blank = std::make_shared<BlankModel>();
  auto with_means = append_shape_restrictions(
      blank, {{ShapeRowKind::EqualityToZero,
               [](Eigen::Ref<const Eigen::RowVectorXd> u) { return u[0]; }, "mean-u1"},
              {ShapeRowKind::EqualityToZero,
               [](Eigen::Ref<const Eigen::RowVectorXd> u) { return u[1]; }, "mean-u2"}});
  CHECK(with_means->dims().d4 == 2);
  CHECK(with_means->dims().total() == 2);

  // No rows: identity.
  auto same = append_shape_restrictions(blank, {});
  CHECK(same.get() == blank.get());

  // Inter-quantile rows land in d4 as equalities; an inequality row lands in d3.
  double a = 1.2, b = 0.76;
  auto iq = append_shape_restrictions(
      with_means,
      {{ShapeRowKind::EqualityToZero,
        [a, b](Eigen::Ref<const Eigen::RowVectorXd> u) {
          return (u[0] <= a ? 1.0 : 0.0) - (u[0] <= -a ? 1.0 : 0.0) - b;
        },
        "iqr"},
       {ShapeRowKind::InequalityToZero,
        [](Eigen::Ref<const Eigen::RowVectorXd> u) { return u[1] * u[1] - 4.0; }, "var-cap"}});
  CHECK(iq->dims().d4 == 3);
  CHECK(iq->dims().d3 == 1);

  // Existing rows keep their values; new rows appear in g order (g3 then g4).
  Eigen::RowVectorXd u(2);
  u << 0.5, -1.1;
  Eigen::RowVectorXd out(4);
  iq->eval_g(u, Eigen::VectorXd::Zero(1), out);
  CHECK(out[0] == doctest::Approx(-1.1 * -1.1 - 4.0));  // g3: var cap
  CHECK(out[1] == doctest::Approx(0.5));                // g4: mean rows
  CHECK(out[2] == doctest::Approx(-1.1));
  CHECK(out[3] == doctest::Approx(1.0 - 0.0 - b));      // g4: iqr row
}

TEST_CASE("appending rows never changes existing g components on the game") {
  auto base = build_game_model(GameConfig::defaults());
  auto augmented = append_shape_restrictions(
      base, {{ShapeRowKind::EqualityToZero,
              [](Eigen::Ref<const Eigen::RowVectorXd> u) { return u[0] * u[1]; }, "cross"}});
  CHECK(augmented->dims().d4 == 3);
  Eigen::VectorXd theta(3);
  theta << -0.7, -0.9, 0.8;
  Eigen::RowVectorXd u(2);
  u << 0.3, -0.6;
  Eigen::RowVectorXd g_base(14), g_aug(15);
  base->eval_g(u, theta, g_base);
  augmented->eval_g(u, theta, g_aug);
  CHECK(g_aug.head(14) == g_base);
  CHECK(g_aug[14] == doctest::Approx(0.3 * -0.6));
}

TEST_CASE("reduced form padding") {
  Dims dims{1, 2, 0, 1};
  ReducedForm rf;
  rf.P1 = Eigen::VectorXd::Constant(1, -0.3);
  rf.P2.resize(2);
  rf.P2 << 0.1, 0.2;
  Eigen::VectorXd padded = rf.stacked_padded(dims);
  CHECK(padded.size() == 4);
  CHECK(padded[0] == -0.3);
  CHECK(padded[3] == 0.0);
}
