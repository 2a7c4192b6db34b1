#include "robustcf/ddc.hpp"

#include <cmath>
#include <vector>

#include "robustcf/errors.hpp"
#include "robustcf/dual_core.hpp"
#include "robustcf/lowdisc.hpp"
#include "robustcf/nelder_mead.hpp"
#include "robustcf/stats.hpp"

namespace robustcf {

namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

int state_s(int x) { return x % 3; }
int state_prev(int x) { return x / 3; }

double variable_profit(const DdcConfig& cfg, const Eigen::Vector4d& tp, int s) {
  const double cd = tp[0], cf = tp[2], cm = tp[3];
  const double x = cfg.demand_intercepts[s];
  return (x - cm) * (x - cm) / (4.0 * cd) - cf;
}

void validate(const DdcConfig& cfg) {
  if (!(cfg.beta > 0.0 && cfg.beta < 1.0)) throw ArgumentError("ddc: beta must be in (0,1)");
  for (int r = 0; r < 3; ++r)
    if (std::abs(cfg.q.row(r).sum() - 1.0) > 1e-9)
      throw ArgumentError("ddc: q rows must sum to 1");
  for (int x = 0; x < 6; ++x)
    if (!(cfg.ccps[x] > 0.0 && cfg.ccps[x] < 1.0))
      throw ArgumentError("ddc: ccps must lie in (0,1)");
}

// Choice-specific value intercepts a_c = pi_c + beta M_c v.
struct ChoiceValues {
  Vec6 a0, a1;
  Vec6 z() const { return a1 - a0; }
};

ChoiceValues choice_values(const DdcConfig& cfg, const Eigen::Vector4d& tp, Regime regime,
                           const Vec6& v) {
  ChoiceValues cv;
  cv.a0 = ddc_flow_payoffs(cfg, tp, 0, regime) + cfg.beta * (ddc_transition(cfg, 0) * v);
  cv.a1 = ddc_flow_payoffs(cfg, tp, 1, regime) + cfg.beta * (ddc_transition(cfg, 1) * v);
  return cv;
}

Vec6 logsumexp_pair(const Vec6& a, const Vec6& b) {
  Vec6 out;
  for (int i = 0; i < 6; ++i) {
    double m = std::max(a[i], b[i]);
    out[i] = m + std::log1p(std::exp(std::min(a[i], b[i]) - m));
  }
  return out;
}

class DdcModel : public MomentModel {
 public:
  DdcModel(DdcConfig cfg, const DdcTheta& anchor) : cfg_(cfg) {
    Eigen::VectorXd c = anchor.stacked();
    box_.lower.resize(16);
    box_.upper.resize(16);
    for (int i = 0; i < 16; ++i) {
      double half = std::max(0.25 * std::abs(c[i]), 0.5);
      box_.lower[i] = c[i] - half;
      box_.upper[i] = c[i] + half;
    }
    box_.lower[0] = std::max(box_.lower[0], 0.1);  // demand slope stays positive
  }

  Dims dims() const override { return {0, 6, 0, 12}; }
  int u_dim() const override { return 2; }
  const ParameterBox& theta_box() const override { return box_; }
  std::string name() const override { return "ddc-kss"; }

  void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd& theta,
              Eigen::Ref<Eigen::RowVectorXd> out) const override {
    Eigen::MatrixXd pts(1, 2);
    pts << u[0], u[1];
    out = eval_g_batch(pts, theta).row(0);
  }

  double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u,
                const Eigen::VectorXd& theta) const override {
    Eigen::MatrixXd pts(1, 2);
    pts << u[0], u[1];
    return eval_k_batch(pts, theta)[0];
  }

  Eigen::MatrixXd eval_g_batch(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& theta) const override {
    const DdcTheta th = DdcTheta::from_stacked(theta);
    const ChoiceValues pre = choice_values(cfg_, th.theta_pi, Regime::Pre, th.v);
    const ChoiceValues post = choice_values(cfg_, th.theta_pi, Regime::Post, th.v_tilde);
    Eigen::MatrixXd out(points.rows(), 18);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double u0 = points(i, 0), u1 = points(i, 1);
      const double w = u1 - u0;
      for (int x = 0; x < 6; ++x) {
        out(i, x) = (pre.a1[x] + u1 >= pre.a0[x] + u0) ? 1.0 : 0.0;
        out(i, 6 + x) = u0 + std::max(pre.a0[x], pre.a1[x] + w) - th.v[x];
        out(i, 12 + x) = u0 + std::max(post.a0[x], post.a1[x] + w) - th.v_tilde[x];
      }
    }
    return out;
  }

  Eigen::VectorXd eval_k_batch(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& theta) const override {
    const DdcTheta th = DdcTheta::from_stacked(theta);
    const ChoiceValues post = choice_values(cfg_, th.theta_pi, Regime::Post, th.v_tilde);
    const int j = cfg_.focus_state;
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i)
      out[i] = (post.a1[j] + points(i, 1) >= post.a0[j] + points(i, 0)) ? 1.0 : 0.0;
    return out;
  }

 private:
  DdcConfig cfg_;
  ParameterBox box_;
};

}  // namespace

DdcConfig DdcConfig::defaults() {
  DdcConfig cfg;
  cfg.q << 0.40, 0.35, 0.25,
           0.30, 0.40, 0.30,
           0.20, 0.20, 0.60;
  cfg.ccps << 0.9361, 0.8748, 0.7299, 0.9999, 0.8091, 0.0048;
  return cfg;
}

Eigen::VectorXd DdcTheta::stacked() const {
  Eigen::VectorXd out(16);
  out << theta_pi, v, v_tilde;
  return out;
}

DdcTheta DdcTheta::from_stacked(const Eigen::VectorXd& theta) {
  if (theta.size() != 16) throw ArgumentError("ddc theta must have 16 entries");
  DdcTheta out;
  out.theta_pi = theta.segment<4>(0);
  out.v = theta.segment<6>(4);
  out.v_tilde = theta.segment<6>(10);
  return out;
}

Vec6 ddc_flow_payoffs(const DdcConfig& config, const Eigen::Vector4d& theta_pi, int action,
                      Regime regime) {
  Vec6 out;
  const double entry_cost =
      regime == Regime::Post ? theta_pi[1] - config.subsidy : theta_pi[1];
  for (int x = 0; x < 6; ++x) {
    if (state_prev(x) == 0)
      out[x] = action == 1 ? -entry_cost : 0.0;
    else
      out[x] = action == 1 ? variable_profit(config, theta_pi, state_s(x)) : config.scrap;
  }
  return out;
}

Mat6 ddc_transition(const DdcConfig& config, int action) {
  Mat6 M = Mat6::Zero();
  for (int x = 0; x < 6; ++x)
    for (int s2 = 0; s2 < 3; ++s2) M(x, action * 3 + s2) = config.q(state_s(x), s2);
  return M;
}

Vec6 solve_logit_value(const DdcConfig& config, const Eigen::Vector4d& theta_pi,
                       Regime regime) {
  validate(config);
  if (!(theta_pi[0] > 0.0)) throw ArgumentError("ddc: c_d must be positive");
  const Vec6 pi0 = ddc_flow_payoffs(config, theta_pi, 0, regime);
  const Vec6 pi1 = ddc_flow_payoffs(config, theta_pi, 1, regime);
  const Mat6 M0 = ddc_transition(config, 0);
  const Mat6 M1 = ddc_transition(config, 1);
  Vec6 v = Vec6::Zero();
  for (long it = 0; it < 100000; ++it) {
    Vec6 next = logsumexp_pair(pi0 + config.beta * (M0 * v), pi1 + config.beta * (M1 * v));
    next.array() += kEulerGamma;
    double diff = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (diff < 1e-12) return v;
  }
  throw EstimationError("ddc value iteration exceeded the iteration cap");
}

Vec6 ddc_logit_ccps(const DdcConfig& config, const Eigen::Vector4d& theta_pi, Regime regime,
                    const Vec6& v) {
  ChoiceValues cv = choice_values(config, theta_pi, regime, v);
  Vec6 out;
  for (int x = 0; x < 6; ++x) out[x] = logistic_cdf(cv.z()[x]);
  return out;
}

Vec6 solve_value_fixed_point_under_engine(const DdcConfig& config,
                                          const Eigen::Vector4d& theta_pi, Regime regime,
                                          const ExpectationEngine& engine) {
  const Vec6 pi0 = ddc_flow_payoffs(config, theta_pi, 0, regime);
  const Vec6 pi1 = ddc_flow_payoffs(config, theta_pi, 1, regime);
  const Mat6 M0 = ddc_transition(config, 0);
  const Mat6 M1 = ddc_transition(config, 1);
  const Eigen::MatrixXd& pts = engine.points();
  const Eigen::VectorXd& w = engine.weights();
  Vec6 v = solve_logit_value(config, theta_pi, regime);  // warm start
  for (long it = 0; it < 100000; ++it) {
    Vec6 a0 = pi0 + config.beta * (M0 * v);
    Vec6 a1 = pi1 + config.beta * (M1 * v);
    Vec6 next = Vec6::Zero();
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      double u0 = pts(i, 0), u1 = pts(i, 1);
      for (int x = 0; x < 6; ++x) next[x] += w[i] * std::max(a0[x] + u0, a1[x] + u1);
    }
    double diff = (next - v).cwiseAbs().maxCoeff();
    v = next;
    if (diff < 1e-12) return v;
  }
  throw EstimationError("ddc empirical value iteration exceeded the iteration cap");
}

DdcTheta estimate_ddc_theta(const Eigen::Matrix<double, 6, 1>& ccps, const DdcConfig& config) {
  DdcConfig cfg = config;
  cfg.ccps = ccps;
  validate(cfg);
  ParameterBox box;
  box.lower.resize(4);
  box.upper.resize(4);
  box.lower << 0.5, 0.0, 0.0, 0.0;
  box.upper << 40.0, 25.0, 15.0, 8.0;
  auto sse = [&](const Eigen::VectorXd& tp4) {
    Eigen::Vector4d tp = tp4;
    Vec6 v = solve_logit_value(cfg, tp, Regime::Pre);
    Vec6 p = ddc_logit_ccps(cfg, tp, Regime::Pre, v);
    return (p - ccps).squaredNorm();
  };
  std::vector<Eigen::VectorXd> starts = low_discrepancy_points(box, 6, 11);
  Eigen::VectorXd s0(4), s1(4);
  s0 << 10.0, 8.0, 5.0, 2.0;
  s1 << 12.0, 10.0, 6.0, 1.0;
  starts.push_back(s0);
  starts.push_back(s1);
  NelderMeadOptions nm;
  nm.max_evals = 3000;
  nm.f_tol = 1e-18;
  nm.x_tol = 1e-12;
  Eigen::VectorXd best;
  double best_val = std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    Eigen::VectorXd step = 0.2 * (box.upper - box.lower);
    NelderMeadResult r = nelder_mead_minimize(sse, s, step, box, nm);
    NelderMeadResult r2 = nelder_mead_minimize(sse, r.x, (step / 50).eval(), box, nm);
    if (r2.value < best_val) {
      best_val = r2.value;
      best = r2.x;
    }
  }
  if (!(best_val < 1e-4)) throw EstimationError("ddc estimation did not converge");
  DdcTheta th;
  th.theta_pi = best;
  th.v = solve_logit_value(cfg, th.theta_pi, Regime::Pre);
  th.v_tilde = solve_logit_value(cfg, th.theta_pi, Regime::Post);
  return th;
}

Vec6 counterfactual_ccps(const DdcConfig& config, const DdcTheta& theta) {
  return ddc_logit_ccps(config, theta.theta_pi, Regime::Post, theta.v_tilde);
}

std::shared_ptr<const MomentModel> build_ddc_model(const DdcConfig& config,
                                                   const DdcTheta& anchor) {
  validate(config);
  if (config.focus_state < 0 || config.focus_state >= 6)
    throw ArgumentError("ddc: focus_state out of range");
  return std::make_shared<DdcModel>(config, anchor);
}

ReducedForm ddc_reduced_form(const Eigen::Matrix<double, 6, 1>& ccps) {
  ReducedForm rf;
  rf.P1.resize(0);
  rf.P2 = ccps;
  return rf;
}

DdcLocalMatrices ddc_local_matrices(const DdcConfig& config, const DdcTheta& theta,
                                    const ExpectationEngine& engine) {
  validate(config);
  const double beta = config.beta;
  const Mat6 M0 = ddc_transition(config, 0);
  const Mat6 M1 = ddc_transition(config, 1);
  const Mat6 dM = M1 - M0;
  const ChoiceValues pre = choice_values(config, theta.theta_pi, Regime::Pre, theta.v);
  const ChoiceValues post = choice_values(config, theta.theta_pi, Regime::Post, theta.v_tilde);
  const Vec6 z = pre.z(), zt = post.z();

  // d(Delta pi)/d theta_pi per state; identical pre/post (the subsidy is a
  // constant shift).
  Eigen::MatrixXd dDpi(6, 4);
  for (int x = 0; x < 6; ++x) {
    if (state_prev(x) == 0) {
      dDpi.row(x) << 0.0, -1.0, 0.0, 0.0;
    } else {
      const double cd = theta.theta_pi[0], cm = theta.theta_pi[3];
      const double X = config.demand_intercepts[state_s(x)];
      dDpi.row(x) << -(X - cm) * (X - cm) / (4.0 * cd * cd), 0.0, -1.0, -(X - cm) / (2.0 * cd);
    }
  }

  DdcLocalMatrices out;
  out.H.setZero(18, 16);
  for (int x = 0; x < 6; ++x) {
    const double sp = logistic_pdf(z[x]);          // sigma'(z)
    const double s1 = logistic_cdf(z[x]);          // sigma(z)
    const double st = logistic_cdf(zt[x]);
    // CCP rows.
    out.H.block(x, 0, 1, 4) = sp * dDpi.row(x);
    out.H.block(x, 4, 1, 6) = sp * beta * dM.row(x);
    // Pre-intervention fixed-point rows.
    out.H.block(6 + x, 0, 1, 4) = s1 * dDpi.row(x);
    out.H.block(6 + x, 4, 1, 6) = beta * M0.row(x) + s1 * beta * dM.row(x);
    out.H(6 + x, 4 + x) -= 1.0;
    // Post-intervention fixed-point rows.
    out.H.block(12 + x, 0, 1, 4) = st * dDpi.row(x);
    out.H.block(12 + x, 10, 1, 6) = beta * M0.row(x) + st * beta * dM.row(x);
    out.H(12 + x, 10 + x) -= 1.0;
  }

  const int j = config.focus_state;
  out.J.setZero(16);
  out.J.segment<4>(0) = logistic_pdf(zt[j]) * dDpi.row(j);
  out.J.segment<6>(10) = logistic_pdf(zt[j]) * beta * dM.row(j);

  // Engine moments for V, E[h(k-kappa)], and the k variance.
  DdcTheta anchor = theta;
  DdcModel model(config, anchor);
  DiscreteStage st = stage_discrete(model, theta.stacked(), engine, true);
  Eigen::MatrixXd h = st.g;
  h.leftCols(6).rowwise() -= config.ccps.transpose();
  out.V = h.transpose() * (st.weights.asDiagonal() * h);
  out.kappa = st.k.dot(st.weights);
  Eigen::VectorXd kc = st.k.array() - out.kappa;
  out.Ehk = h.transpose() * (st.weights.asDiagonal() * kc);
  out.var_k = (st.weights.array() * kc.array().square()).sum();
  return out;
}

SensitivityReport ddc_sensitivity(const DdcConfig& config, const DdcTheta& theta,
                                  const ExpectationEngine& engine) {
  DdcLocalMatrices m = ddc_local_matrices(config, theta, engine);
  return assemble_explicit_sensitivity(m.H, m.J, m.V, m.Ehk, m.var_k, m.kappa);
}

EngineSource ddc_quadrature_engine(const DdcConfig& config, int w_nodes, int u0_nodes) {
  DdcConfig cfg = config;
  return EngineSource([cfg, w_nodes, u0_nodes](const Eigen::VectorXd& theta) {
    const DdcTheta th = DdcTheta::from_stacked(theta);
    const ChoiceValues pre = choice_values(cfg, th.theta_pi, Regime::Pre, th.v);
    const ChoiceValues post = choice_values(cfg, th.theta_pi, Regime::Post, th.v_tilde);

    // All integrands depend on u through (u0, w = u1 - u0) with kinks only at
    // the choice-switch thresholds in w.
    const double w_lo = -27.0, w_hi = 27.0;
    std::vector<double> cuts{w_lo};
    for (int x = 0; x < 6; ++x) {
      for (double c : {-pre.z()[x], -post.z()[x]})
        if (c > w_lo && c < w_hi) cuts.push_back(c);
    }
    cuts.push_back(w_hi);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](double a, double b) { return std::abs(a - b) < 1e-12; }),
               cuts.end());

    const GaussLegendre& glw = gauss_legendre(w_nodes);
    const GaussLegendre& glu = gauss_legendre(u0_nodes / 3 + 1);
    const std::vector<double> u0_edges{-4.0, -1.0, 1.0, 3.0, 6.0, 11.0, 22.0};

    std::vector<std::pair<double, double>> wn, un;
    for (size_t c = 0; c + 1 < cuts.size(); ++c) {
      double a = cuts[c], b = cuts[c + 1], hw = 0.5 * (b - a), mw = 0.5 * (a + b);
      for (int q = 0; q < w_nodes; ++q)
        wn.emplace_back(mw + hw * glw.nodes[q], hw * glw.weights[q]);
    }
    for (size_t c = 0; c + 1 < u0_edges.size(); ++c) {
      double a = u0_edges[c], b = u0_edges[c + 1], hw = 0.5 * (b - a), mw = 0.5 * (a + b);
      for (size_t q = 0; q < glu.nodes.size(); ++q)
        un.emplace_back(mw + hw * glu.nodes[q], hw * glu.weights[q]);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(wn.size() * un.size());
    Eigen::MatrixXd pts(n, 2);
    Eigen::VectorXd wt(n);
    Eigen::Index idx = 0;
    for (const auto& [w, ww] : wn) {
      for (const auto& [u0, wu] : un) {
        double u1 = u0 + w;
        pts(idx, 0) = u0;
        pts(idx, 1) = u1;
        wt[idx] = ww * wu * gumbel_pdf(u0) * gumbel_pdf(u1);
        ++idx;
      }
    }
    wt /= wt.sum();
    return ExpectationEngine::grid(std::move(pts), std::move(wt));
  });
}

}  // namespace robustcf
