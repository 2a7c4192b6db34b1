#include "robustcf/local_sens.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "robustcf/dual_core.hpp"
#include "robustcf/errors.hpp"

namespace robustcf {

namespace {

struct Moments {
  Eigen::MatrixXd h;        // n x dh rows of (g2 - P2; g4)
  Eigen::VectorXd weights;  // n
  Eigen::VectorXd k;        // n (explicit case)
  double kappa = 0.0;
  Eigen::MatrixXd V;
  Eigen::VectorXd Ehk;      // E[h (k - kappa)]
  double var_k = 0.0;       // E[(k - kappa)^2]
};

Moments stage_moments(const MomentModel& model, const Eigen::VectorXd& theta,
                      const ExpectationEngine& engine, const Eigen::VectorXd& P2,
                      bool need_k) {
  const Dims dims = model.dims();
  if (dims.d1 != 0 || dims.d3 != 0)
    throw ArgumentError("local sensitivity requires a model with equality restrictions only");
  if (P2.size() != dims.d2) throw ArgumentError("P2 length does not match d2");
  DiscreteStage st = stage_discrete(model, theta, engine, need_k);
  Moments m;
  m.weights = st.weights;
  m.h = st.g;
  m.h.leftCols(dims.d2).rowwise() -= P2.transpose();
  m.V = m.h.transpose() * (m.weights.asDiagonal() * m.h);
  if (need_k) {
    m.k = st.k;
    m.kappa = m.k.dot(m.weights);
    Eigen::VectorXd kc = m.k.array() - m.kappa;
    m.Ehk = m.h.transpose() * (m.weights.asDiagonal() * kc);
    m.var_k = (m.weights.array() * kc.array().square()).sum();
  }
  return m;
}

Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& map,
                            const Eigen::VectorXd& theta, double step_rel) {
  Eigen::VectorXd f0 = map(theta);
  Eigen::MatrixXd Jm(f0.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    double h = step_rel * std::max(1.0, std::abs(theta[j]));
    Eigen::VectorXd tp = theta, tm = theta;
    tp[j] += h;
    tm[j] -= h;
    Jm.col(j) = (map(tp) - map(tm)) / (2.0 * h);
  }
  return Jm;
}

struct Inverted {
  Eigen::MatrixXd Vinv;
  bool ridge = false;
};

Inverted invert_v(Eigen::MatrixXd V) {
  Inverted out;
  Eigen::LLT<Eigen::MatrixXd> llt(V);
  if (llt.info() == Eigen::Success) {
    out.Vinv = llt.solve(Eigen::MatrixXd::Identity(V.rows(), V.cols()));
    return out;
  }
  double ridge = 1e-10 * std::max(1.0, V.diagonal().mean());
  V.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt2(V);
  if (llt2.info() != Eigen::Success)
    throw SingularityError("V is not positive definite even with ridge");
  out.Vinv = llt2.solve(Eigen::MatrixXd::Identity(V.rows(), V.cols()));
  out.ridge = true;
  return out;
}

Eigen::RowVectorXd q_from(const Eigen::MatrixXd& H, const Eigen::MatrixXd& Vinv,
                          const Eigen::RowVectorXd& J, const Eigen::VectorXd* Ehk) {
  const Eigen::Index dh = H.rows(), dt = H.cols();
  {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(H);
    double tol = 1e-10 * svd.singularValues()(0);
    if (svd.singularValues().minCoeff() < tol || dh < dt)
      throw SingularityError("H is rank deficient");
  }
  Eigen::MatrixXd HtVinv = H.transpose() * Vinv;         // dt x dh
  Eigen::MatrixXd A = HtVinv * H;                        // dt x dt
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) throw SingularityError("H'V^-1H not invertible");
  Eigen::MatrixXd AinvHtVinv = ldlt.solve(HtVinv);       // dt x dh

  if (dh == dt) {
    // Just identified: Q reduces to J H^-1.
    return J * H.inverse();
  }
  Eigen::RowVectorXd Q = J * AinvHtVinv;
  if (Ehk) {
    Eigen::MatrixXd proj = Vinv - Vinv * H * AinvHtVinv;  // dh x dh
    Q += Ehk->transpose() * proj;
  }
  return Q;
}

}  // namespace

SensitivityReport sensitivity_explicit(const MomentModel& model,
                                       const Eigen::VectorXd& theta_hat,
                                       const ExpectationEngine& engine,
                                       const Eigen::VectorXd& P2,
                                       const SensitivityOptions& options) {
  Moments m = stage_moments(model, theta_hat, engine, P2, true);

  SensitivityReport rep;
  rep.kappa_hat = m.kappa;
  rep.V = m.V;

  if (options.H_override) {
    rep.H = *options.H_override;
  } else {
    auto map = options.smooth_moment_map
                   ? options.smooth_moment_map
                   : std::function<Eigen::VectorXd(const Eigen::VectorXd&)>(
                         [&](const Eigen::VectorXd& th) {
                           Moments mm = stage_moments(model, th, engine, P2, false);
                           return (mm.h.transpose() * mm.weights).eval();
                         });
    rep.H = fd_jacobian(map, theta_hat, options.fd_step_rel);
  }
  if (options.J_override) {
    rep.J = *options.J_override;
  } else {
    auto kmap = options.smooth_kappa_map
                    ? options.smooth_kappa_map
                    : std::function<double(const Eigen::VectorXd&)>(
                          [&](const Eigen::VectorXd& th) {
                            Moments mm = stage_moments(model, th, engine, P2, true);
                            return mm.kappa;
                          });
    rep.J = fd_jacobian(
                [&](const Eigen::VectorXd& th) {
                  return Eigen::VectorXd::Constant(1, kmap(th)).eval();
                },
                theta_hat, options.fd_step_rel)
                .row(0);
  }

  Inverted inv = invert_v(rep.V);
  rep.ridge_applied = inv.ridge;
  rep.Q = q_from(rep.H, inv.Vinv, rep.J, &m.Ehk);

  double qvq = rep.Q * rep.V * rep.Q.transpose();
  double cross = rep.Q.dot(m.Ehk);
  rep.s_hat = 2.0 * m.var_k + 2.0 * qvq - 4.0 * cross;

  // Influence-function route: iota = (k - kappa) - Q h.
  Eigen::VectorXd iota = (m.k.array() - m.kappa).matrix() - m.h * rep.Q.transpose();
  rep.s_hat_influence = 2.0 * (m.weights.array() * iota.array().square()).sum();
  if (rep.s_hat < 0.0 && rep.s_hat > -1e-10) rep.s_hat = 0.0;
  return rep;
}

SensitivityReport sensitivity_implicit(const MomentModel& model,
                                       const Eigen::VectorXd& theta_hat,
                                       const ExpectationEngine& engine,
                                       const Eigen::VectorXd& P2,
                                       const Eigen::RowVectorXd& k_gradient,
                                       const SensitivityOptions& options) {
  Moments m = stage_moments(model, theta_hat, engine, P2, false);

  SensitivityReport rep;
  rep.V = m.V;
  rep.J = k_gradient;
  rep.kappa_hat = model.implicit_k() ? model.implicit_k_value(theta_hat) : 0.0;

  if (options.H_override) {
    rep.H = *options.H_override;
  } else {
    auto map = options.smooth_moment_map
                   ? options.smooth_moment_map
                   : std::function<Eigen::VectorXd(const Eigen::VectorXd&)>(
                         [&](const Eigen::VectorXd& th) {
                           Moments mm = stage_moments(model, th, engine, P2, false);
                           return (mm.h.transpose() * mm.weights).eval();
                         });
    rep.H = fd_jacobian(map, theta_hat, options.fd_step_rel);
  }

  Inverted inv = invert_v(rep.V);
  rep.ridge_applied = inv.ridge;
  rep.Q = q_from(rep.H, inv.Vinv, rep.J, nullptr);
  double qvq = rep.Q * rep.V * rep.Q.transpose();
  rep.s_hat = 2.0 * qvq;
  rep.s_hat_influence = rep.s_hat;
  return rep;
}

SensitivityReport assemble_explicit_sensitivity(const Eigen::MatrixXd& H,
                                                const Eigen::RowVectorXd& J,
                                                const Eigen::MatrixXd& V,
                                                const Eigen::VectorXd& Ehk_centered,
                                                double var_k, double kappa) {
  SensitivityReport rep;
  rep.H = H;
  rep.J = J;
  rep.V = V;
  rep.kappa_hat = kappa;
  Inverted inv = invert_v(V);
  rep.ridge_applied = inv.ridge;
  rep.Q = q_from(H, inv.Vinv, J, &Ehk_centered);
  double qvq = rep.Q * V * rep.Q.transpose();
  rep.s_hat = 2.0 * var_k + 2.0 * qvq - 4.0 * rep.Q.dot(Ehk_centered);
  rep.s_hat_influence = rep.s_hat;
  if (rep.s_hat < 0.0 && rep.s_hat > -1e-10) rep.s_hat = 0.0;
  return rep;
}

std::vector<std::pair<double, double>> extrapolated_bounds(double kappa_hat, double s_hat,
                                                           const std::vector<double>& deltas) {
  if (s_hat < 0.0) {
    if (s_hat < -1e-12) throw ArgumentError("extrapolated_bounds: s_hat must be nonnegative");
    s_hat = 0.0;
  }
  std::vector<std::pair<double, double>> out;
  out.reserve(deltas.size());
  for (double d : deltas) {
    double half = std::sqrt(d * s_hat);
    out.emplace_back(kappa_hat - half, kappa_hat + half);
  }
  return out;
}

}  // namespace robustcf
