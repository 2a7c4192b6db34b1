#include "robustcf/lbfgs_box.hpp"

#include <cmath>
#include <deque>
#include <limits>
#include <vector>

namespace robustcf {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lb) {
  return x.cwiseMax(lb);
}

// Sup norm of x - P(x + g): the standard box-constrained stationarity measure.
double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lb) {
  return (x - project(x + g, lb)).lpNorm<Eigen::Infinity>();
}

}  // namespace

LbfgsResult maximize_concave(
    const std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>& f,
    Eigen::VectorXd x0, const Eigen::VectorXd& lb, const LbfgsOptions& opts) {
  const int n = static_cast<int>(x0.size());
  LbfgsResult res;
  Eigen::VectorXd x = project(std::move(x0), lb);
  Eigen::VectorXd g(n);
  double fx = f(x, g);

  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<bool> prev_active(n, false);
  int stall = 0;

  auto lbfgs_direction = [&](const Eigen::VectorXd& grad) {
    Eigen::VectorXd q = grad;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) {
      double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
      q *= gamma;
    }
    for (int i = 0; i < m; ++i) {
      double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    return q;
  };

  for (int iter = 0; iter < opts.max_iter; ++iter) {
    res.iterations = iter;
    if (std::isnan(fx) || fx > opts.value_guard) {
      res.diverged = true;
      break;
    }
    if (fx == -std::numeric_limits<double>::infinity()) break;  // dead start
    double pg = projected_gradient_norm(x, g, lb);
    if (pg <= opts.grad_tol) {
      res.converged = true;
      break;
    }

    // Freeze the coordinates held at their bound by the gradient; quasi-Newton
    // curvature must not pull them back inside.
    std::vector<bool> active(n, false);
    Eigen::VectorXd g_masked = g;
    for (int i = 0; i < n; ++i) {
      if (x[i] <= lb[i] + 1e-14 && g[i] <= 0.0) {
        active[i] = true;
        g_masked[i] = 0.0;
      }
    }
    if (active != prev_active) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      prev_active = active;
    }

    Eigen::VectorXd d = lbfgs_direction(g_masked);
    for (int i = 0; i < n; ++i)
      if (active[i]) d[i] = 0.0;
    if (d.dot(g_masked) <= 0.0 || !d.allFinite()) {
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      d = g_masked;
    }

    // Backtracking Armijo line search along the projected path.
    double step = 1.0;
    const double c1 = 1e-4;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = project(x + step * d, lb);
      Eigen::VectorXd dx = x_new - x;
      if (dx.lpNorm<Eigen::Infinity>() < 1e-16 * (1.0 + x.lpNorm<Eigen::Infinity>())) break;
      f_new = f(x_new, g_new);
      if (std::isfinite(f_new) && f_new >= fx + c1 * g_masked.dot(dx)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      res.converged = pg <= 1e2 * opts.grad_tol;
      break;
    }
    stall = (f_new - fx <= 1e-15 * (1.0 + std::abs(fx))) ? stall + 1 : 0;

    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g - g_new;  // curvature pair for a maximization
    double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > opts.memory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x = std::move(x_new);
    g = std::move(g_new);
    fx = f_new;
    if (stall >= 3) {
      res.converged = projected_gradient_norm(x, g, lb) <= 1e2 * opts.grad_tol;
      break;
    }
  }

  res.x = std::move(x);
  res.value = fx;
  res.grad_norm = g.allFinite() ? projected_gradient_norm(res.x, g, lb)
                                : std::numeric_limits<double>::infinity();
  return res;
}

}  // namespace robustcf
