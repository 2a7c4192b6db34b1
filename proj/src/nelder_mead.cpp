#include "robustcf/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace robustcf {

NelderMeadResult nelder_mead_minimize(
    const std::function<double(const Eigen::VectorXd&)>& f, const Eigen::VectorXd& x0,
    const Eigen::VectorXd& initial_step, const ParameterBox& box,
    const NelderMeadOptions& opts) {
  const int n = static_cast<int>(x0.size());
  const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

  int evals = 0;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++evals;
    return f(box.clamp(x));
  };

  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  pts.push_back(box.clamp(x0));
  vals.push_back(eval(pts[0]));
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd p = pts[0];
    double step = initial_step[i];
    // Flip the offset when the start sits against the upper bound.
    if (p[i] + step > box.upper[i]) step = -step;
    p[i] += step;
    pts.push_back(box.clamp(p));
    vals.push_back(eval(pts.back()));
  }

  std::vector<int> order(n + 1);
  while (evals < opts.max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    {
      std::vector<Eigen::VectorXd> p2(n + 1);
      std::vector<double> v2(n + 1);
      for (int i = 0; i <= n; ++i) {
        p2[i] = pts[order[i]];
        v2[i] = vals[order[i]];
      }
      pts.swap(p2);
      vals.swap(v2);
    }

    double spread = std::abs(vals[n] - vals[0]);
    double xspread = 0.0;
    for (int i = 1; i <= n; ++i)
      xspread = std::max(xspread, (pts[i] - pts[0]).lpNorm<Eigen::Infinity>());
    if ((std::isfinite(vals[n]) && spread < opts.f_tol) || xspread < opts.x_tol) break;

    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) centroid += pts[i];
    centroid /= n;

    Eigen::VectorXd xr = box.clamp(centroid + alpha * (centroid - pts[n]));
    double fr = eval(xr);
    if (fr < vals[0]) {
      Eigen::VectorXd xe = box.clamp(centroid + gamma * (centroid - pts[n]));
      double fe = eval(xe);
      if (fe < fr) {
        pts[n] = xe;
        vals[n] = fe;
      } else {
        pts[n] = xr;
        vals[n] = fr;
      }
      continue;
    }
    if (fr < vals[n - 1]) {
      pts[n] = xr;
      vals[n] = fr;
      continue;
    }
    Eigen::VectorXd xc = box.clamp(centroid + rho * (pts[n] - centroid));
    double fc = eval(xc);
    if (fc < vals[n]) {
      pts[n] = xc;
      vals[n] = fc;
      continue;
    }
    for (int i = 1; i <= n; ++i) {
      pts[i] = box.clamp(pts[0] + sigma * (pts[i] - pts[0]));
      vals[i] = eval(pts[i]);
      if (evals >= opts.max_evals) break;
    }
  }

  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  return {pts[best], vals[best], evals};
}

}  // namespace robustcf
