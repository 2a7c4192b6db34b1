#include "robustcf/entry_game.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "robustcf/errors.hpp"
#include "robustcf/lowdisc.hpp"
#include "robustcf/nelder_mead.hpp"
#include "robustcf/stats.hpp"

namespace robustcf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Interval {
  double lo = -kInf;
  double hi = kInf;
  double prob() const { return norm_cdf(hi) - norm_cdf(lo); }
  // E[U 1{U in I}] under N(0,1): pdf(lo) - pdf(hi).
  double partial_mean() const {
    double a = std::isfinite(lo) ? norm_pdf(lo) : 0.0;
    double b = std::isfinite(hi) ? norm_pdf(hi) : 0.0;
    return a - b;
  }
  bool contains(double u) const { return u >= lo && u <= hi; }
  Interval intersect(const Interval& o) const {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  bool empty() const { return lo >= hi; }
};

struct Rect {
  Interval u1, u2;
  double prob() const {
    if (u1.empty() || u2.empty()) return 0.0;
    return u1.prob() * u2.prob();
  }
  bool contains(double a, double b) const { return u1.contains(a) && u2.contains(b); }
  Rect intersect(const Rect& o) const { return {u1.intersect(o.u1), u2.intersect(o.u2)}; }
};

void check_theta(const Eigen::VectorXd& theta) {
  if (theta.size() != 3) throw ArgumentError("entry game: theta must be (beta1, beta2, Delta)");
  if (!(theta[2] > 0.0)) throw ArgumentError("entry game: Delta (assumed positive)");
}

// The 12 moment events, inequality rows first: per z the regions where the
// (1,0) and (0,1) monopolies are playable, then per z the unique-equilibrium
// no-entry and duopoly regions.
std::vector<Rect> moment_events(const Eigen::VectorXd& theta) {
  const double b1 = theta[0], b2 = theta[1], dl = theta[2];
  std::vector<Rect> ev;
  ev.reserve(12);
  for (int z = 0; z <= 2; ++z) {
    ev.push_back({{-b1 - z, kInf}, {-kInf, dl - b2 - z}});   // (1,0) playable
    ev.push_back({{-kInf, dl - b1 - z}, {-b2 - z, kInf}});   // (0,1) playable
  }
  for (int z = 0; z <= 2; ++z) {
    ev.push_back({{-kInf, -b1 - z}, {-kInf, -b2 - z}});      // (0,0)
    ev.push_back({{dl - b1 - z, kInf}, {dl - b2 - z, kInf}});// (1,1)
  }
  return ev;
}

// Monopoly regions under the tax at the focus regressor value. Disjoint when
// tau > Delta; they overlap (both-monopolies multiplicity) when tau <= Delta.
std::pair<Rect, Rect> tax_monopoly_rects(const GameConfig& cfg, const Eigen::VectorXd& theta) {
  const double b1 = theta[0], b2 = theta[1], dl = theta[2];
  const double z = cfg.z_focus;
  Rect m1{{cfg.tau - b1 - z, kInf}, {-kInf, dl - b2 - z}};
  Rect m2{{-kInf, dl - b1 - z}, {cfg.tau - b2 - z, kInf}};
  return {m1, m2};
}

double rect_union_prob(const Rect& a, const Rect& b) {
  return a.prob() + b.prob() - a.intersect(b).prob();
}

class GameModel : public MomentModel {
 public:
  explicit GameModel(GameConfig cfg) : cfg_(cfg) {
    box_.lower.resize(3);
    box_.upper.resize(3);
    box_.lower << -3.0, -3.0, 1e-3;
    box_.upper << 3.0, 3.0, 3.0;
  }

  Dims dims() const override { return {6, 6, 0, 2}; }
  int u_dim() const override { return 2; }
  const ParameterBox& theta_box() const override { return box_; }
  std::string name() const override { return "entry-game"; }

  void eval_g(Eigen::Ref<const Eigen::RowVectorXd> u, const Eigen::VectorXd& theta,
              Eigen::Ref<Eigen::RowVectorXd> out) const override {
    check_theta(theta);
    auto ev = moment_events(theta);
    for (int r = 0; r < 12; ++r) out[r] = ev[r].contains(u[0], u[1]) ? -1.0 : 0.0;
    out[12] = u[0];
    out[13] = u[1];
  }

  double eval_k(Eigen::Ref<const Eigen::RowVectorXd> u,
                const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    auto [m1, m2] = tax_monopoly_rects(cfg_, theta);
    return (m1.contains(u[0], u[1]) || m2.contains(u[0], u[1])) ? 1.0 : 0.0;
  }

  Eigen::MatrixXd eval_g_batch(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    const auto ev = moment_events(theta);
    Eigen::MatrixXd out(points.rows(), 14);
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double u1 = points(i, 0), u2 = points(i, 1);
      for (int r = 0; r < 12; ++r) out(i, r) = ev[r].contains(u1, u2) ? -1.0 : 0.0;
      out(i, 12) = u1;
      out(i, 13) = u2;
    }
    return out;
  }

  Eigen::VectorXd eval_k_batch(const Eigen::MatrixXd& points,
                               const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    const auto [m1, m2] = tax_monopoly_rects(cfg_, theta);
    Eigen::VectorXd out(points.rows());
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
      const double u1 = points(i, 0), u2 = points(i, 1);
      out[i] = (m1.contains(u1, u2) || m2.contains(u1, u2)) ? 1.0 : 0.0;
    }
    return out;
  }

 private:
  GameConfig cfg_;
  ParameterBox box_;
};

// Threshold cells for the analytic objectives: per-player break points of all
// indicator events at theta.
struct CellGrid {
  std::vector<double> edges1, edges2;  // interior thresholds, sorted
};

CellGrid cell_grid(const GameConfig& cfg, const Eigen::VectorXd& theta) {
  CellGrid g;
  const double b1 = theta[0], b2 = theta[1], dl = theta[2];
  for (int z = 0; z <= 2; ++z) {
    g.edges1.push_back(-b1 - z);
    g.edges1.push_back(dl - b1 - z);
    g.edges2.push_back(-b2 - z);
    g.edges2.push_back(dl - b2 - z);
  }
  g.edges1.push_back(cfg.tau - b1 - cfg.z_focus);
  g.edges2.push_back(cfg.tau - b2 - cfg.z_focus);
  auto tidy = [](std::vector<double>& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end(),
                        [](double a, double b) { return std::abs(a - b) < 1e-13; }),
            v.end());
  };
  tidy(g.edges1);
  tidy(g.edges2);
  return g;
}

class GameCellBasis : public CellBasis {
 public:
  explicit GameCellBasis(GameConfig cfg) : cfg_(cfg) {}

  int moment_dim() const override { return 14; }

  double log_mgf(const Eigen::VectorXd& theta, double s, const Eigen::VectorXd& t,
                 double* ds, Eigen::VectorXd* dt) const override {
    check_theta(theta);
    if (t.size() != 14) throw ArgumentError("game log_mgf: t must have 14 entries");
    const auto ev = moment_events(theta);
    const auto [m1, m2] = tax_monopoly_rects(cfg_, theta);
    const CellGrid grid = cell_grid(cfg_, theta);
    const double t41 = t[12], t42 = t[13];

    auto bounds = [](const std::vector<double>& e, int i) {
      double lo = i == 0 ? -kInf : e[i - 1];
      double hi = i == static_cast<int>(e.size()) ? kInf : e[i];
      return Interval{lo, hi};
    };
    auto rep = [](const Interval& iv) {
      if (std::isfinite(iv.lo) && std::isfinite(iv.hi)) return 0.5 * (iv.lo + iv.hi);
      if (std::isfinite(iv.lo)) return iv.lo + 1.0;
      if (std::isfinite(iv.hi)) return iv.hi - 1.0;
      return 0.0;
    };
    // Shifted cell mass under the mean-row tilt; complementary form in the
    // right tail to avoid cancellation.
    auto shifted = [](const Interval& iv, double shift, double* dlog) {
      double a = iv.lo - shift, b = iv.hi - shift;
      double dg;
      if (std::isfinite(a) && a >= 0.0)
        dg = norm_cdf(-a) - (std::isfinite(b) ? norm_cdf(-b) : 0.0);
      else
        dg = (std::isfinite(b) ? norm_cdf(b) : 1.0) - (std::isfinite(a) ? norm_cdf(a) : 0.0);
      double da = std::isfinite(a) ? norm_pdf(a) : 0.0;
      double db = std::isfinite(b) ? norm_pdf(b) : 0.0;
      *dlog = dg > 1e-300 ? (da - db) / dg : 0.0;
      return dg;
    };

    const int n1 = static_cast<int>(grid.edges1.size()) + 1;
    const int n2 = static_cast<int>(grid.edges2.size()) + 1;
    std::vector<double> logm1(n1), dlog1(n1), logm2(n2), dlog2(n2);
    std::vector<double> rep1(n1), rep2(n2);
    std::vector<Interval> iv1(n1), iv2(n2);
    for (int i = 0; i < n1; ++i) {
      iv1[i] = bounds(grid.edges1, i);
      rep1[i] = rep(iv1[i]);
      double d;
      double mass = shifted(iv1[i], t41, &d);
      logm1[i] = mass > 1e-300 ? std::log(mass) : -kInf;
      dlog1[i] = d;
    }
    for (int j = 0; j < n2; ++j) {
      iv2[j] = bounds(grid.edges2, j);
      rep2[j] = rep(iv2[j]);
      double d;
      double mass = shifted(iv2[j], t42, &d);
      logm2[j] = mass > 1e-300 ? std::log(mass) : -kInf;
      dlog2[j] = d;
    }

    // Cell-constant indicator payload.
    struct Cell {
      double logterm;
      double kc;
      int i, j;
    };
    std::vector<Cell> cells;
    cells.reserve(n1 * n2);
    std::vector<double> grow(12);
    double lse_max = -kInf;
    std::vector<std::array<double, 12>> gvals(n1 * n2);
    for (int i = 0; i < n1; ++i) {
      for (int j = 0; j < n2; ++j) {
        if (logm1[i] == -kInf || logm2[j] == -kInf) continue;
        double u1 = rep1[i], u2 = rep2[j];
        double expo = logm1[i] + logm2[j];
        auto& gv = gvals[cells.size()];
        for (int r = 0; r < 12; ++r) {
          gv[r] = ev[r].contains(u1, u2) ? -1.0 : 0.0;
          if (gv[r] != 0.0) expo += t[r] * gv[r];
        }
        double kc = (m1.contains(u1, u2) || m2.contains(u1, u2)) ? 1.0 : 0.0;
        expo += s * kc;
        cells.push_back({expo, kc, i, j});
        lse_max = std::max(lse_max, expo);
      }
    }
    if (cells.empty() || !std::isfinite(lse_max)) return -kInf;

    double z = 0.0;
    for (const auto& c : cells) z += std::exp(c.logterm - lse_max);
    double lse = lse_max + std::log(z);
    double value = 0.5 * (t41 * t41 + t42 * t42) + lse;

    if (ds || dt) {
      if (dt) dt->setZero(14);
      double dk = 0.0;
      for (size_t ci = 0; ci < cells.size(); ++ci) {
        const auto& c = cells[ci];
        double w = std::exp(c.logterm - lse_max) / z;
        dk += w * c.kc;
        if (dt) {
          const auto& gv = gvals[ci];
          for (int r = 0; r < 12; ++r)
            if (gv[r] != 0.0) (*dt)[r] += w * gv[r];
          (*dt)[12] += w * dlog1[c.i];
          (*dt)[13] += w * dlog2[c.j];
        }
      }
      if (ds) *ds = dk;
      if (dt) {
        (*dt)[12] += t41;
        (*dt)[13] += t42;
      }
    }
    return value;
  }

  double expect_k(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    auto [m1, m2] = tax_monopoly_rects(cfg_, theta);
    return rect_union_prob(m1, m2);
  }

  Eigen::VectorXd expect_g(const Eigen::VectorXd& theta) const override {
    check_theta(theta);
    auto ev = moment_events(theta);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(14);
    for (int r = 0; r < 12; ++r) out[r] = -ev[r].prob();
    return out;
  }

 private:
  GameConfig cfg_;
};

}  // namespace

GameConfig GameConfig::defaults() {
  GameConfig cfg;
  cfg.probs << 0.619, 0.003, 0.226, 0.152,
               0.175, 0.075, 0.450, 0.300,
               0.013, 0.427, 0.335, 0.225;
  return cfg;
}

std::shared_ptr<const MomentModel> build_game_model(const GameConfig& config) {
  for (int z = 0; z < 3; ++z) {
    if (std::abs(config.probs.row(z).sum() - 1.0) > 1e-9)
      throw ArgumentError("game config: cell probabilities must sum to 1 per z");
  }
  if (!(config.tau > 0.0)) throw ArgumentError("game config: tau must be positive");
  return std::make_shared<GameModel>(config);
}

ReducedForm game_reduced_form(const GameConfig& config) {
  ReducedForm rf;
  rf.P1.resize(6);
  rf.P2.resize(6);
  for (int z = 0; z < 3; ++z) {
    rf.P1[2 * z] = -config.probs(z, 2);      // (1,0)
    rf.P1[2 * z + 1] = -config.probs(z, 3);  // (0,1)
    rf.P2[2 * z] = -config.probs(z, 0);      // (0,0)
    rf.P2[2 * z + 1] = -config.probs(z, 1);  // (1,1)
  }
  return rf;
}

std::shared_ptr<const CellBasis> game_cell_basis(const GameConfig& config) {
  return std::make_shared<GameCellBasis>(config);
}

ExpectationEngine game_closed_form_engine(const GameConfig& config) {
  return ExpectationEngine::closed_form(game_cell_basis(config));
}

double game_closed_form_log_mgf(const GameConfig& config, const Eigen::VectorXd& theta,
                                const Eigen::VectorXd& lambda_stacked, double eta,
                                bool include_k) {
  if (!(eta > 0.0)) throw ArgumentError("game_closed_form_log_mgf: eta must be positive");
  GameCellBasis basis(config);
  double s = include_k ? 1.0 / eta : 0.0;
  return eta * basis.log_mgf(theta, s, (lambda_stacked / eta).eval(), nullptr, nullptr);
}

EngineSource game_quadrature_engine(const GameConfig& config, int nodes_per_cell,
                                    double half_width) {
  GameConfig cfg = config;
  return EngineSource([cfg, nodes_per_cell, half_width](const Eigen::VectorXd& theta) {
    check_theta(theta);
    CellGrid grid = cell_grid(cfg, theta);
    const GaussLegendre& gl = gauss_legendre(nodes_per_cell);
    auto axis_nodes = [&](const std::vector<double>& edges) {
      std::vector<double> cuts{-half_width};
      for (double e : edges)
        if (e > -half_width && e < half_width) cuts.push_back(e);
      cuts.push_back(half_width);
      std::vector<std::pair<double, double>> nw;  // node, weight*pdf
      for (size_t c = 0; c + 1 < cuts.size(); ++c) {
        double a = cuts[c], b = cuts[c + 1], h = 0.5 * (b - a), m = 0.5 * (a + b);
        for (int q = 0; q < nodes_per_cell; ++q) {
          double x = m + h * gl.nodes[q];
          nw.emplace_back(x, h * gl.weights[q] * norm_pdf(x));
        }
      }
      return nw;
    };
    auto ax1 = axis_nodes(grid.edges1);
    auto ax2 = axis_nodes(grid.edges2);
    const Eigen::Index n = static_cast<Eigen::Index>(ax1.size() * ax2.size());
    Eigen::MatrixXd pts(n, 2);
    Eigen::VectorXd w(n);
    Eigen::Index idx = 0;
    for (const auto& [x1, w1] : ax1)
      for (const auto& [x2, w2] : ax2) {
        pts(idx, 0) = x1;
        pts(idx, 1) = x2;
        w[idx] = w1 * w2;
        ++idx;
      }
    w /= w.sum();
    return ExpectationEngine::grid(std::move(pts), std::move(w));
  });
}

Eigen::VectorXd game_equality_probs(const Eigen::Vector3d& theta) {
  auto ev = moment_events(theta);
  Eigen::VectorXd out(6);
  for (int r = 0; r < 6; ++r) out[r] = ev[6 + r].prob();
  return out;
}

Eigen::Vector3d estimate_game_theta(const GameConfig& config) {
  Eigen::VectorXd target(6);
  for (int z = 0; z < 3; ++z) {
    target[2 * z] = config.probs(z, 0);
    target[2 * z + 1] = config.probs(z, 1);
  }
  ParameterBox box;
  box.lower.resize(3);
  box.upper.resize(3);
  box.lower << -3.0, -3.0, 1e-3;
  box.upper << 3.0, 3.0, 3.0;
  auto sse = [&](const Eigen::VectorXd& th) {
    if (!(th[2] > 0.0)) return 1e6;
    return (game_equality_probs(th) - target).squaredNorm();
  };
  std::vector<Eigen::VectorXd> starts = low_discrepancy_points(box, 6, 7);
  Eigen::VectorXd s0(3), s1(3);
  s0 << 0.0, 0.0, 1.0;
  s1 << -1.0, -1.0, 0.5;
  starts.push_back(s0);
  starts.push_back(s1);
  NelderMeadOptions nm;
  nm.max_evals = 2500;
  nm.f_tol = 1e-18;
  nm.x_tol = 1e-12;
  Eigen::VectorXd best;
  double best_val = kInf;
  for (const auto& s : starts) {
    Eigen::VectorXd step = 0.25 * (box.upper - box.lower);
    NelderMeadResult r = nelder_mead_minimize(sse, s, step, box, nm);
    NelderMeadResult r2 = nelder_mead_minimize(sse, r.x, (step / 50).eval(), box, nm);
    if (r2.value < best_val) {
      best_val = r2.value;
      best = r2.x;
    }
  }
  if (!(best_val < 1e-3)) throw EstimationError("entry game estimation did not converge");
  return best;
}

double game_counterfactual_mean(const GameConfig& config, const Eigen::Vector3d& theta) {
  auto [m1, m2] = tax_monopoly_rects(config, theta);
  return rect_union_prob(m1, m2);
}

double game_pretax_monopoly_prob(const GameConfig& config, const Eigen::Vector3d& theta) {
  Eigen::VectorXd eq = game_equality_probs(theta);
  return 1.0 - eq[2 * config.z_focus] - eq[2 * config.z_focus + 1];
}

GameLocalMatrices game_local_matrices(const GameConfig& config, const Eigen::Vector3d& theta) {
  check_theta(theta);
  const double b1 = theta[0], b2 = theta[1], dl = theta[2];
  const auto ev = moment_events(theta);
  const ReducedForm rf = game_reduced_form(config);

  // The closed forms require every inequality row slack at (theta, P).
  for (int r = 0; r < 6; ++r) {
    double region = ev[r].prob();
    double observed = -rf.P1[r];
    if (!(region > observed + 1e-6))
      throw CapabilityError("game_local_matrices: inequality row " + std::to_string(r) +
                            " binding; local formulas invalid");
  }
  if (!(config.tau > dl))
    throw CapabilityError("game_local_matrices: requires tau > Delta (disjoint monopoly regions)");

  GameLocalMatrices out;
  const Eigen::VectorXd phat = -rf.P2;  // positive observed (0,0)/(1,1) probabilities
  Eigen::VectorXd pmod(6);
  for (int r = 0; r < 6; ++r) pmod[r] = ev[6 + r].prob();

  // H: derivative of E[h] = phat - p_model(theta) for the six probability rows.
  out.H.setZero(8, 3);
  for (int z = 0; z < 3; ++z) {
    double a1 = -b1 - z, a2 = -b2 - z;          // (0,0) corners
    double c1 = b1 + z - dl, c2 = b2 + z - dl;  // (1,1) corners (complement form)
    out.H(2 * z, 0) = norm_pdf(a1) * norm_cdf(a2);
    out.H(2 * z, 1) = norm_cdf(a1) * norm_pdf(a2);
    out.H(2 * z + 1, 0) = -norm_pdf(c1) * norm_cdf(c2);
    out.H(2 * z + 1, 1) = -norm_cdf(c1) * norm_pdf(c2);
    out.H(2 * z + 1, 2) = norm_pdf(c1) * norm_cdf(c2) + norm_cdf(c1) * norm_pdf(c2);
  }

  // J and kappa for the tax counterfactual at the focus z (disjoint case).
  const double zf = config.z_focus;
  const double q1 = b1 + zf - config.tau, q2 = b2 + zf - config.tau;
  const double r1 = dl - b1 - zf, r2 = dl - b2 - zf;
  out.kappa = norm_cdf(q1) * norm_cdf(r2) + norm_cdf(r1) * norm_cdf(q2);
  out.J.resize(3);
  out.J[0] = norm_pdf(q1) * norm_cdf(r2) - norm_pdf(r1) * norm_cdf(q2);
  out.J[1] = norm_cdf(r1) * norm_pdf(q2) - norm_cdf(q1) * norm_pdf(r2);
  out.J[2] = norm_pdf(r1) * norm_cdf(q2) + norm_cdf(q1) * norm_pdf(r2);

  // V = E[h h']: indicator cross moments with the observed-P centering.
  out.V.setZero(8, 8);
  for (int i = 0; i < 6; ++i) {
    for (int j = i; j < 6; ++j) {
      double cross = ev[6 + i].intersect(ev[6 + j]).prob();
      double v = cross - phat[i] * pmod[j] - phat[j] * pmod[i] + phat[i] * phat[j];
      out.V(i, j) = v;
      out.V(j, i) = v;
    }
  }
  for (int i = 0; i < 6; ++i) {
    const Rect& e = ev[6 + i];
    out.V(i, 6) = -e.u1.partial_mean() * e.u2.prob();
    out.V(i, 7) = -e.u1.prob() * e.u2.partial_mean();
    out.V(6, i) = out.V(i, 6);
    out.V(7, i) = out.V(i, 7);
  }
  out.V(6, 6) = 1.0;
  out.V(7, 7) = 1.0;

  // E[h k] and E[h].
  auto [m1, m2] = tax_monopoly_rects(config, theta);
  out.Ehk.resize(8);
  out.Eh.resize(8);
  for (int i = 0; i < 6; ++i) {
    const Rect& e = ev[6 + i];
    double e_and_k = e.intersect(m1).prob() + e.intersect(m2).prob() -
                     e.intersect(m1).intersect(m2).prob();
    out.Ehk[i] = -e_and_k + phat[i] * out.kappa;
    out.Eh[i] = phat[i] - pmod[i];
  }
  auto u_moment = [](const Rect& r, int axis) {
    return axis == 0 ? r.u1.partial_mean() * r.u2.prob() : r.u1.prob() * r.u2.partial_mean();
  };
  for (int axis = 0; axis < 2; ++axis) {
    double m = u_moment(m1, axis) + u_moment(m2, axis) - u_moment(m1.intersect(m2), axis);
    out.Ehk[6 + axis] = m;
    out.Eh[6 + axis] = 0.0;
  }
  return out;
}

SensitivityReport game_sensitivity(const GameConfig& config, const Eigen::Vector3d& theta) {
  GameLocalMatrices gm = game_local_matrices(config, theta);
  double var_k = gm.kappa * (1.0 - gm.kappa);  // k is an indicator
  Eigen::VectorXd ehk_centered = gm.Ehk - gm.kappa * gm.Eh;
  return assemble_explicit_sensitivity(gm.H, gm.J, gm.V, ehk_centered, var_k, gm.kappa);
}

}  // namespace robustcf
