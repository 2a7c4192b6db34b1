#include "robustcf/registry.hpp"

#include <cmath>

#include "robustcf/errors.hpp"
#include "robustcf/stats.hpp"

namespace robustcf {

namespace {

ExpectationEngine ddc_gumbel_grid(int per_axis) {
  // Tensor grid of 1-D Gumbel midpoint cells on a range carrying all but
  // ~1e-9 of the mass.
  const double lo = -4.0, hi = 16.0;
  const double h = (hi - lo) / per_axis;
  Eigen::VectorXd axis(per_axis), axis_w(per_axis);
  for (int i = 0; i < per_axis; ++i) {
    axis[i] = lo + (i + 0.5) * h;
    axis_w[i] = gumbel_pdf(axis[i]);
  }
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(per_axis) * per_axis, 2);
  Eigen::VectorXd w(pts.rows());
  Eigen::Index idx = 0;
  for (int i = 0; i < per_axis; ++i)
    for (int j = 0; j < per_axis; ++j) {
      pts(idx, 0) = axis[i];
      pts(idx, 1) = axis[j];
      w[idx] = axis_w[i] * axis_w[j];
      ++idx;
    }
  w /= w.sum();
  return ExpectationEngine::grid(std::move(pts), std::move(w));
}

std::vector<double> default_game_grid() {
  return {0.001, 0.0025, 0.005, 0.01, 0.02, 0.035, 0.05, 0.075, 0.1, 0.125,
          0.15,  0.2,    0.25,  0.3,  0.4,  0.5,   0.65, 0.8,   1.0, 1.25};
}

std::vector<double> default_ddc_grid() {
  return {0.005, 0.01, 0.015, 0.02, 0.025, 0.03, 0.04, 0.05,
          0.065, 0.08, 0.1,   0.125, 0.15, 0.2,  0.25, 0.3};
}

ModelBundle build_game_bundle(const RunConfig& cfg) {
  ModelBundle b;
  b.model_name = "entry-game";
  b.focus_label = "z" + std::to_string(cfg.game.z_focus);
  b.model = build_game_model(cfg.game);
  b.P = game_reduced_form(cfg.game);
  b.kind = DivergenceKind::parse(cfg.divergence.empty() ? "kl" : cfg.divergence);
  b.delta_grid = cfg.delta_grid.empty() ? default_game_grid() : cfg.delta_grid;

  std::string etype = cfg.engine_type.empty() ? "closed-form" : cfg.engine_type;
  if (etype == "closed-form") {
    if (b.kind.family() != DivergenceFamily::KL)
      etype = "grid";  // the analytic cells only represent the KL objectives
    else
      b.engine = EngineSource(game_closed_form_engine(cfg.game));
  }
  if (etype == "grid")
    b.engine = EngineSource(make_gaussian_grid(cfg.grid_per_axis, cfg.grid_half_width, 2));
  else if (etype == "mc")
    b.engine =
        EngineSource(ExpectationEngine::monte_carlo(make_gaussian_draws(cfg.mc_n, 2, cfg.mc_seed)));
  else if (etype != "closed-form")
    throw ArgumentError("entry-game: unknown engine type '" + etype + "'");

  Eigen::Vector3d theta = estimate_game_theta(cfg.game);
  b.theta_hat = theta;
  b.kappa_hat = game_counterfactual_mean(cfg.game, theta);
  b.pre_line = 1.0 - cfg.game.probs(cfg.game.z_focus, 0) - cfg.game.probs(cfg.game.z_focus, 1);
  GameConfig gc = cfg.game;
  b.sensitivity = [gc, theta]() { return game_sensitivity(gc, theta); };
  return b;
}

std::vector<ModelBundle> build_ddc_bundles(const RunConfig& cfg) {
  std::vector<ModelBundle> out;
  DdcTheta theta_hat = estimate_ddc_theta(cfg.ddc.ccps, cfg.ddc);
  Eigen::Matrix<double, 6, 1> cf_ccps = counterfactual_ccps(cfg.ddc, theta_hat);
  static const char* kStateNames[] = {"high", "medium", "low",
                                      "high-incumbent", "medium-incumbent", "low-incumbent"};
  for (int focus : cfg.ddc_focus_states) {
    if (focus < 0 || focus >= 6) throw ArgumentError("ddc focus state out of range");
    ModelBundle b;
    b.model_name = "ddc-kss";
    b.focus_label = kStateNames[focus];
    DdcConfig dc = cfg.ddc;
    dc.focus_state = focus;
    b.model = build_ddc_model(dc, theta_hat);
    b.P = ddc_reduced_form(dc.ccps);
    b.kind = DivergenceKind::parse(cfg.divergence.empty() ? "hybrid" : cfg.divergence);
    b.delta_grid = cfg.delta_grid.empty() ? default_ddc_grid() : cfg.delta_grid;

    std::string etype = cfg.engine_type.empty() ? "mc" : cfg.engine_type;
    if (etype == "mc")
      b.engine = EngineSource(
          ExpectationEngine::monte_carlo(make_gumbel_draws(cfg.mc_n, 2, cfg.mc_seed)));
    else if (etype == "grid")
      b.engine = EngineSource(ddc_gumbel_grid(cfg.grid_per_axis));
    else
      throw ArgumentError("ddc-kss: unknown engine type '" + etype + "'");

    b.theta_hat = theta_hat.stacked();
    b.kappa_hat = cf_ccps[focus];
    b.pre_line = dc.ccps[focus];
    long sens_n = cfg.mc_sensitivity_n;
    std::uint64_t seed = cfg.mc_seed;
    b.sensitivity = [dc, theta_hat, sens_n, seed]() {
      ExpectationEngine eng =
          ExpectationEngine::monte_carlo(make_gumbel_draws(sens_n, 2, seed));
      return ddc_sensitivity(dc, theta_hat, eng);
    };
    out.push_back(std::move(b));
  }
  return out;
}

}  // namespace

std::vector<std::string> registered_models() { return {"entry-game", "ddc-kss"}; }

std::vector<ModelBundle> build_bundles(const RunConfig& config) {
  if (config.model == "entry-game") return {build_game_bundle(config)};
  if (config.model == "ddc-kss") return build_ddc_bundles(config);
  throw ArgumentError("unknown model '" + config.model + "'; registered: entry-game, ddc-kss");
}

}  // namespace robustcf
