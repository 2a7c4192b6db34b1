#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "robustcf/csv_svg.hpp"
#include "robustcf/errors.hpp"
#include "robustcf/registry.hpp"

namespace {

using namespace robustcf;

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

struct CommonArgs {
  std::string model;
  std::string config_path;
  std::string out;
  std::string svg;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--model", args.model, "registered model name (entry-game | ddc-kss)");
  cmd->add_option("--config", args.config_path, "JSON config file");
  cmd->add_option("--out", args.out, "output CSV path");
  cmd->add_option("--seed", args.seed, "seed for draws and multistarts")
      ->each([&args](const std::string&) { args.seed_set = true; });
  cmd->add_option("--workers", args.workers, "worker threads (0 = auto)");
}

RunConfig make_config(const CommonArgs& args) {
  RunConfig cfg = args.config_path.empty() ? RunConfig() : RunConfig::load_file(args.config_path);
  if (!args.model.empty()) cfg.model = args.model;
  if (args.seed_set) {
    cfg.seed = args.seed;
    cfg.mc_seed = args.seed;
  }
  if (args.workers > 0) cfg.workers = args.workers;
  if (!args.out.empty()) cfg.out_csv = args.out;
  if (!args.svg.empty()) cfg.out_svg = args.svg;
  cfg.search.solver = cfg.solver;
  cfg.search.seed = cfg.seed;
  cfg.search.workers = resolve_workers(cfg.workers);
  return cfg;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
  auto dot = path.rfind('.');
  if (dot == std::string::npos) return path + suffix;
  return path.substr(0, dot) + suffix + path.substr(dot);
}

int cmd_curve(const CommonArgs& args) {
  RunConfig cfg = make_config(args);
  std::vector<ModelBundle> bundles = build_bundles(cfg);
  for (const ModelBundle& b : bundles) {
    SearchSettings search = cfg.search;
    search.extra_starts.push_back(b.theta_hat);
    if (b.delta_grid.empty()) throw ArgumentError("empty delta grid");
    SensitivityReport sens = b.sensitivity();
    BoundsCurve curve = bounds_curve(*b.model, b.engine, b.kind, b.P, b.delta_grid, search);
    auto extrap = extrapolated_bounds(sens.kappa_hat, sens.s_hat, b.delta_grid);

    std::string csv = curve_csv(curve, extrap);
    std::string csv_path = cfg.out_csv.empty() ? b.model_name + "_curve.csv" : cfg.out_csv;
    std::string svg_path = cfg.out_svg;
    if (bundles.size() > 1) {
      csv_path = with_suffix(csv_path, "_" + b.focus_label);
      if (!svg_path.empty()) svg_path = with_suffix(svg_path, "_" + b.focus_label);
    }
    write_text_file(csv_path, csv);
    std::cout << "model=" << b.model_name << " focus=" << b.focus_label
              << " rows=" << curve.rows.size() << " csv=" << csv_path;
    if (!svg_path.empty()) {
      write_text_file(svg_path, curve_svg(curve, extrap, b.kappa_hat, b.pre_line,
                                          b.model_name + " (" + b.focus_label + ")"));
      std::cout << " svg=" << svg_path;
    }
    std::cout << "\n";
  }
  return 0;
}

int cmd_solve(const CommonArgs& args, double delta) {
  RunConfig cfg = make_config(args);
  std::vector<ModelBundle> bundles = build_bundles(cfg);
  int rc = 0;
  for (const ModelBundle& b : bundles) {
    SearchSettings search = cfg.search;
    search.extra_starts.push_back(b.theta_hat);
    auto [lo, hi] = extreme_counterfactuals(*b.model, b.engine, b.kind, b.P, delta, search);
    std::cout << "model=" << b.model_name << " focus=" << b.focus_label
              << " delta=" << fmt(delta) << " kappa_lower=" << fmt(lo.value)
              << " kappa_upper=" << fmt(hi.value) << " status_lower=" << to_string(lo.kase)
              << " status_upper=" << to_string(hi.kase) << "\n";
    if (lo.kase == CriterionCase::Infeasible || hi.kase == CriterionCase::Infeasible) rc = 2;
  }
  return rc;
}

int cmd_feasible(const CommonArgs& args, const std::vector<double>& theta_in) {
  RunConfig cfg = make_config(args);
  std::vector<ModelBundle> bundles = build_bundles(cfg);
  const ModelBundle& b = bundles.front();
  Eigen::VectorXd theta = b.theta_hat;
  if (!theta_in.empty()) {
    if (static_cast<int>(theta_in.size()) != b.model->theta_box().dim())
      throw ArgumentError("--theta length does not match the model parameter dimension");
    theta = Eigen::Map<const Eigen::VectorXd>(theta_in.data(), theta_in.size());
  }
  if (!b.model->theta_box().contains(theta, 1e-12))
    throw ArgumentError("theta outside the model parameter box");
  DualSolveResult ds = delta_star(*b.model, theta, b.engine, b.kind, b.P, cfg.solver);
  bool feasible = ds.status != SolveStatus::Unbounded && std::isfinite(ds.value);
  std::cout << "model=" << b.model_name << " delta_star=" << fmt(ds.value)
            << " status=" << (feasible ? "feasible" : "infeasible")
            << " solver_status=" << to_string(ds.status) << " iterations=" << ds.iterations
            << "\n";
  return feasible ? 0 : 2;
}

int cmd_sensitivity(const CommonArgs& args) {
  RunConfig cfg = make_config(args);
  std::vector<ModelBundle> bundles = build_bundles(cfg);
  std::ostringstream csv;
  csv << "model,focus,delta,extrap_lower,extrap_upper\n";
  for (const ModelBundle& b : bundles) {
    SensitivityReport sens = b.sensitivity();
    std::cout << "model=" << b.model_name << " focus=" << b.focus_label
              << " kappa_hat=" << fmt(sens.kappa_hat) << " s_hat=" << fmt(sens.s_hat)
              << (sens.ridge_applied ? " ridge=1" : "") << "\n";
    auto extrap = extrapolated_bounds(sens.kappa_hat, sens.s_hat, b.delta_grid);
    for (size_t i = 0; i < b.delta_grid.size(); ++i)
      csv << b.model_name << ',' << b.focus_label << ',' << fmt(b.delta_grid[i]) << ','
          << fmt(extrap[i].first) << ',' << fmt(extrap[i].second) << '\n';
  }
  if (!cfg.out_csv.empty())
    write_text_file(cfg.out_csv, csv.str());
  else
    std::cout << csv.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Counterfactual bounds over divergence neighborhoods"};
  app.require_subcommand(1);

  CommonArgs curve_args, solve_args, feas_args, sens_args;
  double delta = 0.0;
  std::vector<double> theta;

  CLI::App* curve = app.add_subcommand("curve", "sweep a delta grid into a bounds curve");
  add_common(curve, curve_args);
  curve->add_option("--svg", curve_args.svg, "output SVG path");

  CLI::App* solve = app.add_subcommand("solve", "bounds at a single delta");
  add_common(solve, solve_args);
  solve->add_option("--delta", delta, "neighborhood size")->required();

  CLI::App* feas = app.add_subcommand("feasible", "delta* feasibility check at theta");
  add_common(feas, feas_args);
  feas->add_option("--theta", theta, "parameter vector (defaults to the point estimate)")
      ->delimiter(',');

  CLI::App* sens = app.add_subcommand("sensitivity", "local sensitivity and extrapolated bounds");
  add_common(sens, sens_args);

  try {
    app.parse(argc, argv);
    if (curve->parsed()) return cmd_curve(curve_args);
    if (solve->parsed()) return cmd_solve(solve_args, delta);
    if (feas->parsed()) return cmd_feasible(feas_args, theta);
    if (sens->parsed()) return cmd_sensitivity(sens_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
