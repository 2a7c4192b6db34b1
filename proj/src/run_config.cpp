#include "robustcf/run_config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "robustcf/errors.hpp"

namespace robustcf {

namespace {

using nlohmann::json;

void parse_solver(const json& j, SolverSettings& s) {
  s.grad_tol = j.value("grad_tol", s.grad_tol);
  s.max_iter = j.value("max_iter", s.max_iter);
  s.eta_floor = j.value("eta_floor", s.eta_floor);
  s.knife_tol = j.value("knife_tol", s.knife_tol);
  s.multistart_count = j.value("multistart_count", s.multistart_count);
}

void parse_search(const json& j, SearchSettings& s) {
  s.multistarts = j.value("multistarts", s.multistarts);
  s.max_local = j.value("max_local", s.max_local);
  s.max_evals = j.value("max_evals", s.max_evals);
  s.f_tol = j.value("f_tol", s.f_tol);
  s.x_tol = j.value("x_tol", s.x_tol);
  s.step_frac = j.value("step_frac", s.step_frac);
  s.delta_scaled_steps = j.value("delta_scaled_steps", s.delta_scaled_steps);
  s.refine_rounds = j.value("refine_rounds", s.refine_rounds);
}

std::vector<double> parse_delta_grid(const json& j) {
  std::vector<double> grid;
  if (j.is_array()) {
    for (const auto& v : j) grid.push_back(v.get<double>());
  } else if (j.is_object() && j.contains("geometric")) {
    const auto& g = j.at("geometric");
    double lo = g.at("lo").get<double>();
    double hi = g.at("hi").get<double>();
    int count = g.at("count").get<int>();
    if (!(lo > 0.0 && hi > lo && count >= 2))
      throw ArgumentError("delta_grid.geometric requires 0 < lo < hi and count >= 2");
    for (int i = 0; i < count; ++i)
      grid.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1)));
  } else {
    throw ArgumentError("delta_grid must be an array or {geometric:{lo,hi,count}}");
  }
  return grid;
}

RunConfig parse(const json& j) {
  RunConfig cfg;
  cfg.model = j.value("model", cfg.model);
  cfg.divergence = j.value("divergence", cfg.divergence);
  if (j.contains("delta_grid")) cfg.delta_grid = parse_delta_grid(j.at("delta_grid"));

  if (j.contains("engine")) {
    const auto& e = j.at("engine");
    cfg.engine_type = e.value("type", cfg.engine_type);
    if (e.contains("mc")) {
      cfg.mc_n = e.at("mc").value("n", cfg.mc_n);
      cfg.mc_seed = e.at("mc").value("seed", cfg.mc_seed);
      cfg.mc_sensitivity_n = e.at("mc").value("sensitivity_n", cfg.mc_sensitivity_n);
    }
    if (e.contains("grid")) {
      cfg.grid_per_axis = e.at("grid").value("per_axis", cfg.grid_per_axis);
      cfg.grid_half_width = e.at("grid").value("half_width", cfg.grid_half_width);
    }
  }
  if (j.contains("solver")) parse_solver(j.at("solver"), cfg.solver);
  if (j.contains("search")) parse_search(j.at("search"), cfg.search);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.workers = j.value("workers", cfg.workers);
  cfg.out_csv = j.value("out", cfg.out_csv);
  cfg.out_svg = j.value("svg", cfg.out_svg);

  if (j.contains("entry_game")) {
    const auto& g = j.at("entry_game");
    cfg.game.tau = g.value("tau", cfg.game.tau);
    cfg.game.z_focus = g.value("z_focus", cfg.game.z_focus);
    if (g.contains("probs")) {
      const auto& p = g.at("probs");
      if (!p.is_array() || p.size() != 3)
        throw ArgumentError("entry_game.probs must be a 3x4 array");
      for (int z = 0; z < 3; ++z)
        for (int c = 0; c < 4; ++c) cfg.game.probs(z, c) = p.at(z).at(c).get<double>();
    }
  }
  if (j.contains("ddc")) {
    const auto& d = j.at("ddc");
    cfg.ddc.beta = d.value("beta", cfg.ddc.beta);
    cfg.ddc.scrap = d.value("scrap", cfg.ddc.scrap);
    cfg.ddc.subsidy = d.value("subsidy", cfg.ddc.subsidy);
    if (d.contains("demand_intercepts"))
      for (int i = 0; i < 3; ++i)
        cfg.ddc.demand_intercepts[i] = d.at("demand_intercepts").at(i).get<double>();
    if (d.contains("q"))
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cfg.ddc.q(r, c) = d.at("q").at(r).at(c).get<double>();
    if (d.contains("ccps"))
      for (int i = 0; i < 6; ++i) cfg.ddc.ccps[i] = d.at("ccps").at(i).get<double>();
    if (d.contains("focus_states")) {
      cfg.ddc_focus_states.clear();
      for (const auto& f : d.at("focus_states")) {
        if (f.is_number_integer()) {
          cfg.ddc_focus_states.push_back(f.get<int>());
        } else {
          std::string name = f.get<std::string>();
          if (name == "high") cfg.ddc_focus_states.push_back(0);
          else if (name == "medium") cfg.ddc_focus_states.push_back(1);
          else if (name == "low") cfg.ddc_focus_states.push_back(2);
          else throw ArgumentError("ddc.focus_states: unknown state '" + name + "'");
        }
      }
    }
  }
  return cfg;
}

}  // namespace

RunConfig RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

RunConfig RunConfig::from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ArgumentError(std::string("config parse error: ") + e.what());
  }
  return parse(j);
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("ROBUSTCF_WORKERS")) {
    int w = std::atoi(env);
    if (w > 0) return w;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

}  // namespace robustcf
