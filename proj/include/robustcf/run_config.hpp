#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "robustcf/ddc.hpp"
#include "robustcf/entry_game.hpp"
#include "robustcf/outer_bounds.hpp"

namespace robustcf {

/// Experiment configuration: a JSON file with embedded defaults so that
/// `curve --model entry-game` runs with no config at all.
struct RunConfig {
  std::string model = "entry-game";
  std::string divergence;            // empty -> model default
  std::vector<double> delta_grid;    // empty -> model default

  std::string engine_type;           // "closed-form" | "grid" | "mc"; empty -> default
  long mc_n = 100000;
  long mc_sensitivity_n = 1000000;
  std::uint64_t mc_seed = 1234;
  int grid_per_axis = 200;
  double grid_half_width = 8.0;

  SolverSettings solver;
  SearchSettings search;
  std::uint64_t seed = 1234;
  int workers = 0;                   // 0 = auto (env/hardware)

  std::string out_csv;
  std::string out_svg;

  GameConfig game = GameConfig::defaults();
  DdcConfig ddc = DdcConfig::defaults();
  std::vector<int> ddc_focus_states{0, 1};  // (H,0) and (M,0) entry CCPs

  static RunConfig load_file(const std::string& path);
  static RunConfig from_json_text(const std::string& text);
};

int resolve_workers(int configured);

}  // namespace robustcf
