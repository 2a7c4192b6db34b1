#pragma once

#include <string>
#include <vector>

#include "robustcf/outer_bounds.hpp"

namespace robustcf {

/// One row per delta: delta, bounds, arg-thetas, status codes (with "+env"
/// when monotone enforcement fired), inner iteration counts, and the
/// local-sensitivity extrapolation columns.
std::string curve_csv(const BoundsCurve& curve,
                      const std::vector<std::pair<double, double>>& extrap);

/// Fixed 800x600 line chart: solid bound curves, dashed benchmark
/// counterfactual, dotted pre-intervention level, dot-dashed extrapolation.
std::string curve_svg(const BoundsCurve& curve,
                      const std::vector<std::pair<double, double>>& extrap, double kappa_hat,
                      double pre_line, const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace robustcf
