#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "robustcf/moment_model.hpp"

namespace robustcf {

/// Low-discrepancy start points over a box: Halton radical-inverse points with
/// a seed-keyed Cranley-Patterson rotation. Deterministic in (dim, count,
/// seed).
std::vector<Eigen::VectorXd> low_discrepancy_points(const ParameterBox& box, int count,
                                                    std::uint64_t seed);

}  // namespace robustcf
