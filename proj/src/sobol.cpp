#include "robustcf/lowdisc.hpp"

#include <cmath>

#include "robustcf/errors.hpp"
#include "robustcf/rng.hpp"

namespace robustcf {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31,
                           37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79,
                           83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::uint64_t index, int base) {
  double inv_base = 1.0 / base;
  double f = inv_base, value = 0.0;
  while (index > 0) {
    value += f * static_cast<double>(index % base);
    index /= base;
    f *= inv_base;
  }
  return value;
}

}  // namespace

std::vector<Eigen::VectorXd> low_discrepancy_points(const ParameterBox& box, int count,
                                                    std::uint64_t seed) {
  const int dim = box.dim();
  if (dim < 1 || dim > static_cast<int>(sizeof(kPrimes) / sizeof(int)))
    throw ArgumentError("low_discrepancy_points: unsupported dimension");
  std::vector<Eigen::VectorXd> out;
  out.reserve(count);
  Eigen::VectorXd rot(dim);
  for (int j = 0; j < dim; ++j) rot[j] = uniform01(seed, 0x5eedULL + j);
  const std::uint64_t burn = 20;
  for (int i = 0; i < count; ++i) {
    Eigen::VectorXd x(dim);
    for (int j = 0; j < dim; ++j) {
      double u = radical_inverse(burn + i, kPrimes[j]) + rot[j];
      u -= std::floor(u);
      x[j] = box.lower[j] + u * (box.upper[j] - box.lower[j]);
    }
    out.push_back(std::move(x));
  }
  return out;
}

}  // namespace robustcf
