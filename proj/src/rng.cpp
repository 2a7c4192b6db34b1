#include "robustcf/rng.hpp"

#include <cmath>

#include "robustcf/stats.hpp"

namespace robustcf {

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t h = mix64(mix64(seed) ^ counter * 0xda942042e4dd58b5ULL);
  // 53-bit mantissa; shift into (0,1) by centering on half-ulp.
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

double gumbel_draw(std::uint64_t seed, std::uint64_t counter) {
  return -std::log(-std::log(uniform01(seed, counter)));
}

double gaussian_draw(std::uint64_t seed, std::uint64_t counter) {
  return norm_ppf(uniform01(seed, counter));
}

}  // namespace robustcf
