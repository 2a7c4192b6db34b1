#pragma once

#include <cstdint>

namespace robustcf {

// Counter-based generator: draw (seed, counter) -> value is a pure function,
// so streams are reproducible independent of evaluation order.

/// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t z);

/// Uniform draw in the open interval (0,1) from (seed, counter).
double uniform01(std::uint64_t seed, std::uint64_t counter);

/// Standard Gumbel draw via inverse CDF -log(-log V).
double gumbel_draw(std::uint64_t seed, std::uint64_t counter);

/// Standard normal draw via inverse CDF.
double gaussian_draw(std::uint64_t seed, std::uint64_t counter);

}  // namespace robustcf
