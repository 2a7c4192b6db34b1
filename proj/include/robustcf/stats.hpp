#pragma once

#include <utility>
#include <vector>

namespace robustcf {

/// Standard normal CDF (erfc-based, full double accuracy).
double norm_cdf(double x);

/// Standard normal PDF.
double norm_pdf(double x);

/// Inverse standard normal CDF. Acklam's rational approximation polished by
/// one Halley step against erfc, accurate to ~1e-15 over (0,1).
double norm_ppf(double p);

/// Standard Gumbel (type-I extreme value) density exp(-x - exp(-x)).
double gumbel_pdf(double x);

/// Logistic density e^{-x}/(1+e^{-x})^2 of the difference of two independent
/// standard Gumbels.
double logistic_pdf(double x);

/// Logistic CDF 1/(1+e^{-x}).
double logistic_cdf(double x);

/// Euler-Mascheroni constant.
inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussLegendre& gauss_legendre(int n);

}  // namespace robustcf
