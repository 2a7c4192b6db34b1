#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace robustcf {

enum class DivergenceFamily { KL, ChiSquared, CressieRead, Hybrid };

/// A member of the phi-divergence family. Every variant satisfies
/// phi(1) = phi'(1) = 0, strict convexity on (0,inf), and phi(x) = +inf
/// for x < 0.
class DivergenceKind {
 public:
  static DivergenceKind kl() { return DivergenceKind(DivergenceFamily::KL, 0.0); }
  static DivergenceKind chi_squared() {
    return DivergenceKind(DivergenceFamily::ChiSquared, 2.0);
  }
  static DivergenceKind cressie_read(double p);
  static DivergenceKind hybrid() { return DivergenceKind(DivergenceFamily::Hybrid, 0.0); }

  /// Parses "kl", "chi2", "cressie-read:<p>", "hybrid".
  static DivergenceKind parse(const std::string& token);

  DivergenceFamily family() const { return family_; }
  double cressie_read_p() const { return p_; }
  std::string token() const;

  /// KL admits analytic profiling of the unit-mass multiplier.
  bool profiles_zeta() const { return family_ == DivergenceFamily::KL; }

 private:
  DivergenceKind(DivergenceFamily f, double p) : family_(f), p_(p) {}
  DivergenceFamily family_;
  double p_;
};

/// phi(x); +inf for x < 0, finite at x = 0.
double phi(const DivergenceKind& kind, double x);

/// Convex conjugate phi*(y) = sup_{t >= 0, phi(t) < inf} (t y - phi(t)).
double phi_conjugate(const DivergenceKind& kind, double y);

/// d/dy phi*(y); equals the density ratio attaining the conjugate supremum.
double phi_conjugate_derivative(const DivergenceKind& kind, double y);

/// (eta phi)*(y). For eta > 0 this is eta * phi*(y/eta); for eta = 0 it is the
/// support function of [0, inf): 0 if y <= 0, +inf otherwise.
double scaled_conjugate(const DivergenceKind& kind, double eta, double y);

/// d/dy (eta phi)*(y) = phi*'(y/eta), eta > 0. Always >= 0.
double scaled_conjugate_derivative(const DivergenceKind& kind, double eta, double y);

/// D_phi of the reweighting with density ratio values m against base weights.
/// Weights must be nonnegative and sum to 1 within 1e-12.
double divergence_of(const DivergenceKind& kind, const Eigen::VectorXd& m_values,
                     const Eigen::VectorXd& weights);

/// Advisory tail-compatibility diagnostic for integrand samples drawn from
/// the benchmark distribution. Never blocks a solve.
struct CompatibilityReport {
  bool pass = true;
  std::vector<std::string> notes;
};
CompatibilityReport check_moment_compatibility(const DivergenceKind& kind,
                                               const Eigen::VectorXd& f_samples);

}  // namespace robustcf
