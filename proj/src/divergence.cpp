#include "robustcf/divergence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "robustcf/errors.hpp"

namespace robustcf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// e^y overflows double range well before 710; treat as +inf beyond this.
constexpr double kExpCap = 700.0;

double guarded_exp(double y) { return y > kExpCap ? kInf : std::exp(y); }
}  // namespace

DivergenceKind DivergenceKind::cressie_read(double p) {
  if (!(p > 1.0)) throw ArgumentError("CressieRead requires p > 1");
  return DivergenceKind(DivergenceFamily::CressieRead, p);
}

DivergenceKind DivergenceKind::parse(const std::string& token) {
  if (token == "kl") return kl();
  if (token == "chi2") return chi_squared();
  if (token == "hybrid") return hybrid();
  const std::string prefix = "cressie-read:";
  if (token.rfind(prefix, 0) == 0) {
    double p = std::stod(token.substr(prefix.size()));
    return cressie_read(p);
  }
  throw ArgumentError("unknown divergence token: " + token);
}

std::string DivergenceKind::token() const {
  switch (family_) {
    case DivergenceFamily::KL: return "kl";
    case DivergenceFamily::ChiSquared: return "chi2";
    case DivergenceFamily::Hybrid: return "hybrid";
    case DivergenceFamily::CressieRead: {
      std::ostringstream os;
      os << "cressie-read:" << p_;
      return os.str();
    }
  }
  return "?";
}

double phi(const DivergenceKind& kind, double x) {
  if (x < 0.0) return kInf;
  switch (kind.family()) {
    case DivergenceFamily::KL:
      if (x == 0.0) return 1.0;
      return x * std::log(x) - x + 1.0;
    case DivergenceFamily::ChiSquared:
      return 0.5 * (x - 1.0) * (x - 1.0);
    case DivergenceFamily::CressieRead: {
      double p = kind.cressie_read_p();
      return (std::pow(x, p) - 1.0 - p * (x - 1.0)) / (p * (p - 1.0));
    }
    case DivergenceFamily::Hybrid: {
      const double e = M_E;
      if (x <= e) {
        if (x == 0.0) return 1.0;
        return x * std::log(x) - x + 1.0;
      }
      double d = x - e;
      return 0.5 / e * d * d + d + 1.0;
    }
  }
  return kInf;
}

double phi_conjugate(const DivergenceKind& kind, double y) {
  switch (kind.family()) {
    case DivergenceFamily::KL:
      return guarded_exp(y) - 1.0;
    case DivergenceFamily::ChiSquared:
      // Supremum over t >= 0 flattens the quadratic at -1/2 for y <= -1.
      return y <= -1.0 ? -0.5 : y + 0.5 * y * y;
    case DivergenceFamily::CressieRead: {
      double p = kind.cressie_read_p();
      double a = 1.0 + (p - 1.0) * y;
      if (a <= 0.0) return -1.0 / p;
      return (std::pow(a, p / (p - 1.0)) - 1.0) / p;
    }
    case DivergenceFamily::Hybrid:
      if (y <= 1.0) return std::exp(y) - 1.0;
      return 0.5 * M_E * (y * y + 1.0) - 1.0;
  }
  return kInf;
}

double phi_conjugate_derivative(const DivergenceKind& kind, double y) {
  switch (kind.family()) {
    case DivergenceFamily::KL:
      return guarded_exp(y);
    case DivergenceFamily::ChiSquared:
      return y <= -1.0 ? 0.0 : 1.0 + y;
    case DivergenceFamily::CressieRead: {
      double p = kind.cressie_read_p();
      double a = 1.0 + (p - 1.0) * y;
      if (a <= 0.0) return 0.0;
      return std::pow(a, 1.0 / (p - 1.0));
    }
    case DivergenceFamily::Hybrid:
      if (y <= 1.0) return std::exp(y);
      return M_E * y;
  }
  return 0.0;
}

double scaled_conjugate(const DivergenceKind& kind, double eta, double y) {
  if (eta < 0.0) throw ArgumentError("scaled_conjugate requires eta >= 0");
  if (eta == 0.0) return y <= 0.0 ? 0.0 : kInf;
  return eta * phi_conjugate(kind, y / eta);
}

double scaled_conjugate_derivative(const DivergenceKind& kind, double eta, double y) {
  if (!(eta > 0.0)) throw ArgumentError("scaled_conjugate_derivative requires eta > 0");
  return phi_conjugate_derivative(kind, y / eta);
}

double divergence_of(const DivergenceKind& kind, const Eigen::VectorXd& m_values,
                     const Eigen::VectorXd& weights) {
  if (m_values.size() != weights.size())
    throw ArgumentError("divergence_of: m_values/weights length mismatch");
  if ((weights.array() < 0.0).any())
    throw ArgumentError("divergence_of: negative weight");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw ArgumentError("divergence_of: weights must sum to 1");
  double total = 0.0;
  for (Eigen::Index i = 0; i < m_values.size(); ++i) {
    if (weights[i] == 0.0) continue;
    total += weights[i] * phi(kind, m_values[i]);
  }
  return total;
}

CompatibilityReport check_moment_compatibility(const DivergenceKind& kind,
                                               const Eigen::VectorXd& f_samples) {
  CompatibilityReport report;
  const Eigen::Index n = f_samples.size();
  if (n < 4) {
    report.notes.push_back("too few samples for a diagnostic");
    return report;
  }
  if (kind.family() == DivergenceFamily::KL) {
    // KL compatibility needs E[e^{c|f|}] < inf for every c; probe growing c
    // and flag overflow or a sum dominated by its largest term.
    for (double c : {1.0, 2.0, 4.0}) {
      double sum = 0.0, max_term = 0.0;
      bool overflow = false;
      for (Eigen::Index i = 0; i < n; ++i) {
        double t = guarded_exp(c * std::abs(f_samples[i]));
        if (!std::isfinite(t)) {
          overflow = true;
          break;
        }
        sum += t;
        max_term = std::max(max_term, t);
      }
      if (overflow) {
        report.pass = false;
        std::ostringstream os;
        os << "E[exp(" << c << "|f|)] overflows";
        report.notes.push_back(os.str());
        break;
      }
      if (max_term > 0.5 * sum) {
        report.pass = false;
        std::ostringstream os;
        os << "E[exp(" << c << "|f|)] dominated by a single sample; "
           << "exponential moment likely diverges";
        report.notes.push_back(os.str());
        break;
      }
    }
    if (report.pass) report.notes.push_back("exponential moments stable");
  } else {
    // Hybrid / chi^2 / Cressie-Read only need polynomial moments; check the
    // second moment is finite and stable when the sample doubles.
    Eigen::Index h = n / 2;
    double m2_half = f_samples.head(h).array().square().mean();
    double m2_full = f_samples.array().square().mean();
    if (!std::isfinite(m2_full)) {
      report.pass = false;
      report.notes.push_back("second moment non-finite");
    } else if (m2_half > 0.0 &&
               std::abs(m2_full - m2_half) > 0.5 * std::max(m2_half, 1e-300)) {
      report.pass = false;
      report.notes.push_back("second moment unstable under sample doubling");
    } else {
      report.notes.push_back("second moment finite and stable");
    }
  }
  return report;
}

}  // namespace robustcf
