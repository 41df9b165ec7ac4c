#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "isoperim/surface.hpp"

namespace isoperim {

inline constexpr double kHalfPi = std::numbers::pi / 2.0;

// cos and sin of the tangent angle, evaluated through the offset from pi/2.
// At alpha == pi/2 both are exact (0 and 1), so a centered circle is a fixed
// point of the discretized flow rather than an approximate one.
inline double cos_alpha(double alpha) { return -std::sin(alpha - kHalfPi); }
inline double sin_alpha(double alpha) { return std::cos(alpha - kHalfPi); }

/// Second-order jet of an arclength-parametrized curve in polar coordinates.
struct CurveJet2 {
  double r = 1.0;
  double dr = 0.0;
  double d2r = 0.0;
  double dtheta = 0.0;
  double d2theta = 0.0;
};

/// Geodesic curvature from the polar jet (Christoffel-symbol form with unit speed).
inline double curvature_polar(const Surface& s, const CurveJet2& jet) {
  if (!(jet.r > 0.0)) throw std::domain_error("curvature_polar: r must be positive");
  const double h = s.h().value(jet.r);
  const double hp = s.h().derivative(jet.r);
  const double speed2 = jet.dr * jet.dr + h * h * jet.dtheta * jet.dtheta;
  if (std::fabs(speed2 - 1.0) > 1e-8) throw std::invalid_argument("curvature_polar: jet is not unit speed");
  const double tp = jet.dtheta;
  return h * h * hp * tp * tp * tp + 2.0 * hp * jet.dr * jet.dr * tp + h * (jet.dr * jet.d2theta - tp * jet.d2r);
}

/// kappa = (h'/h)(r) sin(alpha) + alpha'
inline double curvature_alpha(const Surface& s, double r, double alpha, double alpha_prime) {
  if (!(r > 0.0)) throw std::domain_error("curvature_alpha: r must be positive");
  return s.h().dlog(r) * sin_alpha(alpha) + alpha_prime;
}

/// kappa_f = (log fh)'(r) sin(alpha) + alpha'
inline double generalized_curvature(const Surface& s, double r, double alpha, double alpha_prime) {
  if (!(r > 0.0)) throw std::domain_error("generalized_curvature: r must be positive");
  return logderiv_fh(s, r) * sin_alpha(alpha) + alpha_prime;
}

}  // namespace isoperim
