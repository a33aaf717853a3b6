#pragma once

#include <cmath>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <fmt/format.h>

#include "mmwlab/errors.hpp"

namespace mmwlab {

struct QuadratureSettings {
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  unsigned max_depth = 25;
};

/// Adaptive 21-point Gauss-Kronrod on [a, b]. Throws NumericError when the
/// error estimate exceeds both tolerances.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureSettings& settings) {
  if (a == b) return 0.0;
  using Rule = boost::math::quadrature::gauss_kronrod<double, 21>;
  double error = 0.0;
  double l1 = 0.0;
  const double value = Rule::integrate(f, a, b, settings.max_depth, settings.rel_tol, &error, &l1);
  // The Kronrod-Gauss difference overestimates the true error for smooth
  // integrands; allow it to sit slightly above the nominal relative target.
  const double allowed = std::max(settings.abs_tol, 4.0 * settings.rel_tol * l1);
  if (!std::isfinite(value) || error > allowed) {
    throw NumericError(fmt::format("quadrature on [{}, {}] reached error {:.3g} (allowed {:.3g})",
                                   a, b, error, allowed),
                       error);
  }
  return value;
}

}  // namespace mmwlab
