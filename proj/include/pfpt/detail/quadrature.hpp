#pragma once

#include <pfpt/errors.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <limits>
#include <string>

namespace pfpt::detail {

/// Adaptive 31-point Gauss-Kronrod on [a, b]; either bound may be infinite.
template <class F>
double integrate(F&& f, double a, double b, double rel_tol = 1e-13, unsigned max_depth = 18) {
  double error = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, max_depth, rel_tol, &error);
  if (!std::isfinite(value)) throw NumericalError("quadrature produced a non-finite value");
  return value;
}

/// Double-exponential quadrature on [0, inf). `max_levels` bounds the number of
/// step halvings; each extra level doubles the node count.
template <class F>
double integrate_half_line(F&& f, double rel_tol = 1e-13, std::size_t max_levels = 9) {
  boost::math::quadrature::exp_sinh<double> integrator(max_levels);
  double error = 0.0;
  double l1 = 0.0;
  std::size_t levels = 0;
  const double value = integrator.integrate(f, rel_tol, &error, &l1, &levels);
  if (!std::isfinite(value)) throw NumericalError("half-line quadrature produced a non-finite value");
  return value;
}

}  // namespace pfpt::detail
