#pragma once

// Scalar special functions used by the density formulas: parabolic cylinder
// functions of integer order <= 1 at real argument, the exponential integral
// E1 (real, and the scaled complex product e^z E1(z)), Gamma densities, and the
// Brownian first-passage density.

#include <pfpt/errors.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace pfpt {

using Complex = std::complex<double>;

inline constexpr double kEulerGamma = 0.57721566490153286060651209008240243;

namespace detail {

/// erfcx(x) = exp(x^2) erfc(x) for x >= 0.
inline double erfcx(double x) {
  if (x < 5.0) return std::exp(x * x) * std::erfc(x);
  // Laplace continued fraction, evaluated bottom-up. 60 levels give full
  // double precision for x >= 5.
  double tail = 0.0;
  for (int k = 60; k >= 1; --k) tail = (0.5 * k) / (x + tail);
  return 1.0 / (std::sqrt(std::numbers::pi) * (x + tail));
}

}  // namespace detail

/// Fills out[k] = e^{z^2/4} D_{1-k}(z) for k = 0 .. out.size()-1.
///
/// Seeds are D_1, D_0 and D_{-1} = e^{z^2/4} sqrt(pi/2) erfc(z/sqrt 2). Lower
/// orders use the order recurrence D_{v+1} - z D_v + v D_{v-1} = 0. For z <= 1
/// it runs downward in order from the seeds. Above z = 1 the downward direction
/// loses about one digit per order, so the minimal solution is taken by
/// backward (Miller) recurrence and normalized to the D_{-1} seed.
inline void pcf_d_scaled_table(double z, std::span<double> out) {
  const std::size_t count = out.size();
  if (count == 0) return;
  out[0] = z;
  if (count == 1) return;
  out[1] = 1.0;
  if (count == 2) return;
  const double dm1 =
      z >= 0.0 ? std::sqrt(std::numbers::pi / 2.0) * detail::erfcx(z / std::numbers::sqrt2)
               : std::exp(0.5 * z * z) * std::sqrt(std::numbers::pi / 2.0) * std::erfc(z / std::numbers::sqrt2);
  out[2] = dm1;
  if (count == 3) return;

  if (z <= 1.0) {
    // out[k] holds order v = 1-k; D_{v-1} = (z D_v - D_{v+1}) / v.
    for (std::size_t k = 3; k < count; ++k) {
      const double v = 2.0 - static_cast<double>(k);
      out[k] = (z * out[k - 1] - out[k - 2]) / v;
    }
    return;
  }

  // Backward recurrence in n = -order: D_{-n+1} = z D_{-n} + n D_{-n-1}.
  // out[n + 1] holds D_{-n}.
  const int n_max = static_cast<int>(count) - 2;
  const int n_start = n_max + 40 + static_cast<int>(std::ceil(600.0 / (z * z)));
  double below = 0.0;      // D_{-(n+1)}, unnormalized
  double current = 1e-300;  // D_{-n}, unnormalized
  for (int n = n_start; n >= 2; --n) {
    if (n <= n_max) out[static_cast<std::size_t>(n + 1)] = current;
    const double above = z * current + n * below;
    below = current;
    current = above;
    if (std::abs(current) > 1e250) {
      current *= 1e-250;
      below *= 1e-250;
      for (int m = std::max(n, 2); m <= n_max; ++m) out[static_cast<std::size_t>(m + 1)] *= 1e-250;
    }
  }
  const double scale = dm1 / current;
  for (std::size_t k = 3; k < count; ++k) out[k] *= scale;
}

/// Parabolic cylinder function D_order(z) for integer order <= 1.
inline double pcf_d(int order, double z) {
  if (order > 1) throw DomainError("pcf_d: order " + std::to_string(order) + " > 1 is not supported");
  const auto count = static_cast<std::size_t>(2 - order);
  std::array<double, 64> buffer{};
  std::vector<double> heap;
  std::span<double> table(buffer.data(), std::min(count, buffer.size()));
  if (count > buffer.size()) {
    heap.resize(count);
    table = heap;
  }
  pcf_d_scaled_table(z, table);
  return table.back() * std::exp(-0.25 * z * z);
}

/// Exponential integral E1(x), x > 0.
inline double e1(double x) {
  if (!(x > 0.0)) throw DomainError("e1: argument must be positive");
  if (x <= 1.0) {
    double sum = 0.0;
    double term = 1.0;
    for (int k = 1; k < 60; ++k) {
      term *= -x / k;
      const double add = -term / k;
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return -kEulerGamma - std::log(x) + sum;
  }
  // Modified Lentz on the Legendre continued fraction.
  constexpr double tiny = 1e-300;
  double b = x + 1.0;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = 1.0 / (an * d + b);
    c = b + an / c;
    const double del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return h * std::exp(-x);
}

/// e^z E1(z) for complex z with Re(z) > 0, evaluated as one product so that
/// large |z| along an inversion contour neither overflows nor underflows.
inline Complex e1_scaled(Complex z) {
  if (!(z.real() > 0.0)) throw DomainError("e1_scaled: Re(z) must be positive");
  if (std::abs(z) < 1.5) {
    Complex sum = 0.0;
    Complex term = 1.0;
    for (int k = 1; k < 80; ++k) {
      term *= -z / static_cast<double>(k);
      const Complex add = -term / static_cast<double>(k);
      sum += add;
      if (std::abs(add) < 1e-17 * std::abs(sum)) break;
    }
    return std::exp(z) * (-kEulerGamma - std::log(z) + sum);
  }
  constexpr double tiny = 1e-300;
  Complex b = z + 1.0;
  Complex c = 1.0 / tiny;
  Complex d = 1.0 / b;
  Complex h = d;
  for (int i = 1; i < 5000; ++i) {
    const double an = -static_cast<double>(i) * i;
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const Complex del = c * d;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) return h;
  }
  throw NumericalError("e1_scaled: continued fraction did not converge");
}

/// Gamma(shape, rate) density at y >= 0.
inline double gamma_density(double y, double shape, double rate) {
  if (!(shape > 0.0) || !(rate > 0.0)) throw DomainError("gamma_density: shape and rate must be positive");
  if (y < 0.0) throw DomainError("gamma_density: y must be non-negative");
  if (y == 0.0) {
    if (shape < 1.0) return std::numeric_limits<double>::infinity();
    return shape == 1.0 ? rate : 0.0;
  }
  return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(y) - rate * y - std::lgamma(shape));
}

/// Density at t of the first time a standard Brownian motion travels distance `level`.
inline double inv_gaussian_fptd(double level, double t) {
  if (!(level > 0.0) || !(t > 0.0)) throw DomainError("inv_gaussian_fptd: level and t must be positive");
  return level / std::sqrt(2.0 * std::numbers::pi) * std::pow(t, -1.5) * std::exp(-level * level / (2.0 * t));
}

/// Principal square root of 2*beta for Re(beta) > 0.
inline Complex complex_sqrt_2beta(Complex beta) {
  if (!(beta.real() > 0.0)) throw DomainError("complex_sqrt_2beta: Re(beta) must be positive");
  return std::sqrt(2.0 * beta);
}

/// True when beta lies on the closed cut (-inf, 0] of the principal square root.
inline bool on_branch_cut(Complex beta) { return beta.imag() == 0.0 && beta.real() <= 0.0; }

/// Principal square root of 2*beta anywhere off the branch cut; used when
/// a transform is continued into the left half-plane for contour inversion.
inline Complex sqrt_2beta_cut_plane(Complex beta) {
  if (on_branch_cut(beta)) throw DomainError("beta lies on the branch cut (-inf, 0]");
  return std::sqrt(2.0 * beta);
}

}  // namespace pfpt
