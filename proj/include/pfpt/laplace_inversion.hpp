#pragma once

// Reference machinery for validating the closed-form densities:
//   * fixed-Talbot numerical inversion of a Laplace transform,
//   * the exact hitting-time transform E_x[e^{-beta tau}] from a finite-difference
//     solve of (1/2) f'' + eps h(x) f' = beta f, f(barrier) = 1, f(inf) = 0,
//   * the first-order perturbation term for an arbitrary drift shape h, by
//     nested quadrature.

#include <pfpt/detail/parallel.hpp>
#include <pfpt/detail/quadrature.hpp>
#include <pfpt/errors.hpp>
#include <pfpt/process.hpp>
#include <pfpt/special_functions.hpp>

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

namespace pfpt {

/// A Laplace transform beta -> F(beta). Evaluators are defined on the plane cut
/// along (-inf, 0]; the Talbot contour visits the left half-plane.
struct LtCallable {
  std::function<Complex(Complex)> eval;
  bool concurrent_safe = false;  ///< eval may be called from several threads at once
};

/// Fixed Talbot inversion with `nodes` contour points, using the cotangent contour
///
///   z(theta) = (M / t) (-0.6122 + 0.5017 theta cot(0.6407 theta) + 0.2645 i theta),  |theta| < pi,
///
/// and the midpoint rule in theta. Conjugate symmetry F(conj z) = conj F(z)
/// halves the number of transform evaluations. The contour keeps the growth of
/// e^{zt} near e^{0.17 M}, so evaluation error is amplified only mildly.
inline double talbot_invert(const LtCallable& f, double t, int nodes = 32, unsigned threads = 1) {
  if (!(t > 0.0)) throw DomainError("talbot_invert: t must be positive");
  if (nodes < 16) throw DomainError("talbot_invert: need at least 16 nodes");
  if (nodes % 2 != 0) ++nodes;
  constexpr double shift = -0.6122;
  constexpr double scale = 0.5017;
  constexpr double alpha = 0.6407;
  constexpr double slope = 0.2645;
  const double m = nodes;
  const double rate = m / t;
  const std::size_t half = static_cast<std::size_t>(nodes / 2);

  std::vector<Complex> weighted(half);
  const auto sample = [&](std::size_t k) {
    const double theta = (static_cast<double>(k) + 0.5) * std::numbers::pi / static_cast<double>(half);
    const double at = alpha * theta;
    const double cot = std::cos(at) / std::sin(at);
    const double sin_at = std::sin(at);
    const Complex z = rate * Complex(shift + scale * theta * cot, slope * theta);
    const Complex dz = rate * Complex(scale * (cot - at / (sin_at * sin_at)), slope);
    Complex value;
    try {
      value = f.eval(z);
    } catch (const std::exception& e) {
      throw LaplaceEvaluationError(z, e.what());
    }
    weighted[k] = std::exp(t * z) * value * dz;
  };
  detail::parallel_for(half, f.concurrent_safe ? threads : 1u, sample);

  // (1 / 2 pi i) * (2 pi / M) * sum over the full contour; the lower half is the conjugate.
  double sum = 0.0;
  for (const auto& w : weighted) sum += w.imag();
  return 2.0 * sum / m;
}

/// Spatial grid of the boundary-value solve. x_max <= 0 picks the initial
/// truncation from the decay rate of e^{-sqrt(2 beta) x}.
struct BvpGrid {
  double x_max = 0.0;
  int nodes = 2000;
};

namespace detail {

/// Central second-order scheme on a uniform grid with spacing (x - a) / steps_to_x,
/// Dirichlet data f(a) = 1 and f(a + total * dx) = 0. Returns f(x).
///
/// Thomas elimination with the sub-unit part of each multiplier carried
/// separately: c'_i = -(1 - e_i). The beta dx^2 information sits in e_i, so it
/// is not lost against the O(1) diagonal when dx is small.
template <class Drift>
Complex solve_dirichlet(const Drift& drift, double a, double x, Complex beta, std::size_t steps_to_x,
                        std::size_t total) {
  const double dx = (x - a) / static_cast<double>(steps_to_x);
  const std::size_t interior = total - 1;
  const Complex shift = 2.0 * beta * dx * dx;
  std::vector<Complex> e(interior);
  std::vector<Complex> d_prime(interior);
  // Row i: (1 - b) f_{i-1} - (2 + shift) f_i + (1 + b) f_{i+1} = 0, with b = drift * dx.
  Complex e_prev = 1.0;  // c'_{-1} = 0
  Complex d_prev = 0.0;
  for (std::size_t row = 0; row < interior; ++row) {
    const double xi = a + static_cast<double>(row + 1) * dx;
    const double b = drift(xi) * dx;
    const double lower = 1.0 - b;
    const double upper = 1.0 + b;
    // -denominator = (2 + shift) - lower (1 - e_prev) = upper + shift + lower e_prev.
    const Complex neg_denom = upper + shift + lower * e_prev;
    e[row] = (shift + lower * e_prev) / neg_denom;
    const Complex rhs = row == 0 ? Complex(-lower) : Complex(0.0);
    d_prime[row] = -(rhs - lower * d_prev) / neg_denom;
    e_prev = e[row];
    d_prev = d_prime[row];
  }
  // f_i = d'_i + (1 - e_i) f_{i+1}, f_total = 0.
  Complex f = d_prime[interior - 1];
  if (steps_to_x == interior) return f;
  for (std::size_t row = interior - 1; row-- > 0;) {
    f = d_prime[row] + (1.0 - e[row]) * f;
    if (row + 1 == steps_to_x) return f;
  }
  return f;
}

template <class Drift>
Complex solve_dirichlet_extrapolated(const Drift& drift, double a, double x, Complex beta, std::size_t steps_to_x,
                                     std::size_t total) {
  const Complex coarse = solve_dirichlet(drift, a, x, beta, steps_to_x, total);
  const Complex fine = solve_dirichlet(drift, a, x, beta, 2 * steps_to_x, 2 * total);
  return (4.0 * fine - coarse) / 3.0;
}

template <class Drift>
Complex exact_lt_impl(const Drift& drift, double a, double x, Complex beta, const BvpGrid& grid) {
  if (!(x > a)) throw DomainError("exact_lt: start must lie above the barrier");
  if (grid.nodes < 200) throw DomainError("exact_lt: grid needs at least 200 nodes");
  const Complex gamma = sqrt_2beta_cut_plane(beta);
  const double decay = gamma.real();
  double length = grid.x_max > 0.0 ? grid.x_max - a : (x - a) + std::max(x - a, 15.0 / decay);
  if (!(length > x - a)) throw DomainError("exact_lt: x_max must exceed the start point");

  // Spacing: at most length / nodes, at most (x - a) / 500, and fine enough that |gamma| dx <= 0.02.
  double dx_target = std::min({length / grid.nodes, (x - a) / 500.0, 0.02 / std::abs(gamma)});
  dx_target = std::max(dx_target, length / 200000.0);
  const auto steps_to_x = static_cast<std::size_t>(std::max(1.0, std::ceil((x - a) / dx_target)));
  const double dx = (x - a) / static_cast<double>(steps_to_x);

  auto total_for = [&](double len) {
    return std::max(steps_to_x + 1, static_cast<std::size_t>(std::ceil(len / dx)));
  };
  Complex previous = solve_dirichlet_extrapolated(drift, a, x, beta, steps_to_x, total_for(length));
  for (int doubling = 0; doubling < 12; ++doubling) {
    length *= 2.0;
    const Complex next = solve_dirichlet_extrapolated(drift, a, x, beta, steps_to_x, total_for(length));
    if (!std::isfinite(next.real()) || !std::isfinite(next.imag()))
      throw NumericalError("exact_lt: non-finite boundary-value solution");
    if (std::abs(next - previous) <= 1e-10 * std::abs(next) || std::abs(next) < 1e-300) return next;
    previous = next;
  }
  throw TruncationError("exact_lt: far-field truncation did not settle after 12 doublings");
}

}  // namespace detail

/// Exact transform E_x[e^{-beta tau}] by boundary-value solve, Re(beta) > 0.
///
/// Two second-order solves (spacing dx and dx/2) are combined by Richardson
/// extrapolation. The far boundary x_max is doubled until f(x) moves by at most
/// 1e-10 relative.
inline Complex exact_lt(const Process& process, double x, Complex beta, const BvpGrid& grid = {}) {
  if (!(beta.real() > 0.0)) throw DomainError("exact_lt: Re(beta) must be positive");
  return std::visit(
      [&](const auto& p) {
        return detail::exact_lt_impl([&p](double y) { return p.drift(y); }, p.barrier(), x, beta, grid);
      },
      process);
}

/// exact_lt continued to the cut plane, for contour inversion.
inline LtCallable exact_lt_callable(const Process& process, double x, BvpGrid grid = {}) {
  return {[process, x, grid](Complex beta) {
            return std::visit(
                [&](const auto& p) {
                  return detail::exact_lt_impl([&p](double y) { return p.drift(y); }, p.barrier(), x, beta,
                                               grid);
                },
                process);
          },
          true};
}

/// Named drift shape h for the generic first-order engine.
struct DriftShape {
  std::string name;
  std::function<double(double)> h;
};

/// First-order term f_1 = f_0 g_1 of E_x[e^{-beta tau}] for dX = eps h(X) dt + dW,
/// barrier a, real beta > 0. Uses the bounded solution of (1/2) g'' - gamma g' = gamma h:
///
///   g_1(x) = -2 gamma \int_a^x \int_0^inf h(y + s) e^{-2 gamma s} ds dy.
///
/// The inner integral is truncated at a far-field distance that is doubled until
/// it settles.
inline double generic_first_order_lt(const DriftShape& shape, double x, double a, double beta) {
  if (!(beta > 0.0)) throw DomainError("generic_first_order_lt: beta must be real and positive");
  if (!(x > a)) throw DomainError("generic_first_order_lt: start must lie above the barrier");
  const double gamma = std::sqrt(2.0 * beta);

  const auto inner = [&](double y) {
    double reach = 20.0 / gamma;
    const auto diverges = [&] {
      return DomainError("generic_first_order_lt: inner integral of h = '" + shape.name + "' does not converge");
    };
    const auto piece = [&](double lo, double hi) {
      try {
        return detail::integrate([&](double s) { return shape.h(y + s) * std::exp(-2.0 * gamma * s); }, lo, hi,
                                 1e-13);
      } catch (const NumericalError&) {
        throw diverges();
      }
    };
    double total = piece(0.0, reach);
    for (int doubling = 0; doubling < 12; ++doubling) {
      const double extra = piece(reach, 2.0 * reach);
      total += extra;
      reach *= 2.0;
      if (!std::isfinite(total)) break;
      if (std::abs(extra) <= 1e-14 * std::abs(total) || extra == 0.0) return total;
    }
    throw diverges();
  };

  const double g1 = -2.0 * gamma * detail::integrate(inner, a, x, 1e-12);
  return std::exp(-gamma * (x - a)) * g1;
}

}  // namespace pfpt
