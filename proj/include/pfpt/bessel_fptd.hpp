#pragma once

// First-order perturbed first-passage density of BES(1 + eps),
// dX = eps / (2X) dt + dW, started at x0 and hitting a in (0, x0) from above.

#include <pfpt/detail/quadrature.hpp>
#include <pfpt/errors.hpp>
#include <pfpt/laplace_inversion.hpp>
#include <pfpt/process.hpp>
#include <pfpt/special_functions.hpp>

#include <cmath>
#include <complex>
#include <numbers>

namespace pfpt {

struct BesselParams {
  double eps = 0.1;
  double x0 = 0.7;
  double a = 0.1;

  BesselProcess process() const noexcept { return {eps, a}; }
};

inline void validate(const BesselParams& p) {
  validate(p.process());
  if (!(p.x0 > p.a)) throw DomainError("Bessel: start x0 must exceed the barrier a (0 < a < x0)");
}

/// Quadrature controls for the density integrals.
struct BesselQuadrature {
  double rel_tol = 1e-13;
  std::size_t max_levels = 9;
};

namespace detail {

inline Complex bessel_f1_ratio(const BesselParams& p, Complex gamma) {
  return 0.5 * (std::log(p.a / p.x0) + e1_scaled(2.0 * gamma * p.a) - e1_scaled(2.0 * gamma * p.x0));
}

}  // namespace detail

/// First-order term f_1(x0, beta), Re(beta) > 0.
inline Complex lt_first_order_term(const BesselParams& p, Complex beta) {
  validate(p);
  const Complex gamma = complex_sqrt_2beta(beta);
  return std::exp(-gamma * (p.x0 - p.a)) * detail::bessel_f1_ratio(p, gamma);
}

/// f^1 = f_0 + eps f_1 at x0, Re(beta) > 0.
inline Complex lt_first_order(const BesselParams& p, Complex beta) {
  validate(p);
  const Complex gamma = complex_sqrt_2beta(beta);
  return std::exp(-gamma * (p.x0 - p.a)) * (1.0 + p.eps * detail::bessel_f1_ratio(p, gamma));
}

/// lt_first_order on the plane cut along (-inf, 0].
inline LtCallable lt_first_order_callable(const BesselParams& p) {
  validate(p);
  return {[p](Complex beta) {
            const Complex gamma = sqrt_2beta_cut_plane(beta);
            return std::exp(-gamma * (p.x0 - p.a)) * (1.0 + p.eps * detail::bessel_f1_ratio(p, gamma));
          },
          true};
}

/// lt_first_order_term on the plane cut along (-inf, 0].
inline LtCallable lt_first_order_term_callable(const BesselParams& p) {
  validate(p);
  return {[p](Complex beta) {
            const Complex gamma = sqrt_2beta_cut_plane(beta);
            return std::exp(-gamma * (p.x0 - p.a)) * detail::bessel_f1_ratio(p, gamma);
          },
          true};
}

enum class DensityForm { combined, two_term };

namespace detail {

/// e^{d^2/2t} times the single integral over y >= d^2 of
/// p_Gamma(y, 1, 1/2t) / ((sqrt y - x + 3a)(sqrt y + x + a)), with y = d^2 + 2ts.
inline double bessel_combined_integral(const BesselParams& p, double t, const BesselQuadrature& q) {
  const double d = p.x0 - p.a;
  const auto integrand = [&](double s) {
    const double r = 2.0 * t * s / (std::sqrt(d * d + 2.0 * t * s) + d);  // sqrt(y) - d
    return std::exp(-s) / ((r + 2.0 * p.a) * (r + 2.0 * p.x0));
  };
  return integrate_half_line(integrand, q.rel_tol, q.max_levels);
}

/// J(z) = int_0^inf p^{(0)}_{d + v}(t) / (v + z) dv.
inline double bessel_shifted_integral(double d, double z, double t, const BesselQuadrature& q) {
  const auto integrand = [&](double v) {
    const double level = d + v;
    return level / std::sqrt(2.0 * std::numbers::pi) * std::pow(t, -1.5) * std::exp(-level * level / (2.0 * t)) /
           (v + z);
  };
  return integrate_half_line(integrand, q.rel_tol, q.max_levels);
}

}  // namespace detail

/// p^{(1)}(t). `combined` evaluates the single-integral form, `two_term` the
/// difference of the two shifted Brownian integrals at z = 2a and z = 2x0.
inline double density_first_order(const BesselParams& p, double t, DensityForm form = DensityForm::combined,
                                  const BesselQuadrature& q = {}) {
  validate(p);
  if (!(t > 0.0)) throw DomainError("Bessel density: t must be positive");
  const double d = p.x0 - p.a;
  const double leading = (1.0 + 0.5 * p.eps * std::log(p.a / p.x0)) * inv_gaussian_fptd(d, t);
  if (p.eps == 0.0) return leading;
  if (form == DensityForm::combined) {
    const double scale = p.eps * d / std::sqrt(2.0 * std::numbers::pi * t) * std::exp(-d * d / (2.0 * t));
    return leading + scale * detail::bessel_combined_integral(p, t, q);
  }
  const double j_a = detail::bessel_shifted_integral(d, 2.0 * p.a, t, q);
  const double j_x = detail::bessel_shifted_integral(d, 2.0 * p.x0, t, q);
  return leading + 0.5 * p.eps * (j_a - j_x);
}

/// Size of the second (integral) term relative to the leading term, for left-tail checks.
inline double density_correction_ratio(const BesselParams& p, double t) {
  validate(p);
  const double d = p.x0 - p.a;
  const double leading = (1.0 + 0.5 * p.eps * std::log(p.a / p.x0)) * inv_gaussian_fptd(d, t);
  const double scale = p.eps * d / std::sqrt(2.0 * std::numbers::pi * t) * std::exp(-d * d / (2.0 * t));
  return scale * detail::bessel_combined_integral(p, t, {}) / leading;
}

/// L^{-1}{d f_1 / dx}(x, t) for x >= a:
///
///   eta = (1/2) ln(x/a) rho(x, a, t)
///         - 1/(4t) int_{(x-a)^2}^inf (p_Gamma(y, 3/2, 1/2t) - p_Gamma(y, 1/2, 1/2t))
///                                     (1/(sqrt y - x + 3a) + 1/(sqrt y + x + a)) dy
///
/// with rho = t^{-5/2} ((x-a)^2 - t) e^{-(x-a)^2/2t} / sqrt(2 pi).
class BesselEta {
 public:
  explicit BesselEta(const BesselParams& p, BesselQuadrature q = {}) : a_(p.a), q_(q) { validate(p.process()); }

  double operator()(double x, double t) const {
    if (!(t > 0.0)) throw DomainError("Bessel eta: t must be positive");
    if (!(x >= a_)) throw DomainError("Bessel eta: x must not lie below the barrier");
    const double d = x - a_;
    const double gauss = std::exp(-d * d / (2.0 * t));
    const double rho = std::pow(t, -2.5) * (d * d - t) * gauss / std::sqrt(2.0 * std::numbers::pi);
    const double first = 0.5 * std::log(x / a_) * rho;

    // y = d^2 + 2ts; with w = y / 2t the Gamma difference becomes
    // e^{-d^2/2t} e^{-s} (2w - 1) / sqrt(pi w) ds.
    const double w0 = d * d / (2.0 * t);
    const auto integrand = [&](double s) {
      const double w = w0 + s;
      if (w == 0.0) return 0.0;
      const double r = 2.0 * t * s / (std::sqrt(d * d + 2.0 * t * s) + d);
      const double kernel = 1.0 / (r + 2.0 * a_) + 1.0 / (r + 2.0 * x);
      return std::exp(-s) * (2.0 * w - 1.0) / std::sqrt(std::numbers::pi * w) * kernel;
    };
    const double integral = detail::integrate_half_line(integrand, q_.rel_tol, q_.max_levels);
    return first - gauss * integral / (4.0 * t);
  }

 private:
  double a_;
  BesselQuadrature q_;
};

inline double eta(const BesselParams& p, double x, double t) { return BesselEta(p)(x, t); }

}  // namespace pfpt
