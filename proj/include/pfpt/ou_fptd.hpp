#pragma once

// Ornstein-Uhlenbeck first-passage density dX = eps (theta - X) dt + sigma dW
// hitting a level below the start. All evaluation happens on the scaled problem
// Y = (X - level) / sigma, which hits 0 and keeps the original clock.

#include <pfpt/coeff_engine.hpp>
#include <pfpt/errors.hpp>
#include <pfpt/laplace_inversion.hpp>
#include <pfpt/process.hpp>
#include <pfpt/special_functions.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace pfpt {

struct OUParams {
  double eps = 0.1;
  double theta = 0.3;
  double sigma = 0.3;
  double x0 = 0.5;
  double level = 0.3;
};

struct ScaledProblem {
  double eps = 0.0;
  double theta_hat = 0.0;
  double y0 = 1.0;

  OuProcess process() const noexcept { return {eps, theta_hat}; }
};

inline ScaledProblem normalize(const OUParams& p) {
  if (!(p.sigma > 0.0)) throw DomainError("OU: sigma must be positive");
  if (!(p.x0 > p.level)) throw DomainError("OU: start x0 must lie above the level");
  if (!(p.eps >= 0.0)) throw DomainError("OU: eps must be non-negative");
  return {p.eps, (p.theta - p.level) / p.sigma, (p.x0 - p.level) / p.sigma};
}

namespace detail {

inline void check_scaled(const ScaledProblem& s) {
  if (!(s.y0 > 0.0)) throw DomainError("OU: scaled start y0 must be positive");
}

/// sum_n w_n gamma^{-n} e^{-gamma y0}, i.e. sum_n 2^{-n/2} w_n e^{-sqrt(2 beta) y0} beta^{-n/2}.
inline Complex series_lt(const std::vector<double>& w, double y0, Complex gamma) {
  const Complex inv = 1.0 / gamma;
  Complex power = 1.0;
  Complex sum = 0.0;
  for (double wn : w) {
    sum += wn * power;
    power *= inv;
  }
  return sum * std::exp(-gamma * y0);
}

}  // namespace detail

/// N-th order perturbed density with the h_n weights built once.
class OuPerturbedDensity {
 public:
  OuPerturbedDensity(const ScaledProblem& scaled, int order, const CoefficientTable& table)
      : scaled_(scaled), order_(order) {
    detail::check_scaled(scaled);
    h_ = assemble_h(table, order, scaled.eps, scaled.theta_hat, scaled.y0);
  }

  int order() const noexcept { return order_; }
  const ScaledProblem& scaled() const noexcept { return scaled_; }
  const std::vector<double>& weights() const noexcept { return h_; }

  /// p^{(N)}(t); may be negative at extreme t.
  double operator()(double t) const {
    if (!(t > 0.0)) throw DomainError("OU density: t must be positive");
    const double x = scaled_.y0;
    // n = 0, 1: inverse-Gaussian form (h_0 + h_1 t / x) p^{(0)}(t).
    const double p0 = inv_gaussian_fptd(x, t);
    double value = (h_[0] + h_[1] * t / x) * p0;
    if (h_.size() <= 2) return value;

    const double z = x / std::sqrt(t);
    std::array<double, 24> buffer{};
    std::vector<double> heap;
    std::span<double> table;
    if (h_.size() <= buffer.size()) {
      table = std::span<double>(buffer.data(), h_.size());
    } else {
      heap.resize(h_.size());
      table = heap;
    }
    pcf_d_scaled_table(z, table);
    const double gauss = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
    double tail = 0.0;
    for (std::size_t n = 2; n < h_.size(); ++n)
      tail += h_[n] * std::pow(t, 0.5 * static_cast<double>(n) - 1.0) * table[n];
    return value + gauss * tail;
  }

  /// f^N(y0, beta) on the plane cut along (-inf, 0].
  Complex lt(Complex beta) const { return detail::series_lt(h_, scaled_.y0, sqrt_2beta_cut_plane(beta)); }

 private:
  ScaledProblem scaled_;
  int order_;
  std::vector<double> h_;
};

inline double density(const ScaledProblem& scaled, int order, const CoefficientTable& table, double t) {
  return OuPerturbedDensity(scaled, order, table)(t);
}

/// f^N(y0, beta), Re(beta) > 0.
inline Complex lt_perturbed(const ScaledProblem& scaled, int order, const CoefficientTable& table, Complex beta) {
  const Complex gamma = complex_sqrt_2beta(beta);
  detail::check_scaled(scaled);
  return detail::series_lt(assemble_h(table, order, scaled.eps, scaled.theta_hat, scaled.y0), scaled.y0, gamma);
}

/// lt_perturbed continued to the cut plane, for contour inversion.
inline LtCallable lt_perturbed_callable(const ScaledProblem& scaled, int order, const CoefficientTable& table) {
  OuPerturbedDensity d(scaled, order, table);
  return {[d](Complex beta) { return d.lt(beta); }, true};
}

/// L^{-1}{d f_N / dx}(x, t): the kernel of the truncation-error representation.
class OuEta {
 public:
  OuEta(const ScaledProblem& scaled, int order, const CoefficientTable& table)
      : table_(&table), order_(order), theta_(scaled.theta_hat) {
    detail::check_order(table, order);
  }

  double operator()(double x, double t) const {
    if (x == 0.0 && t == 0.0) return 0.0;
    if (!(t > 0.0)) throw DomainError("OU eta: t must be positive");
    if (!(x >= 0.0)) throw DomainError("OU eta: x must be non-negative");
    const auto l = assemble_l(*table_, order_, theta_, x);
    const auto dl = assemble_l_derivative(*table_, order_, theta_, x);
    const std::size_t count = l.size();
    const double sqrt_t = std::sqrt(t);
    const double z = x / sqrt_t;
    // pcf[n] = e^{z^2/4} D_{1-n}(z); D_2 = z D_1 - D_0 covers the n = 0 shift.
    std::array<double, 24> buffer{};
    std::vector<double> heap;
    std::span<double> pcf;
    if (count <= buffer.size()) {
      pcf = std::span<double>(buffer.data(), count);
    } else {
      heap.resize(count);
      pcf = heap;
    }
    pcf_d_scaled_table(z, pcf);
    const double d2 = z * z - 1.0;

    double sum = 0.0;
    for (std::size_t n = 0; n < count; ++n) {
      const double shifted = n == 0 ? d2 : pcf[n - 1];
      const double bracket = dl[n] * pcf[n] - l[n] / sqrt_t * shifted;
      sum += std::pow(t, 0.5 * static_cast<double>(n) - 1.0) * bracket;
    }
    return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi) * sum;
  }

 private:
  const CoefficientTable* table_;
  int order_;
  double theta_;
};

inline double eta(const ScaledProblem& scaled, int order, const CoefficientTable& table, double x, double t) {
  return OuEta(scaled, order, table)(x, t);
}

/// Density of the hitting time of 0 for dY = -eps Y dt + dW from y0 > 0 (the case level = theta):
///
///   p(t) = y0 / sqrt(2 pi) (eps / sinh(eps t))^{3/2} exp(eps t / 2 - eps y0^2 / (e^{2 eps t} - 1)).
///
/// Obtained from the Brownian case by the time change u = (e^{2 eps t} - 1) / (2 eps).
/// Evaluated in log form so that large eps t neither overflows nor cancels.
inline double closed_form_theta_case(double eps, double y0, double t) {
  if (!(y0 > 0.0) || !(t > 0.0)) throw DomainError("closed_form_theta_case: y0 and t must be positive");
  if (!(eps >= 0.0)) throw DomainError("closed_form_theta_case: eps must be non-negative");
  const double u = eps * t;
  if (u == 0.0) return inv_gaussian_fptd(y0, t);
  // log(u / sinh u) and u / expm1(2u), both finite for all u > 0.
  const double log_ratio =
      u < 1e-4 ? -u * u / 6.0 : std::log(u) - (u + std::log1p(-std::exp(-2.0 * u)) - std::numbers::ln2);
  const double exp_ratio = u / std::expm1(2.0 * u);
  const double log_p = std::log(y0) - 0.5 * std::log(2.0 * std::numbers::pi) + 1.5 * (log_ratio - std::log(t)) +
                       0.5 * u - y0 * y0 / t * exp_ratio;
  return std::exp(log_p);
}

/// Startup self-check of closed_form_theta_case against Talbot inversion of the
/// boundary-value transform at t in {0.25, 1, 4}, relative tolerance 1e-6.
struct ClosedFormCheck {
  bool trusted = false;
  double worst_rel = 0.0;
};

inline ClosedFormCheck run_closed_form_check(unsigned threads = 1) {
  constexpr double eps = 0.1;
  constexpr double y0 = 2.0 / 3.0;
  const OuProcess process{eps, 0.0};
  const auto exact = exact_lt_callable(process, y0);
  ClosedFormCheck check;
  for (double t : {0.25, 1.0, 4.0}) {
    const double reference = talbot_invert(exact, t, 32, threads);
    const double value = closed_form_theta_case(eps, y0, t);
    check.worst_rel = std::max(check.worst_rel, std::abs(value - reference) / std::abs(reference));
  }
  check.trusted = check.worst_rel <= 1e-6;
  return check;
}

/// Result of the self-check, computed once per process.
inline const ClosedFormCheck& closed_form_trust() {
  static const ClosedFormCheck check = run_closed_form_check(detail::default_threads());
  return check;
}

}  // namespace pfpt
