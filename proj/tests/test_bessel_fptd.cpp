#include <pfpt/acceptance.hpp>
#include <pfpt/bessel_fptd.hpp>
#include <pfpt/laplace_inversion.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using pfpt::Complex;

namespace {

const pfpt::BesselParams kFig{0.1, 0.7, 0.1};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

// Eta in the original y variable, with Gamma densities evaluated directly.
double eta_oracle(double eps, double x, double a, double t) {
  (void)eps;
  const double d = x - a;
  const double rho = std::pow(t, -2.5) * (d * d - t) * std::exp(-d * d / (2.0 * t)) / std::sqrt(2.0 * std::numbers::pi);
  boost::math::quadrature::exp_sinh<double> integrator;
  const auto f = [&](double u) {
    const double y = d * d + u;
    if (y == 0.0) return 0.0;
    const double sy = std::sqrt(y);
    const double diff = pfpt::gamma_density(y, 1.5, 1.0 / (2.0 * t)) - pfpt::gamma_density(y, 0.5, 1.0 / (2.0 * t));
    return diff * (1.0 / (sy - x + 3.0 * a) + 1.0 / (sy + x + a));
  };
  return 0.5 * std::log(x / a) * rho - integrator.integrate(f, 1e-12) / (4.0 * t);
}

}  // namespace

TEST(BesselParams, Validation) {
  EXPECT_THROW(pfpt::validate(pfpt::BesselParams{0.1, 0.1, 0.1}), pfpt::DomainError);
  EXPECT_THROW(pfpt::validate(pfpt::BesselParams{0.1, 0.1, 0.3}), pfpt::DomainError);
  EXPECT_THROW(pfpt::validate(pfpt::BesselParams{0.1, 0.7, 0.0}), pfpt::DomainError);
  EXPECT_THROW(pfpt::validate(pfpt::BesselParams{1.0, 0.7, 0.1}), pfpt::DomainError);
  EXPECT_THROW(pfpt::validate(pfpt::BesselParams{-1.0, 0.7, 0.1}), pfpt::DomainError);
  EXPECT_NO_THROW(pfpt::validate(pfpt::BesselParams{-0.9, 0.7, 0.1}));
  EXPECT_THROW(pfpt::density_first_order({0.1, 0.1, 0.7}, 1.0), pfpt::DomainError);
}

TEST(BesselTransform, FullyIntegrableLimit) {
  EXPECT_LE(std::abs(pfpt::lt_first_order(kFig, 1e-10) - 1.0), 1e-4);
  EXPECT_LE(std::abs(pfpt::lt_first_order({-0.5, 2.0, 0.3}, 1e-10) - 1.0), 1e-4);
}

TEST(BesselTransform, BrownianReduction) {
  for (Complex beta : {Complex(1.0, 0.0), Complex(0.3, 4.0)}) {
    const Complex expected = std::exp(-std::sqrt(2.0 * beta) * 0.6);
    EXPECT_LE(std::abs(pfpt::lt_first_order({0.0, 0.7, 0.1}, beta) - expected), 1e-15);
  }
}

TEST(BesselTransform, MatchesGenericEngineAtRandomBeta) {
  const pfpt::DriftShape shape{"1/(2z)", [](double z) { return 0.5 / z; }};
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> betas(0.05, 20.0);
  for (int i = 0; i < 10; ++i) {
    const double beta = betas(rng);
    const double expected = std::exp(-std::sqrt(2.0 * beta) * 0.6) + 0.1 * pfpt::generic_first_order_lt(shape, 0.7, 0.1, beta);
    EXPECT_LE(rel(pfpt::lt_first_order(kFig, beta).real(), expected), 1e-6) << beta;
  }
}

TEST(BesselTransform, RejectsLeftHalfPlane) {
  EXPECT_THROW(pfpt::lt_first_order(kFig, Complex(0.0, 2.0)), pfpt::DomainError);
  EXPECT_THROW(pfpt::lt_first_order_term(kFig, -1.0), pfpt::DomainError);
}

TEST(BesselDensity, FormsAgree) {
  for (double t : {0.05, 1.0, 30.0}) {
    const double combined = pfpt::density_first_order(kFig, t, pfpt::DensityForm::combined);
    const double two_term = pfpt::density_first_order(kFig, t, pfpt::DensityForm::two_term);
    EXPECT_LE(std::abs(combined - two_term), 1e-9 * combined) << t;
  }
}

TEST(BesselDensity, BrownianReduction) {
  for (double t : {0.1, 1.0, 10.0})
    EXPECT_EQ(pfpt::density_first_order({0.0, 0.7, 0.1}, t), pfpt::inv_gaussian_fptd(0.6, t));
}

TEST(BesselDensity, MatchesInvertedTransform) {
  const auto f = pfpt::lt_first_order_callable(kFig);
  for (double t : {0.1, 0.5, 2.0, 10.0})
    EXPECT_LE(rel(pfpt::talbot_invert(f, t), pfpt::density_first_order(kFig, t)), 1e-5) << t;
}

TEST(BesselDensity, RejectsNonPositiveTime) {
  EXPECT_THROW(pfpt::density_first_order(kFig, 0.0), pfpt::DomainError);
  EXPECT_THROW(pfpt::density_first_order(kFig, -1.0), pfpt::DomainError);
}

TEST(BesselDensity, IntegratesToOne) {
  EXPECT_NEAR(pfpt::detail::bessel_total_mass(kFig), 1.0, 1e-3);
  EXPECT_NEAR(pfpt::detail::bessel_total_mass({-0.3, 1.0, 0.4}), 1.0, 1e-3);
}

TEST(BesselDensity, PositiveWhenLeadingWeightIsNonNegative) {
  for (const auto& p : {kFig, pfpt::BesselParams{0.5, 2.0, 0.1}, pfpt::BesselParams{0.9, 0.9, 0.1}}) {
    ASSERT_GE(1.0 + 0.5 * p.eps * std::log(p.a / p.x0), 0.0);
    for (double t : pfpt::make_time_grid(1e-3, 1e4, 400, pfpt::Spacing::log))
      EXPECT_GE(pfpt::density_first_order(p, t), 0.0) << t;
  }
}

TEST(BesselDensity, NegativeEpsTurnsNegativeInTheRightTail) {
  // For eps < 0 the integral term is negative and decays like t^{-3/2} ln t, so it
  // overtakes the leading term. The inverted transform agrees, so this is the
  // first-order approximation itself and not a quadrature artefact.
  const pfpt::BesselParams p{-0.8, 0.7, 0.5};
  ASSERT_GE(1.0 + 0.5 * p.eps * std::log(p.a / p.x0), 0.0);
  const double value = pfpt::density_first_order(p, 100.0);
  EXPECT_LT(value, 0.0);
  EXPECT_LE(rel(pfpt::talbot_invert(pfpt::lt_first_order_callable(p), 100.0), value), 1e-6);
  EXPECT_GT(pfpt::density_first_order({-0.1, 0.7, 0.1}, 1e4), 0.0);
}

TEST(BesselDensity, LeftTail) {
  EXPECT_LE(std::abs(pfpt::density_correction_ratio(kFig, 1e-3)), 1e-3);
  const double lead = 1.0 + 0.05 * std::log(0.1 / 0.7);
  const double ratio = pfpt::density_first_order(kFig, 1e-3) / pfpt::inv_gaussian_fptd(0.6, 1e-3);
  EXPECT_LE(rel(ratio, lead), 1e-3);
}

TEST(BesselDensity, RightTailSlopeWindow) {
  for (const auto& p : {kFig, pfpt::BesselParams{0.4, 1.0, 0.2}}) {
    const double s = pfpt::detail::loglog_slope([&](double t) { return pfpt::density_first_order(p, t); }, 1e3, 1e5, 9);
    EXPECT_GT(s, -1.5);
    EXPECT_LT(s, -1.0);
  }
}

TEST(BesselDensity, QuadratureConverged) {
  for (double t : {0.1, 1.0, 10.0}) {
    const double coarse = pfpt::density_first_order(kFig, t, pfpt::DensityForm::combined, {0.0, 7});
    const double fine = pfpt::density_first_order(kFig, t, pfpt::DensityForm::combined, {0.0, 8});
    EXPECT_LE(rel(coarse, fine), 1e-9) << t;
    EXPECT_LE(rel(pfpt::density_first_order(kFig, t), fine), 1e-9) << t;
  }
}

TEST(BesselEta, MatchesDirectGammaIntegral) {
  for (double x : {0.1, 0.3, 0.7, 1.5}) {
    for (double t : {0.2, 0.5, 2.0}) {
      const double oracle = eta_oracle(0.1, x, 0.1, t);
      EXPECT_NEAR(pfpt::eta(kFig, x, t), oracle, 1e-8 * std::max(1.0, std::abs(oracle))) << x << " " << t;
    }
  }
}

TEST(BesselEta, FirstTermVanishesAtBarrier) {
  // With x = a only the integral remains, so eta does not depend on the ln(x/a) factor.
  const double t = 0.5;
  const double at_barrier = pfpt::eta(kFig, 0.1, t);
  EXPECT_TRUE(std::isfinite(at_barrier));
  EXPECT_NEAR(at_barrier, eta_oracle(0.1, 0.1, 0.1, t), 1e-8 * std::max(1.0, std::abs(at_barrier)));
}

TEST(BesselEta, MatchesDerivativeOfInvertedTransform) {
  const double x = 0.7, t = 0.5, step = 1e-4;
  const auto term = [&](double start) {
    return pfpt::talbot_invert(pfpt::lt_first_order_term_callable({0.1, start, 0.1}), t);
  };
  const double fd = (term(x + step) - term(x - step)) / (2.0 * step);
  EXPECT_LE(rel(pfpt::eta(kFig, x, t), fd), 1e-3);
}

TEST(BesselEta, GammaTailBound) {
  boost::math::quadrature::exp_sinh<double> integrator;
  for (double d : {1.1, 2.0}) {
    for (double alpha : {0.5, 1.5}) {
      const double bound = std::tgamma(alpha + 1.0) / (2.0 * std::tgamma(alpha));
      for (double t : pfpt::make_time_grid(0.01, 100.0, 30, pfpt::Spacing::log)) {
        const double tail = integrator.integrate(
            [&](double u) { return pfpt::gamma_density(d * d + u, alpha, 1.0 / (2.0 * t)); }, 1e-12);
        EXPECT_LE(tail / (4.0 * t), bound) << "d " << d << " alpha " << alpha << " t " << t;
      }
    }
  }
}

TEST(BesselEta, Domain) {
  EXPECT_THROW(pfpt::eta(kFig, 0.05, 1.0), pfpt::DomainError);
  EXPECT_THROW(pfpt::eta(kFig, 0.7, 0.0), pfpt::DomainError);
}
