#include <pfpt/coeff_engine.hpp>
#include <pfpt/special_functions.hpp>

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

using pfpt::Complex;
using pfpt::Rational;

namespace {

const pfpt::CoefficientTable& table6() {
  static const pfpt::CoefficientTable t = pfpt::build_table(6);
  return t;
}

Rational q(long n, long d) { return Rational(n) / Rational(d); }

struct Golden {
  int i, j, k;
  long num, den;
};

// Independent floating-point recursion for p_j^{(i)}(gamma, theta), i >= 1.
// p[i][j] for 1 <= j <= 2i.
std::vector<std::vector<Complex>> recursion_oracle(int max_order, Complex g, double theta) {
  std::vector<std::vector<Complex>> p(static_cast<std::size_t>(max_order + 1));
  p[1] = {0.0, (1.0 - 2.0 * theta * g) / (2.0 * g * g), 1.0 / (2.0 * g * g)};
  for (int i = 2; i <= max_order; ++i) {
    const auto& prev = p[static_cast<std::size_t>(i - 1)];
    const auto old = [&](int j) -> Complex { return (j >= 1 && j <= 2 * i - 2) ? prev[j] : Complex(0.0); };
    std::vector<Complex> cur(static_cast<std::size_t>(2 * i + 1), 0.0);
    cur[2 * i] = old(2 * i - 2) / (2.0 * i * g * g);
    cur[2 * i - 1] = old(2 * i - 3) / ((2.0 * i - 1.0) * g * g) +
                     (1.0 / (2.0 * g * g) - (g * theta + 2.0 * i - 2.0) / ((2.0 * i - 1.0) * g * g)) * old(2 * i - 2);
    for (int j = 2 * i - 2; j >= 3; --j) {
      const double jj = j;
      cur[j] = (jj + 1.0) / 2.0 * cur[j + 1] + old(j - 2) / (g * g * jj) - (jj - 1.0 + g * theta) / (g * g * jj) * old(j - 1) +
               theta / g * old(j);
    }
    cur[2] = 1.5 * cur[3] - (1.0 + g * theta) / (2.0 * g * g) * old(1) + theta / g * old(2);
    cur[1] = cur[2] + theta / g * old(1);
    p[static_cast<std::size_t>(i)] = cur;
  }
  return p;
}

// f_i(x) = e^{-gamma x} sum_j p_j^{(i)} (gamma x)^j.
double f_term(const pfpt::CoefficientTable& t, int i, double gamma, double theta, double x) {
  if (i == 0) return std::exp(-gamma * x);
  double s = 0.0;
  for (int j = 1; j <= 2 * i; ++j) s += pfpt::p_coeff(t, i, j, gamma, theta).real() * std::pow(gamma * x, j);
  return std::exp(-gamma * x) * s;
}

}  // namespace

TEST(CoeffTable, OrderTwoGoldens) {
  const std::vector<Golden> rows = {{1, 2, 0, 1, 2},  {1, 1, 0, 1, 2},  {1, 1, 1, -1, 1}, {2, 4, 0, 1, 8},
                                    {2, 3, 0, 1, 12}, {2, 3, 1, -1, 2}, {2, 2, 0, -1, 8}, {2, 2, 1, 0, 1},
                                    {2, 2, 2, 1, 2},  {2, 1, 0, -1, 8}, {2, 1, 1, 1, 2},  {2, 1, 2, -1, 2}};
  const auto t = pfpt::build_table(2);
  for (const auto& r : rows) EXPECT_EQ(t.exact(r.i, r.j, r.k), q(r.num, r.den)) << r.i << r.j << r.k;
  EXPECT_EQ(t.exact(0, 0, 0), Rational(1));
}

TEST(CoeffTable, OrderThreeMatchesSymbolicSolve) {
  // Frozen from an independent symbolic solve of the order-3 ODE.
  const std::vector<Golden> rows = {{3, 1, 0, -5, 16}, {3, 1, 1, 1, 2},  {3, 1, 2, -1, 4},  {3, 1, 3, 0, 1},
                                    {3, 2, 0, -5, 16}, {3, 2, 1, 5, 8},  {3, 2, 2, -3, 4},  {3, 2, 3, 1, 2},
                                    {3, 3, 0, -1, 4},  {3, 3, 1, 5, 8},  {3, 3, 2, -1, 2},  {3, 3, 3, -1, 6},
                                    {3, 4, 0, -7, 48}, {3, 4, 1, 1, 6},  {3, 4, 2, 1, 4},   {3, 5, 0, -1, 48},
                                    {3, 5, 1, -1, 8},  {3, 6, 0, 1, 48}};
  for (const auto& r : rows) EXPECT_EQ(table6().exact(r.i, r.j, r.k), q(r.num, r.den)) << r.i << r.j << r.k;
}

TEST(CoeffTable, SelectedOrderFourEntries) {
  const std::vector<Golden> rows = {
      {4, 8, 0, 1, 384}, {4, 1, 0, 21, 128}, {4, 4, 4, 1, 24}, {4, 5, 0, -61, 960}, {4, 6, 0, -25, 576}};
  for (const auto& r : rows) EXPECT_EQ(table6().exact(r.i, r.j, r.k), q(r.num, r.den)) << r.i << r.j << r.k;
}

TEST(CoeffTable, LeadingEntryIsReciprocalDoubleFactorial) {
  // c_0^{(i,2i)} = 1 / (2^i i!).
  Rational expected = 1;
  for (int i = 1; i <= 6; ++i) {
    expected /= 2 * i;
    EXPECT_EQ(table6().exact(i, 2 * i, 0), expected) << i;
  }
}

TEST(CoeffTable, AdmissibleCountAndBounds) {
  EXPECT_EQ(pfpt::admissible_count(2), 13u);
  EXPECT_EQ(table6().entries().size(), pfpt::admissible_count(6));
  EXPECT_THROW(table6().exact(7, 1, 0), pfpt::DomainError);
  EXPECT_THROW(table6().exact(2, 1, 3), pfpt::DomainError);
  EXPECT_THROW(table6().exact(2, 0, 0), pfpt::DomainError);
  EXPECT_THROW(pfpt::build_table(0), pfpt::DomainError);
}

TEST(CoeffTable, BuildIsDeterministic) { EXPECT_EQ(pfpt::build_table(5), pfpt::build_table(5)); }

TEST(PCoeff, FirstOrderExamples) {
  const Complex g(1.3, 0.4);
  const double theta = 0.7;
  const auto t = pfpt::build_table(1);
  EXPECT_NEAR(std::abs(pfpt::p_coeff(t, 1, 2, g, theta) - 0.5 / (g * g)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(pfpt::p_coeff(t, 1, 1, g, theta) - (0.5 / (g * g) - theta / g)), 0.0, 1e-15);
  EXPECT_THROW(pfpt::p_coeff(t, 2, 1, g, theta), pfpt::DomainError);
  EXPECT_THROW(pfpt::p_coeff(t, 1, 1, 0.0, theta), pfpt::DomainError);
}

TEST(PCoeff, MatchesFloatingPointRecursion) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(0.2, 3.0), im(-2.0, 2.0), th(-1.5, 1.5);
  for (int sample = 0; sample < 20; ++sample) {
    const Complex g(re(rng), im(rng));
    const double theta = th(rng);
    const auto oracle = recursion_oracle(4, g, theta);
    for (int i = 1; i <= 4; ++i) {
      for (int j = 1; j <= 2 * i; ++j) {
        const Complex got = pfpt::p_coeff(table6(), i, j, g, theta);
        const Complex want = oracle[i][j];
        EXPECT_LE(std::abs(got - want), 1e-10 * std::max(std::abs(want), 1e-300))
            << "i " << i << " j " << j << " gamma " << g << " theta " << theta;
      }
    }
  }
}

TEST(CoeffTable, SolvesTheOrderedOdes) {
  // (1/2) f_i'' - beta f_i + (theta - x) f_{i-1}' = 0, by central differences.
  const double beta = 0.8;
  const double gamma = std::sqrt(2.0 * beta);
  const double theta = 0.4;
  const double step = 1e-3;
  for (int i = 1; i <= 3; ++i) {
    for (double x : {0.3, 0.9, 1.7}) {
      const auto f = [&](int order, double y) { return f_term(table6(), order, gamma, theta, y); };
      const double fpp = (f(i, x + step) - 2.0 * f(i, x) + f(i, x - step)) / (step * step);
      const double dprev = (f(i - 1, x + step) - f(i - 1, x - step)) / (2.0 * step);
      const double residual = 0.5 * fpp - beta * f(i, x) + (theta - x) * dprev;
      const double scale = std::abs(0.5 * fpp) + std::abs(beta * f(i, x)) + std::abs((theta - x) * dprev);
      EXPECT_LE(std::abs(residual), 1e-5 * scale) << "i " << i << " x " << x;
    }
  }
}

TEST(CoeffTable, CorrectionsVanishAtTheBarrier) {
  for (int i = 1; i <= 6; ++i) EXPECT_EQ(f_term(table6(), i, 1.1, 0.3, 0.0), 0.0);
}

TEST(Assemble, FirstOrderWeights) {
  const auto t = pfpt::build_table(1);
  const double eps = 0.2, theta = 0.7, x = 1.3;
  const auto h = pfpt::assemble_h(t, 1, eps, theta, x);
  ASSERT_EQ(h.size(), 2u);
  // h_0 = 1 + eps (x^2/2 - theta x), h_1 = eps x/2.
  EXPECT_NEAR(h[0], 1.0 + eps * (x * x / 2.0 - theta * x), 1e-15);
  EXPECT_NEAR(h[1], eps * x / 2.0, 1e-15);
  const auto l = pfpt::assemble_l(t, 1, theta, x);
  EXPECT_NEAR(l[0], x * x / 2.0 - theta * x, 1e-15);
  EXPECT_NEAR(l[1], x / 2.0, 1e-15);
}

TEST(Assemble, ZeroEpsLeavesLeadingTerm) {
  const auto h = pfpt::assemble_h(table6(), 4, 0.0, 0.7, 1.3);
  EXPECT_EQ(h[0], 1.0);
  for (std::size_t n = 1; n < h.size(); ++n) EXPECT_EQ(h[n], 0.0);
}

TEST(Assemble, ZeroThetaKeepsOnlyKZeroEntries) {
  for (int order = 1; order <= 4; ++order) {
    const double x = 0.9;
    const auto l = pfpt::assemble_l(table6(), order, 0.0, x);
    for (int n = 0; n < 2 * order; ++n) {
      const int j = 2 * order - n;
      const double expected = table6().value(order, j, 0) * std::pow(x, j);
      EXPECT_NEAR(l[n], expected, 1e-15 * std::max(1.0, std::abs(expected))) << order << " " << n;
    }
  }
}

TEST(Assemble, TransformEqualsSumOfOrders) {
  // sum_n h_n gamma^{-n} e^{-gamma x} = e^{-gamma x} (1 + sum_i eps^i g_i).
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> re(0.05, 4.0), im(-3.0, 3.0), xs(0.1, 2.5), th(-1.0, 1.0);
  const int order = 4;
  const double eps = 0.15;
  for (int sample = 0; sample < 20; ++sample) {
    const Complex beta(re(rng), im(rng));
    const double x = xs(rng), theta = th(rng);
    const Complex g = pfpt::complex_sqrt_2beta(beta);
    const auto h = pfpt::assemble_h(table6(), order, eps, theta, x);
    Complex lhs = 0.0;
    for (std::size_t n = 0; n < h.size(); ++n) lhs += h[n] * std::pow(g, -static_cast<double>(n));
    const auto oracle = recursion_oracle(order, g, theta);
    Complex rhs = 1.0;
    for (int i = 1; i <= order; ++i) {
      Complex gi = 0.0;
      for (int j = 1; j <= 2 * i; ++j) gi += oracle[i][j] * std::pow(g * x, j);
      rhs += std::pow(eps, i) * gi;
    }
    EXPECT_LE(std::abs(lhs - rhs), 1e-10 * std::abs(rhs)) << beta << " x " << x;
  }
}

TEST(Assemble, DerivativeMatchesFiniteDifference) {
  const double theta = 0.35, x = 0.8, step = 1e-6;
  for (int order = 1; order <= 4; ++order) {
    const auto dl = pfpt::assemble_l_derivative(table6(), order, theta, x);
    const auto up = pfpt::assemble_l(table6(), order, theta, x + step);
    const auto down = pfpt::assemble_l(table6(), order, theta, x - step);
    for (std::size_t n = 0; n < dl.size(); ++n)
      EXPECT_NEAR(dl[n], (up[n] - down[n]) / (2.0 * step), 1e-8 * std::max(1.0, std::abs(dl[n])));
  }
}

TEST(Assemble, RejectsOrderOutsideTable) {
  EXPECT_THROW(pfpt::assemble_h(table6(), 7, 0.1, 0.0, 1.0), pfpt::DomainError);
  EXPECT_THROW(pfpt::assemble_l(table6(), 0, 0.0, 1.0), pfpt::DomainError);
}

TEST(TableCsv, RoundTripIsExact) {
  std::stringstream buffer;
  pfpt::write_table(table6(), buffer);
  const auto text = buffer.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), pfpt::kTableHeader);
  std::istringstream in(text);
  EXPECT_EQ(pfpt::read_table(in), table6());
}

TEST(TableCsv, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "pfpt_coeff_roundtrip.csv";
  pfpt::save_table(table6(), path.string());
  EXPECT_EQ(pfpt::load_table(path.string()), table6());
  std::filesystem::remove(path);
  EXPECT_THROW(pfpt::load_table(path.string() + ".missing"), std::runtime_error);
}

TEST(TableCsv, OrderTwoFileLayout) {
  std::stringstream buffer;
  pfpt::write_table(pfpt::build_table(2), buffer);
  std::vector<std::string> lines;
  for (std::string line; std::getline(buffer, line);) lines.push_back(line);
  ASSERT_EQ(lines.size(), 14u);
  EXPECT_EQ(lines[1], "0,0,0,1,1");
  EXPECT_EQ(lines[2], "1,1,0,1,2");
  EXPECT_EQ(lines[4], "1,2,0,1,2");
  EXPECT_EQ(lines[13], "2,4,0,1,8");
}

namespace {

std::string order_one_csv(const std::string& row_110) {
  return std::string(pfpt::kTableHeader) + "\n0,0,0,1,1\n" + row_110 + "\n1,1,1,-1,1\n1,2,0,1,2\n";
}

std::size_t parse_failure_line(const std::string& text) {
  std::istringstream in(text);
  try {
    pfpt::read_table(in);
  } catch (const pfpt::ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "expected a parse error";
  return 9999;
}

}  // namespace

TEST(TableCsv, NonReducedFractionsNormalize) {
  std::istringstream in(order_one_csv("1,1,0,2,4"));
  const auto t = pfpt::read_table(in);
  EXPECT_EQ(t.exact(1, 1, 0), q(1, 2));
}

TEST(TableCsv, ParseErrorsCarryLineNumbers) {
  EXPECT_EQ(parse_failure_line("i,j,k,num,den\n"), 1u);
  EXPECT_EQ(parse_failure_line(order_one_csv("1,1,0,1")), 3u);
  EXPECT_EQ(parse_failure_line(order_one_csv("1,1,0,1,0")), 3u);
  EXPECT_EQ(parse_failure_line(order_one_csv("1,1,0,x,2")), 3u);
  EXPECT_EQ(parse_failure_line(order_one_csv("1,1,0,1,2") + "1,1,5,1,1\n"), 6u);
  EXPECT_EQ(parse_failure_line(order_one_csv("1,1,0,1,2") + "1,1,0,1,2\n"), 6u);
  // Missing entry: reported at end of file.
  const std::string missing = std::string(pfpt::kTableHeader) + "\n0,0,0,1,1\n1,1,0,1,2\n1,2,0,1,2\n";
  EXPECT_EQ(parse_failure_line(missing), 0u);
}
