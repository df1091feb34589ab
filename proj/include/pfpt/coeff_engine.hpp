#pragma once

// Exact-rational coefficient sequences of the Ornstein-Uhlenbeck perturbation
// series. The order-i correction of the hitting-time transform is
//
//   f_i(x, beta) = e^{-gamma x} g_i(gamma x),   g_i(y) = sum_{j=1}^{2i} p_j^{(i)} y^j,
//   p_j^{(i)} = sum_{k=0}^{min(2i-j, i)} c_k^{(i,j)} gamma^{-(2i-k)} theta^k,
//
// with gamma = sqrt(2 beta). The c_k^{(i,j)} do not depend on any model
// parameter, so they are built once (exactly) and cached on disk.

#include <pfpt/errors.hpp>
#include <pfpt/special_functions.hpp>

#include <boost/multiprecision/cpp_int.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <compare>
#include <complex>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace pfpt {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

struct CoefficientIndex {
  int i = 0;
  int j = 0;
  int k = 0;
  auto operator<=>(const CoefficientIndex&) const = default;
};

/// Largest k stored for (i, j).
constexpr int max_k(int i, int j) { return std::min(2 * i - j, i); }

/// True for (0,0,0) and for 1 <= i <= max_order, 1 <= j <= 2i, 0 <= k <= min(2i-j, i).
constexpr bool admissible(const CoefficientIndex& idx, int max_order) {
  if (idx.i == 0) return idx.j == 0 && idx.k == 0;
  return idx.i >= 1 && idx.i <= max_order && idx.j >= 1 && idx.j <= 2 * idx.i && idx.k >= 0 &&
         idx.k <= max_k(idx.i, idx.j);
}

/// Number of admissible entries, including the (0,0,0) convention row.
constexpr std::size_t admissible_count(int max_order) {
  std::size_t n = 1;
  for (int i = 1; i <= max_order; ++i)
    for (int j = 1; j <= 2 * i; ++j) n += static_cast<std::size_t>(max_k(i, j) + 1);
  return n;
}

/// Immutable table of c_k^{(i,j)} for all admissible indices up to max_order.
///
/// The entry (0,0,0) = 1 is stored so that the order-0 transform e^{-gamma x}
/// enters the assembled weights through the same sums as every other order.
/// Memory grows like max_order^3 entries with numerators of O(max_order) digits;
/// max_order = 10 (about 600 entries) is the intended ceiling.
class CoefficientTable {
 public:
  CoefficientTable(int max_order, std::map<CoefficientIndex, Rational> entries)
      : max_order_(max_order), entries_(std::move(entries)) {
    if (max_order_ < 1) throw DomainError("coefficient table needs max_order >= 1");
    for (int i = 0; i <= max_order_; ++i) {
      for (int j = (i == 0 ? 0 : 1); j <= (i == 0 ? 0 : 2 * i); ++j) {
        for (int k = 0; k <= (i == 0 ? 0 : max_k(i, j)); ++k) {
          if (!entries_.contains({i, j, k}))
            throw DomainError("coefficient table is missing entry " + std::to_string(i) + "," +
                              std::to_string(j) + "," + std::to_string(k));
        }
      }
    }
    if (entries_.size() != admissible_count(max_order_))
      throw DomainError("coefficient table holds entries outside the admissible index set");
    values_.resize(static_cast<std::size_t>(max_order_ + 1));
    for (int i = 1; i <= max_order_; ++i) {
      auto& row = values_[static_cast<std::size_t>(i)];
      row.resize(static_cast<std::size_t>(2 * i + 1));
      for (int j = 1; j <= 2 * i; ++j) {
        auto& cell = row[static_cast<std::size_t>(j)];
        cell.resize(static_cast<std::size_t>(max_k(i, j) + 1));
        for (int k = 0; k <= max_k(i, j); ++k)
          cell[static_cast<std::size_t>(k)] = entries_.at({i, j, k}).convert_to<double>();
      }
    }
  }

  int max_order() const noexcept { return max_order_; }
  const std::map<CoefficientIndex, Rational>& entries() const noexcept { return entries_; }

  const Rational& exact(int i, int j, int k) const {
    if (!admissible({i, j, k}, max_order_)) throw DomainError(index_message(i, j, k));
    return entries_.at({i, j, k});
  }

  /// Double value of an admissible entry (i >= 1); unchecked on the hot path.
  double value(int i, int j, int k) const noexcept {
    return values_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
  }

  bool operator==(const CoefficientTable& other) const {
    return max_order_ == other.max_order_ && entries_ == other.entries_;
  }

 private:
  static std::string index_message(int i, int j, int k) {
    return "coefficient index (" + std::to_string(i) + "," + std::to_string(j) + "," + std::to_string(k) +
           ") is outside the table";
  }

  int max_order_;
  std::map<CoefficientIndex, Rational> entries_;
  std::vector<std::vector<std::vector<double>>> values_;
};

/// Builds c_k^{(i,j)} for 1 <= i <= max_order in exact arithmetic. Orders 1 and 2
/// are seeded explicitly; higher orders follow the decomposition recursion,
/// evaluated per order in the sequence j = 2i, 2i-1, 2i-2, ..., 3, then 2, then 1.
inline CoefficientTable build_table(int max_order) {
  if (max_order < 1) throw DomainError("build_table: max_order must be >= 1");
  std::map<CoefficientIndex, Rational> c;
  c[{0, 0, 0}] = 1;
  c[{1, 2, 0}] = Rational(1, 2);
  c[{1, 1, 0}] = Rational(1, 2);
  c[{1, 1, 1}] = -1;
  if (max_order >= 2) {
    c[{2, 4, 0}] = Rational(1, 8);
    c[{2, 3, 0}] = Rational(1, 12);
    c[{2, 3, 1}] = Rational(-1, 2);
    c[{2, 2, 0}] = Rational(-1, 8);
    c[{2, 2, 1}] = 0;
    c[{2, 2, 2}] = Rational(1, 2);
    c[{2, 1, 0}] = Rational(-1, 8);
    c[{2, 1, 1}] = Rational(1, 2);
    c[{2, 1, 2}] = Rational(-1, 2);
  }

  // Entries outside the admissible set of their order read as zero.
  const auto at = [&c](int i, int j, int k) -> Rational {
    if (i < 1 || j < 1 || j > 2 * i || k < 0 || k > max_k(i, j)) return Rational(0);
    return c.at({i, j, k});
  };

  for (int i = 3; i <= max_order; ++i) {
    c[{i, 2 * i, 0}] = at(i - 1, 2 * i - 2, 0) / (2 * i);

    {
      const int j = 2 * i - 1;
      c[{i, j, 0}] = at(i - 1, 2 * i - 3, 0) / j - Rational(2 * i - 3, 2 * j) * at(i - 1, 2 * i - 2, 0);
      c[{i, j, 1}] = (at(i - 1, 2 * i - 3, 1) - at(i - 1, 2 * i - 2, 0)) / j;
    }

    for (int j = 2 * i - 2; j > 2; --j) {
      const int top = max_k(i, j);
      for (int k = 0; k <= top; ++k) {
        Rational v;
        if (k == top) {
          if (j > i) {
            v = (at(i - 1, j - 2, 2 * i - j) - at(i - 1, j - 1, 2 * i - j - 1)) / j;
          } else if (j == i) {
            v = -at(i - 1, i - 1, i - 1) / i;
          } else {
            v = Rational(j + 1, 2) * at(i, j + 1, i) - at(i - 1, j - 1, i - 1) / j + at(i - 1, j, i - 1);
          }
        } else if (k > 0) {
          v = Rational(j + 1, 2) * at(i, j + 1, k) + at(i - 1, j - 2, k) / j -
              Rational(j - 1, j) * at(i - 1, j - 1, k) - at(i - 1, j - 1, k - 1) / j + at(i - 1, j, k - 1);
        } else {
          v = Rational(j + 1, 2) * at(i, j + 1, 0) + at(i - 1, j - 2, 0) / j -
              Rational(j - 1, j) * at(i - 1, j - 1, 0);
        }
        c[{i, j, k}] = v;
      }
    }

    for (int k = 0; k <= i; ++k) {
      Rational v;
      if (k == i) {
        v = Rational(3, 2) * at(i, 3, i) - at(i - 1, 1, i - 1) / 2 + at(i - 1, 2, i - 1);
      } else if (k > 0) {
        v = Rational(3, 2) * at(i, 3, k) - at(i - 1, 1, k) / 2 - at(i - 1, 1, k - 1) / 2 + at(i - 1, 2, k - 1);
      } else {
        v = Rational(3, 2) * at(i, 3, 0) - at(i - 1, 1, 0) / 2;
      }
      c[{i, 2, k}] = v;
    }

    for (int k = 0; k <= i; ++k) {
      Rational v;
      if (k == i) {
        v = at(i, 2, i) + at(i - 1, 1, i - 1);
      } else if (k > 0) {
        v = at(i, 2, k) + at(i - 1, 1, k - 1);
      } else {
        v = at(i, 2, 0);
      }
      c[{i, 1, k}] = v;
    }
  }
  return CoefficientTable(max_order, std::move(c));
}

/// p_j^{(i)} = sum_k c_k^{(i,j)} gamma^{-(2i-k)} theta^k.
inline Complex p_coeff(const CoefficientTable& table, int i, int j, Complex gamma, double theta) {
  if (i < 1 || i > table.max_order() || j < 1 || j > 2 * i)
    throw DomainError("p_coeff: (" + std::to_string(i) + "," + std::to_string(j) + ") is outside the table");
  if (gamma == Complex(0.0)) throw DomainError("p_coeff: gamma must be non-zero");
  const Complex inv_gamma = 1.0 / gamma;
  Complex sum = 0.0;
  for (int k = 0; k <= max_k(i, j); ++k)
    sum += table.value(i, j, k) * std::pow(inv_gamma, 2 * i - k) * std::pow(theta, k);
  return sum;
}

/// Assembled weights of the order-N density series at start point x.
struct AssembledWeights {
  int order = 0;
  std::vector<double> h;  ///< h_n, n = 0 .. 2N-1, all orders i <= N
  std::vector<double> l;  ///< l_n, n = 0 .. 2N-1, order-N coefficients only
};

namespace detail {
inline void check_order(const CoefficientTable& table, int order) {
  if (order < 1 || order > table.max_order())
    throw DomainError("order " + std::to_string(order) + " is outside the coefficient table (max " +
                      std::to_string(table.max_order()) + ")");
}
}  // namespace detail

/// h_n = sum over 2i - j - k = n of eps^i c_k^{(i,j)} theta^k x^j, plus 1 in h_0.
inline std::vector<double> assemble_h(const CoefficientTable& table, int order, double eps, double theta,
                                      double x) {
  detail::check_order(table, order);
  std::vector<double> h(static_cast<std::size_t>(2 * order), 0.0);
  h[0] = 1.0;
  double eps_pow = 1.0;
  for (int i = 1; i <= order; ++i) {
    eps_pow *= eps;
    for (int j = 1; j <= 2 * i; ++j) {
      const double xj = std::pow(x, j);
      for (int k = 0; k <= max_k(i, j); ++k) {
        const double c = table.value(i, j, k);
        if (c == 0.0) continue;
        h[static_cast<std::size_t>(2 * i - j - k)] += eps_pow * c * std::pow(theta, k) * xj;
      }
    }
  }
  return h;
}

/// l_n = sum over j + k = 2N - n of c_k^{(N,j)} theta^k x^j.
inline std::vector<double> assemble_l(const CoefficientTable& table, int order, double theta, double x) {
  detail::check_order(table, order);
  std::vector<double> l(static_cast<std::size_t>(2 * order), 0.0);
  for (int j = 1; j <= 2 * order; ++j) {
    for (int k = 0; k <= max_k(order, j); ++k) {
      l[static_cast<std::size_t>(2 * order - j - k)] += table.value(order, j, k) * std::pow(theta, k) * std::pow(x, j);
    }
  }
  return l;
}

/// d l_n / dx, by exact differentiation of the polynomial l_n in x.
inline std::vector<double> assemble_l_derivative(const CoefficientTable& table, int order, double theta,
                                                 double x) {
  detail::check_order(table, order);
  std::vector<double> dl(static_cast<std::size_t>(2 * order), 0.0);
  for (int j = 1; j <= 2 * order; ++j) {
    for (int k = 0; k <= max_k(order, j); ++k) {
      dl[static_cast<std::size_t>(2 * order - j - k)] +=
          table.value(order, j, k) * std::pow(theta, k) * j * std::pow(x, j - 1);
    }
  }
  return dl;
}

inline AssembledWeights assemble_weights(const CoefficientTable& table, int order, double eps, double theta,
                                         double x) {
  return {order, assemble_h(table, order, eps, theta, x), assemble_l(table, order, theta, x)};
}

// ---------------------------------------------------------------------------
// CSV cache: header "i,j,k,numerator,denominator", rows sorted by (i, j, k).

inline constexpr std::string_view kTableHeader = "i,j,k,numerator,denominator";

inline void write_table(const CoefficientTable& table, std::ostream& out) {
  out << kTableHeader << '\n';
  for (const auto& [idx, value] : table.entries()) {
    out << idx.i << ',' << idx.j << ',' << idx.k << ',' << boost::multiprecision::numerator(value) << ','
        << boost::multiprecision::denominator(value) << '\n';
  }
}

inline void save_table(const CoefficientTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  write_table(table, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

namespace detail {

inline int parse_small_int(std::string_view field, std::size_t line, const char* name) {
  int value = 0;
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || field.empty())
    throw ParseError(line, std::string("field '") + name + "' is not an integer: '" + std::string(field) + "'");
  return value;
}

inline BigInt parse_big_int(std::string_view field, std::size_t line, const char* name) {
  std::string_view digits = field;
  if (!digits.empty() && (digits.front() == '-' || digits.front() == '+')) digits.remove_prefix(1);
  if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char ch) { return ch >= '0' && ch <= '9'; }))
    throw ParseError(line, std::string("field '") + name + "' is not an integer: '" + std::string(field) + "'");
  return BigInt(std::string(field.front() == '+' ? field.substr(1) : field));
}

}  // namespace detail

/// Reads a table written by write_table. Fractions are normalized on load.
inline CoefficientTable read_table(std::istream& in) {
  std::string raw;
  std::size_t line_no = 0;
  if (!std::getline(in, raw)) throw ParseError(1, "empty coefficient file");
  ++line_no;
  if (!raw.empty() && raw.back() == '\r') raw.pop_back();
  if (raw != kTableHeader) throw ParseError(line_no, "expected header '" + std::string(kTableHeader) + "'");

  std::map<CoefficientIndex, Rational> entries;
  int max_order = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest = raw;
    while (true) {
      const auto comma = rest.find(',');
      fields.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (fields.size() != 5) throw ParseError(line_no, "expected 5 fields, got " + std::to_string(fields.size()));
    const CoefficientIndex idx{detail::parse_small_int(fields[0], line_no, "i"),
                               detail::parse_small_int(fields[1], line_no, "j"),
                               detail::parse_small_int(fields[2], line_no, "k")};
    const BigInt num = detail::parse_big_int(fields[3], line_no, "numerator");
    const BigInt den = detail::parse_big_int(fields[4], line_no, "denominator");
    if (den == 0) throw ParseError(line_no, "zero denominator");
    if (idx.i < 0 || !admissible(idx, std::max(idx.i, 1)))
      throw ParseError(line_no, "index (" + std::string(fields[0]) + "," + std::string(fields[1]) + "," +
                                    std::string(fields[2]) + ") is not admissible");
    const Rational value(num, den);
    if (idx.i == 0 && value != 1) throw ParseError(line_no, "the (0,0,0) entry must equal 1");
    if (!entries.emplace(idx, value).second) throw ParseError(line_no, "duplicate index");
    max_order = std::max(max_order, idx.i);
  }
  if (max_order < 1) throw ParseError(line_no, "no coefficient rows");
  try {
    return CoefficientTable(max_order, std::move(entries));
  } catch (const DomainError& e) {
    throw ParseError(0, e.what());
  }
}

inline CoefficientTable load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return read_table(in);
}

}  // namespace pfpt
