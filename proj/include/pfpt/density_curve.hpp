#pragma once

// DensityCurve: a time grid with density values, a method tag and per-point
// flags, plus its CSV form `t,p,method,flags` with '#' footer lines.

#include <pfpt/detail/parallel.hpp>
#include <pfpt/errors.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pfpt {

inline constexpr std::string_view kCurveHeader = "t,p,method,flags";
inline constexpr std::string_view kFlagNegative = "negative";
inline constexpr std::string_view kFlagNonFinite = "nonfinite";

struct DensityCurve {
  std::vector<double> t;
  std::vector<double> p;
  std::string method;
  std::vector<std::string> flags;  ///< per point; empty when clean, ';'-joined otherwise
  double seconds_per_point = 0.0;
  std::vector<std::pair<std::string, std::string>> footer;  ///< written as "# key=value"

  std::size_t size() const noexcept { return t.size(); }
  bool any_flag(std::string_view flag) const {
    for (const auto& f : flags)
      if (f.find(flag) != std::string::npos) return true;
    return false;
  }
  bool operator==(const DensityCurve&) const = default;
};

enum class Spacing { linear, log };

inline std::vector<double> make_time_grid(double start, double stop, std::size_t points, Spacing spacing) {
  if (!(start > 0.0)) throw DomainError("time grid: start must be positive");
  if (!(stop > start)) throw DomainError("time grid: stop must exceed start");
  if (points < 2) throw DomainError("time grid: need at least 2 points");
  std::vector<double> grid(points);
  const double last = static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    const double u = static_cast<double>(i) / last;
    grid[i] = spacing == Spacing::linear ? start + (stop - start) * u
                                         : std::exp(std::log(start) + (std::log(stop) - std::log(start)) * u);
  }
  grid.front() = start;
  grid.back() = stop;
  return grid;
}

inline std::string point_flags(double value) {
  if (!std::isfinite(value)) return std::string(kFlagNonFinite);
  if (value < 0.0) return std::string(kFlagNegative);
  return {};
}

/// Evaluates `density` on the grid using `threads` workers (0 = hardware).
/// Values depend only on the grid point, never on scheduling.
inline DensityCurve evaluate_curve(const std::vector<double>& grid, std::string method,
                                   const std::function<double(double)>& density, unsigned threads = 0) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError("time grid must be strictly increasing");
  DensityCurve curve;
  curve.t = grid;
  curve.p.assign(grid.size(), 0.0);
  curve.method = std::move(method);
  const auto start = std::chrono::steady_clock::now();
  detail::parallel_for(grid.size(), threads, [&](std::size_t i) { curve.p[i] = density(grid[i]); });
  const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
  curve.seconds_per_point = grid.empty() ? 0.0 : elapsed.count() / static_cast<double>(grid.size());
  curve.flags.resize(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) curve.flags[i] = point_flags(curve.p[i]);
  return curve;
}

namespace detail {

/// 17 significant digits, enough to parse back to the same double.
inline std::string format_double(double v) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

inline double parse_double(std::string_view s, std::size_t line) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ParseError(line, "not a number: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t begin = 0;
  while (true) {
    const auto pos = line.find(sep, begin);
    out.push_back(line.substr(begin, pos == std::string_view::npos ? std::string_view::npos : pos - begin));
    if (pos == std::string_view::npos) break;
    begin = pos + 1;
  }
  return out;
}

}  // namespace detail

inline void write_curve(const DensityCurve& curve, std::ostream& out) {
  out << kCurveHeader << '\n';
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << detail::format_double(curve.t[i]) << ',' << detail::format_double(curve.p[i]) << ',' << curve.method
        << ',' << (i < curve.flags.size() ? curve.flags[i] : std::string()) << '\n';
  }
  out << "# seconds_per_point=" << detail::format_double(curve.seconds_per_point) << '\n';
  for (const auto& [key, value] : curve.footer) out << "# " << key << '=' << value << '\n';
}

inline DensityCurve read_curve(std::istream& in) {
  DensityCurve curve;
  std::string line;
  std::size_t number = 0;
  if (!std::getline(in, line)) throw ParseError(0, "empty curve file");
  ++number;
  if (line != kCurveHeader) throw ParseError(number, "expected header '" + std::string(kCurveHeader) + "'");
  bool have_method = false;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::string_view body(line);
      body.remove_prefix(body.size() > 1 && body[1] == ' ' ? 2 : 1);
      const auto eq = body.find('=');
      if (eq == std::string_view::npos) throw ParseError(number, "footer line without '='");
      const std::string key(body.substr(0, eq));
      const std::string value(body.substr(eq + 1));
      if (key == "seconds_per_point")
        curve.seconds_per_point = detail::parse_double(value, number);
      else
        curve.footer.emplace_back(key, value);
      continue;
    }
    const auto fields = detail::split(line, ',');
    if (fields.size() != 4) throw ParseError(number, "expected 4 fields");
    const double t = detail::parse_double(fields[0], number);
    if (!curve.t.empty() && !(t > curve.t.back())) throw ParseError(number, "t must be strictly increasing");
    curve.t.push_back(t);
    curve.p.push_back(detail::parse_double(fields[1], number));
    if (!have_method) {
      curve.method = std::string(fields[2]);
      have_method = true;
    } else if (fields[2] != curve.method) {
      throw ParseError(number, "mixed method tags in one curve");
    }
    curve.flags.emplace_back(fields[3]);
  }
  return curve;
}

}  // namespace pfpt
