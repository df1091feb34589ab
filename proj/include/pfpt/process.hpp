#pragma once

// Diffusions dX = eps * h(X) dt + dW hitting a single barrier from above.

#include <pfpt/errors.hpp>

#include <cmath>
#include <string>
#include <variant>

namespace pfpt {

/// Normalized OU process dY = eps (theta_hat - Y) dt + dW with barrier 0.
struct OuProcess {
  double eps = 0.0;
  double theta_hat = 0.0;

  double barrier() const noexcept { return 0.0; }
  double h(double x) const noexcept { return theta_hat - x; }
  double drift(double x) const noexcept { return eps * h(x); }
};

/// BES(1 + eps): dX = eps / (2X) dt + dW, hitting a > 0 from above.
struct BesselProcess {
  double eps = 0.0;
  double a = 0.0;

  double barrier() const noexcept { return a; }
  double h(double x) const noexcept { return 0.5 / x; }
  double drift(double x) const noexcept { return eps * h(x); }
};

using Process = std::variant<OuProcess, BesselProcess>;

inline double barrier_of(const Process& p) {
  return std::visit([](const auto& q) { return q.barrier(); }, p);
}

inline void validate(const BesselProcess& p) {
  if (!(p.eps > -1.0 && p.eps < 1.0)) throw DomainError("Bessel: eps must satisfy -1 < eps < 1");
  if (!(p.a > 0.0)) throw DomainError("Bessel: barrier a must be positive (a = 0 is not supported)");
}

}  // namespace pfpt
