#pragma once

// Euler-Maruyama simulation to a barrier, the Monte-Carlo truncation-error
// estimator q(t) = eps^{N+1} E[ int_0^{tau ^ t} h(X_u) eta(X_u, t - u) du ],
// and a histogram estimate of the first-passage density.
//
// Path i draws its normals from its own mt19937_64 stream, seeded by
// seed_seq{seed, i}, so results never depend on the thread count. With
// antithetic pairs, paths 2k and 2k + 1 share stream k with opposite signs.

#include <pfpt/bessel_fptd.hpp>
#include <pfpt/coeff_engine.hpp>
#include <pfpt/density_curve.hpp>
#include <pfpt/detail/parallel.hpp>
#include <pfpt/errors.hpp>
#include <pfpt/ou_fptd.hpp>
#include <pfpt/process.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace pfpt {

struct McConfig {
  std::size_t n_paths = 1000;
  std::size_t steps_per_horizon = 1000;
  std::uint64_t seed = 20240501;
  bool antithetic = false;
  unsigned threads = 0;  ///< 0 = hardware parallelism
};

inline void validate(const McConfig& cfg) {
  if (cfg.n_paths < 2) throw DomainError("McConfig: n_paths must be at least 2");
  if (cfg.steps_per_horizon < 10) throw DomainError("McConfig: steps_per_horizon must be at least 10");
}

struct PathRecord {
  bool crossed = false;
  std::size_t crossing_step = 0;  ///< first step m >= 1 with X_m <= barrier; valid when crossed
  std::vector<double> states;     ///< X_0 .. X_{min(crossing, steps)}
};

struct PathSet {
  double dt = 0.0;
  std::size_t steps = 0;
  std::vector<PathRecord> paths;
};

namespace detail {

inline std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  return std::mt19937_64(seq);
}

struct PathEnd {
  std::size_t crossing_step = 0;  ///< 0 when the path survives the horizon
  double state = 0.0;             ///< crossing state, or X at the horizon
};

/// Simulates path `index` and calls visit(m, X_m) for every state strictly
/// before the crossing (m = 0 .. min(crossing, steps) - 1).
template <class P, class Visit>
PathEnd run_path(const P& process, double x0, double dt, std::size_t steps, const McConfig& cfg, std::size_t index,
                 Visit&& visit) {
  const std::uint64_t stream = cfg.antithetic ? index / 2 : index;
  const double sign = cfg.antithetic && (index % 2 == 1) ? -1.0 : 1.0;
  auto engine = path_engine(cfg.seed, stream);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sqrt_dt = std::sqrt(dt);
  const double barrier = process.barrier();
  double x = x0;
  for (std::size_t m = 0; m < steps; ++m) {
    visit(m, x);
    x += process.drift(x) * dt + sign * sqrt_dt * normal(engine);
    if (x <= barrier) return {m + 1, x};
  }
  return {0, x};
}

/// Sum in a fixed pairwise order, independent of how the values were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t mid = v.size() / 2;
  return pairwise_sum(v.first(mid)) + pairwise_sum(v.subspan(mid));
}

inline void check_start(const Process& process, double x0) {
  if (!(x0 > barrier_of(process))) throw DomainError("simulation: start must lie above the barrier");
  if (const auto* b = std::get_if<BesselProcess>(&process)) validate(*b);
}

}  // namespace detail

/// Euler-Maruyama paths with dt = horizon / steps_per_horizon. Trajectories are kept
/// only when `keep_states` is set.
inline PathSet simulate_to_barrier(const Process& process, double x0, double horizon, const McConfig& cfg,
                                   bool keep_states = true) {
  if (!(horizon > 0.0)) throw DomainError("simulate_to_barrier: horizon must be positive");
  validate(cfg);
  detail::check_start(process, x0);
  PathSet set;
  set.steps = cfg.steps_per_horizon;
  set.dt = horizon / static_cast<double>(set.steps);
  set.paths.resize(cfg.n_paths);
  std::visit(
      [&](const auto& p) {
        detail::parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
          PathRecord& rec = set.paths[i];
          if (keep_states) rec.states.reserve(64);
          const auto end = detail::run_path(p, x0, set.dt, set.steps, cfg, i, [&](std::size_t, double x) {
            if (keep_states) rec.states.push_back(x);
          });
          rec.crossed = end.crossing_step != 0;
          rec.crossing_step = end.crossing_step;
          if (keep_states) rec.states.push_back(end.state);
        });
      },
      process);
  return set;
}

struct ErrorReport {
  double t = 0.0;
  double q_hat = 0.0;
  double std_err = 0.0;
  double p_n = 0.0;      ///< perturbed density p^{(N)}(t)
  double rel_err = 0.0;  ///< |q_hat / (p^{(N)} + q_hat)|
  std::optional<double> realized_rel_err;
};

inline double relative_error(double q_hat, double p_n) { return std::abs(q_hat / (p_n + q_hat)); }

namespace detail {

template <class P, class Eta>
ErrorReport estimate_q_impl(const P& process, double x0, const Eta& eta, double eps_power, double p_n, double t,
                            const McConfig& cfg) {
  if (!(t > 0.0)) throw DomainError("estimate_q: t must be positive");
  validate(cfg);
  ErrorReport report;
  report.t = t;
  report.p_n = p_n;
  if (eps_power == 0.0) {
    report.rel_err = 0.0;
    return report;
  }
  const std::size_t steps = cfg.steps_per_horizon;
  const double dt = t / static_cast<double>(steps);
  std::vector<double> values(cfg.n_paths, 0.0);
  parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
    double acc = 0.0;
    run_path(process, x0, dt, steps, cfg, i, [&](std::size_t m, double x) {
      acc += process.h(x) * eta(x, t - static_cast<double>(m) * dt) * dt;
    });
    values[i] = acc;
  });

  // Antithetic pairs are one sample each for the variance.
  std::vector<double> samples;
  if (cfg.antithetic) {
    for (std::size_t i = 0; i + 1 < values.size(); i += 2) samples.push_back(0.5 * (values[i] + values[i + 1]));
    if (values.size() % 2 == 1) samples.push_back(values.back());
  } else {
    samples = values;
  }
  const double n = static_cast<double>(samples.size());
  const double mean = pairwise_sum(samples) / n;
  std::vector<double> sq(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) sq[i] = (samples[i] - mean) * (samples[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1.0);

  report.q_hat = eps_power * mean;
  report.std_err = std::abs(eps_power) * std::sqrt(var / n);
  report.rel_err = relative_error(report.q_hat, p_n);
  return report;
}

}  // namespace detail

/// Truncation-error estimate for the scaled OU problem at order N.
inline ErrorReport estimate_q(const ScaledProblem& scaled, int order, const CoefficientTable& table, double t,
                              const McConfig& cfg) {
  const OuPerturbedDensity density(scaled, order, table);
  const OuEta kernel(scaled, order, table);
  const double eps_power = std::pow(scaled.eps, order + 1);
  return detail::estimate_q_impl(scaled.process(), scaled.y0, kernel, eps_power, density(t), t, cfg);
}

/// Truncation-error estimate for BES(1 + eps) at first order.
inline ErrorReport estimate_q(const BesselParams& params, double t, const McConfig& cfg) {
  validate(params);
  const BesselEta kernel(params);
  return detail::estimate_q_impl(params.process(), params.x0, kernel, params.eps * params.eps,
                                 density_first_order(params, t), t, cfg);
}

struct FptHistogram {
  DensityCurve curve;                 ///< bin centres, density among crossed paths
  double crossing_fraction = 0.0;     ///< crossed paths / all paths
  std::vector<double> crossing_times; ///< sorted
  std::size_t n_paths = 0;
  double bin_width = 0.0;
};

/// Histogram of crossing times on [0, horizon] with `bins` equal bins.
inline FptHistogram mc_fptd_histogram(const Process& process, double x0, double horizon, std::size_t bins,
                                      const McConfig& cfg) {
  if (!(horizon > 0.0)) throw DomainError("mc_fptd_histogram: horizon must be positive");
  if (bins < 10) throw DomainError("mc_fptd_histogram: need at least 10 bins");
  validate(cfg);
  detail::check_start(process, x0);
  const double dt = horizon / static_cast<double>(cfg.steps_per_horizon);
  std::vector<std::size_t> crossing(cfg.n_paths, 0);
  std::visit(
      [&](const auto& p) {
        detail::parallel_for(cfg.n_paths, cfg.threads, [&](std::size_t i) {
          crossing[i] =
              detail::run_path(p, x0, dt, cfg.steps_per_horizon, cfg, i, [](std::size_t, double) {}).crossing_step;
        });
      },
      process);

  FptHistogram out;
  out.n_paths = cfg.n_paths;
  for (std::size_t c : crossing)
    if (c != 0) out.crossing_times.push_back(static_cast<double>(c) * dt);
  if (out.crossing_times.empty()) throw NumericalError("mc_fptd_histogram: no path crossed; the curve is empty");
  std::sort(out.crossing_times.begin(), out.crossing_times.end());
  out.crossing_fraction = static_cast<double>(out.crossing_times.size()) / static_cast<double>(cfg.n_paths);

  out.bin_width = horizon / static_cast<double>(bins);
  std::vector<std::size_t> counts(bins, 0);
  for (double tau : out.crossing_times) {
    auto b = static_cast<std::size_t>(tau / out.bin_width);
    if (b >= bins) b = bins - 1;  // tau == horizon
    ++counts[b];
  }
  const double norm = 1.0 / (static_cast<double>(out.crossing_times.size()) * out.bin_width);
  out.curve.method = "mc";
  for (std::size_t b = 0; b < bins; ++b) {
    out.curve.t.push_back((static_cast<double>(b) + 0.5) * out.bin_width);
    out.curve.p.push_back(static_cast<double>(counts[b]) * norm);
    out.curve.flags.emplace_back();
  }
  return out;
}

/// Kolmogorov-Smirnov distance between the empirical crossing-time CDF over all
/// n_paths (survivors contribute no mass) and a model CDF, taken over `grid`.
/// Both one-sided limits of the empirical step function are compared at every
/// grid point.
inline double ks_distance(std::span<const double> sorted_times, std::size_t n_paths, std::span<const double> grid,
                          std::span<const double> model_cdf) {
  if (grid.size() != model_cdf.size()) throw DomainError("ks_distance: grid and CDF sizes differ");
  const double n = static_cast<double>(n_paths);
  double worst = 0.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    const auto below = std::lower_bound(sorted_times.begin(), sorted_times.end(), grid[g]) - sorted_times.begin();
    const auto upto = std::upper_bound(sorted_times.begin(), sorted_times.end(), grid[g]) - sorted_times.begin();
    worst = std::max(worst, std::abs(static_cast<double>(below) / n - model_cdf[g]));
    worst = std::max(worst, std::abs(static_cast<double>(upto) / n - model_cdf[g]));
  }
  return worst;
}

}  // namespace pfpt
