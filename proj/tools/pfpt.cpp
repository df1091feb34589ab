// pfpt: first-passage densities, oracle comparisons, error estimates and timings.
//
//   pfpt coeffs   --max-order N [--out PATH]
//   pfpt density  --process ou|bessel [model flags] [grid flags] --method M [--compare M2]
//   pfpt error    --process ou|bessel [model flags] [grid flags] [--oracle auto|closed-form|talbot-exact]
//   pfpt bench    [model flags] [--points 100] [--preload]
//   pfpt selftest [--quick] [--coeffs PATH]
//
// Exit status: 0 success, 1 validation error, 2 numerical failure.

#include <pfpt/pfpt.hpp>

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitNumerical = 2;
constexpr const char* kCacheEnv = "PFPT_COEFF_CACHE";

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ProcessKind { ou, bessel };
enum class Method { perturbed, talbot_exact, closed_form, mc };

const std::map<std::string, Method> kMethods = {
    {"perturbed", Method::perturbed},
    {"talbot-exact", Method::talbot_exact},
    {"closed-form", Method::closed_form},
    {"mc", Method::mc},
};

std::string method_name(Method m) {
  for (const auto& [name, value] : kMethods)
    if (value == m) return name;
  return "?";
}

struct RunConfig {
  ProcessKind process = ProcessKind::ou;
  // OU, original coordinates.
  double eps = 0.1;
  double theta = 0.3;
  double sigma = 0.3;
  double x0 = 0.5;
  double level = 0.3;
  // Bessel barrier; x0 and eps are shared.
  double a = 0.1;
  int order = 1;
  double t_start = 0.05;
  double t_stop = 5.0;
  std::size_t points = 100;
  pfpt::Spacing spacing = pfpt::Spacing::linear;
  Method method = Method::perturbed;
  std::optional<Method> compare;
  std::string out;
  std::uint64_t seed = 20240501;
  int talbot_nodes = 32;
  std::size_t paths = 1000;
  std::size_t steps = 1000;
  unsigned threads = 0;
  std::string coeffs;
};

void add_model_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--process", cfg.process, "ou or bessel")
      ->transform(CLI::CheckedTransformer(std::map<std::string, ProcessKind>{{"ou", ProcessKind::ou},
                                                                             {"bessel", ProcessKind::bessel}}));
  cmd->add_option("--eps", cfg.eps, "drift strength");
  cmd->add_option("--theta", cfg.theta, "OU long-run level");
  cmd->add_option("--sigma", cfg.sigma, "OU volatility");
  cmd->add_option("--x0", cfg.x0, "start point");
  cmd->add_option("--level", cfg.level, "OU barrier");
  cmd->add_option("--a", cfg.a, "Bessel barrier");
  cmd->add_option("--order", cfg.order, "perturbation order N");
  cmd->add_option("--coeffs", cfg.coeffs, "coefficient table CSV (default: $PFPT_COEFF_CACHE, else built)");
  cmd->add_option("--threads", cfg.threads, "worker threads (0 = hardware)");
}

void add_grid_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--t-start", cfg.t_start, "first grid time (> 0)");
  cmd->add_option("--t-stop", cfg.t_stop, "last grid time");
  cmd->add_option("--points", cfg.points, "grid points");
  cmd->add_option("--spacing", cfg.spacing, "linear or log")
      ->transform(CLI::CheckedTransformer(std::map<std::string, pfpt::Spacing>{{"linear", pfpt::Spacing::linear},
                                                                              {"log", pfpt::Spacing::log}}));
  cmd->add_option("--seed", cfg.seed, "Monte-Carlo seed");
  cmd->add_option("--paths", cfg.paths, "Monte-Carlo paths");
  cmd->add_option("--steps", cfg.steps, "Euler steps per horizon");
  cmd->add_option("--talbot-nodes", cfg.talbot_nodes, "Talbot contour points");
  cmd->add_option("--out", cfg.out, "output CSV (default: stdout)");
}

pfpt::ScaledProblem scaled_ou(const RunConfig& cfg) {
  return pfpt::normalize({cfg.eps, cfg.theta, cfg.sigma, cfg.x0, cfg.level});
}

pfpt::BesselParams bessel_params(const RunConfig& cfg) { return {cfg.eps, cfg.x0, cfg.a}; }

bool theta_case(const RunConfig& cfg) { return std::abs(scaled_ou(cfg).theta_hat) <= 1e-12; }

/// Parameter checks that must pass before any computation.
void validate_run(const RunConfig& cfg, Method method) {
  if (cfg.process == ProcessKind::ou) {
    scaled_ou(cfg);
  } else {
    if (!(cfg.a > 0.0 && cfg.a < cfg.x0)) throw ValidationError("Bessel requires 0 < a < x0");
    pfpt::validate(bessel_params(cfg));
    if (cfg.order != 1) throw ValidationError("Bessel densities are first order only (--order 1)");
  }
  if (cfg.order < 1) throw ValidationError("--order must be >= 1");
  if (method == Method::closed_form) {
    if (cfg.process != ProcessKind::ou) throw ValidationError("closed-form is available for OU only");
    if (!theta_case(cfg)) throw ValidationError("closed-form requires level == theta");
  }
  if (cfg.talbot_nodes < 16) throw ValidationError("--talbot-nodes must be >= 16");
  if (!(cfg.t_start > 0.0)) throw ValidationError("--t-start must be positive");
  if (!(cfg.t_stop > cfg.t_start)) throw ValidationError("--t-stop must exceed --t-start");
  if (cfg.points < 2) throw ValidationError("--points must be >= 2");
  if (method == Method::mc) {
    if (cfg.points < 10) throw ValidationError("mc histogram needs --points >= 10 bins");
    pfpt::validate(pfpt::McConfig{cfg.paths, cfg.steps, cfg.seed, false, cfg.threads});
  }
}

pfpt::CoefficientTable load_coefficients(const RunConfig& cfg, int order) {
  std::string path = cfg.coeffs;
  if (path.empty()) {
    if (const char* env = std::getenv(kCacheEnv)) {
      std::ifstream probe(env);
      if (probe) path = env;
    }
  }
  if (!path.empty()) {
    auto table = pfpt::load_table(path);
    if (table.max_order() >= order) return table;
    if (!cfg.coeffs.empty())
      throw ValidationError("coefficient file '" + path + "' holds order " + std::to_string(table.max_order()) +
                            " < " + std::to_string(order));
  }
  return pfpt::build_table(std::max(order, 1));
}

pfpt::DensityCurve compute_curve(const RunConfig& cfg, Method method, const pfpt::CoefficientTable* table) {
  const auto grid = pfpt::make_time_grid(cfg.t_start, cfg.t_stop, cfg.points, cfg.spacing);
  const std::string tag = method_name(method);
  const bool ou = cfg.process == ProcessKind::ou;
  switch (method) {
    case Method::perturbed:
      if (ou) {
        const pfpt::OuPerturbedDensity density(scaled_ou(cfg), cfg.order, *table);
        return pfpt::evaluate_curve(grid, tag, density, cfg.threads);
      } else {
        const auto p = bessel_params(cfg);
        return pfpt::evaluate_curve(grid, tag, [p](double t) { return pfpt::density_first_order(p, t); },
                                    cfg.threads);
      }
    case Method::talbot_exact: {
      const pfpt::Process process = ou ? pfpt::Process(scaled_ou(cfg).process()) : pfpt::Process(bessel_params(cfg).process());
      const double start = ou ? scaled_ou(cfg).y0 : cfg.x0;
      const auto lt = pfpt::exact_lt_callable(process, start);
      const int nodes = cfg.talbot_nodes;
      return pfpt::evaluate_curve(grid, tag, [&](double t) { return pfpt::talbot_invert(lt, t, nodes, 1); },
                                  cfg.threads);
    }
    case Method::closed_form: {
      if (!pfpt::closed_form_trust().trusted)
        throw pfpt::NumericalError("closed form failed its self-check; use --method talbot-exact");
      const auto s = scaled_ou(cfg);
      return pfpt::evaluate_curve(grid, tag, [s](double t) { return pfpt::closed_form_theta_case(s.eps, s.y0, t); },
                                  cfg.threads);
    }
    case Method::mc: {
      const pfpt::McConfig mc{cfg.paths, cfg.steps, cfg.seed, false, cfg.threads};
      const pfpt::Process process = ou ? pfpt::Process(scaled_ou(cfg).process()) : pfpt::Process(bessel_params(cfg).process());
      const double start = ou ? scaled_ou(cfg).y0 : cfg.x0;
      auto hist = pfpt::mc_fptd_histogram(process, start, cfg.t_stop, cfg.points, mc);
      hist.curve.footer.emplace_back("crossing_fraction", pfpt::detail::format_double(hist.crossing_fraction));
      hist.curve.footer.emplace_back("paths", std::to_string(hist.n_paths));
      return hist.curve;
    }
  }
  throw ValidationError("unknown method");
}

std::ostream& output_stream(const std::string& path, std::unique_ptr<std::ofstream>& holder) {
  if (path.empty()) return std::cout;
  holder = std::make_unique<std::ofstream>(path, std::ios::binary);
  if (!*holder) throw ValidationError("cannot open '" + path + "' for writing");
  return *holder;
}

int cmd_coeffs(int max_order, std::string out) {
  if (max_order < 1) throw ValidationError("--max-order must be >= 1");
  if (out.empty()) {
    if (const char* env = std::getenv(kCacheEnv)) out = env;
  }
  if (out.empty()) throw ValidationError("--out is required when $PFPT_COEFF_CACHE is unset");
  pfpt::save_table(pfpt::build_table(max_order), out);
  return 0;
}

int cmd_density(const RunConfig& cfg) {
  validate_run(cfg, cfg.method);
  if (cfg.compare) validate_run(cfg, *cfg.compare);
  if (cfg.method == Method::mc && cfg.compare) throw ValidationError("--compare is not available for mc curves");
  std::optional<pfpt::CoefficientTable> table;
  if (cfg.process == ProcessKind::ou) table = load_coefficients(cfg, cfg.order);

  pfpt::DensityCurve curve = compute_curve(cfg, cfg.method, table ? &*table : nullptr);
  curve.footer.emplace_back("process", cfg.process == ProcessKind::ou ? "ou" : "bessel");
  curve.footer.emplace_back("order", std::to_string(cfg.order));
  if (cfg.compare) {
    const pfpt::DensityCurve other = compute_curve(cfg, *cfg.compare, table ? &*table : nullptr);
    double gap = 0.0;
    for (std::size_t i = 0; i < curve.size(); ++i)
      gap = std::max(gap, std::abs(curve.p[i] - other.p[i]) / std::abs(other.p[i]));
    curve.footer.emplace_back("compare", method_name(*cfg.compare));
    curve.footer.emplace_back("max_rel_gap", pfpt::detail::format_double(gap));
  }
  if (curve.any_flag(pfpt::kFlagNegative))
    std::cerr << "warning: negative density values (truncated series beyond its range)\n";
  std::unique_ptr<std::ofstream> file;
  pfpt::write_curve(curve, output_stream(cfg.out, file));
  return 0;
}

int cmd_error(const RunConfig& cfg, const std::string& oracle_choice) {
  validate_run(cfg, Method::perturbed);
  Method oracle = Method::talbot_exact;
  if (oracle_choice == "closed-form") {
    validate_run(cfg, Method::closed_form);
    oracle = Method::closed_form;
  } else if (oracle_choice == "auto") {
    if (cfg.process == ProcessKind::ou && theta_case(cfg)) oracle = Method::closed_form;
  } else if (oracle_choice != "talbot-exact") {
    throw ValidationError("unknown oracle '" + oracle_choice + "'");
  }
  if (oracle == Method::closed_form && !pfpt::closed_form_trust().trusted) oracle = Method::talbot_exact;

  const auto grid = pfpt::make_time_grid(cfg.t_start, cfg.t_stop, cfg.points, cfg.spacing);
  const pfpt::McConfig mc{cfg.paths, cfg.steps, cfg.seed, false, cfg.threads};
  std::optional<pfpt::CoefficientTable> table;
  if (cfg.process == ProcessKind::ou) table = load_coefficients(cfg, cfg.order);
  const pfpt::DensityCurve reference = compute_curve(cfg, oracle, table ? &*table : nullptr);

  std::unique_ptr<std::ofstream> file;
  std::ostream& out = output_stream(cfg.out, file);
  out << "t,q_hat,std_err,p_n,rel_err,realized_rel_err,oracle\n";
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double t = grid[i];
    pfpt::ErrorReport r = cfg.process == ProcessKind::ou ? pfpt::estimate_q(scaled_ou(cfg), cfg.order, *table, t, mc)
                                                         : pfpt::estimate_q(bessel_params(cfg), t, mc);
    r.realized_rel_err = std::abs(reference.p[i] - r.p_n) / std::abs(reference.p[i]);
    using pfpt::detail::format_double;
    out << format_double(t) << ',' << format_double(r.q_hat) << ',' << format_double(r.std_err) << ','
        << format_double(r.p_n) << ',' << format_double(r.rel_err) << ',' << format_double(*r.realized_rel_err)
        << ',' << method_name(oracle) << '\n';
  }
  return 0;
}

int cmd_bench(const RunConfig& cfg, bool preload) {
  validate_run(cfg, Method::perturbed);
  const auto grid = pfpt::make_time_grid(cfg.t_start, cfg.t_stop, cfg.points, cfg.spacing);
  using clock = std::chrono::steady_clock;
  std::optional<pfpt::CoefficientTable> table;
  if (preload && cfg.process == ProcessKind::ou) table = load_coefficients(cfg, cfg.order);

  double sink = 0.0;
  auto start = clock::now();
  if (cfg.process == ProcessKind::ou) {
    if (!table) table = load_coefficients(cfg, cfg.order);
    const pfpt::OuPerturbedDensity density(scaled_ou(cfg), cfg.order, *table);
    for (double t : grid) sink += density(t);
  } else {
    const auto p = bessel_params(cfg);
    for (double t : grid) sink += pfpt::density_first_order(p, t);
  }
  const double perturbed = std::chrono::duration<double>(clock::now() - start).count();

  start = clock::now();
  const bool ou = cfg.process == ProcessKind::ou;
  const pfpt::Process process = ou ? pfpt::Process(scaled_ou(cfg).process()) : pfpt::Process(bessel_params(cfg).process());
  const auto lt = pfpt::exact_lt_callable(process, ou ? scaled_ou(cfg).y0 : cfg.x0);
  for (double t : grid) sink += pfpt::talbot_invert(lt, t, cfg.talbot_nodes, 1);
  const double talbot = std::chrono::duration<double>(clock::now() - start).count();
  if (!std::isfinite(sink)) throw pfpt::NumericalError("non-finite density during benchmark");

  std::printf("method,points,total_seconds,seconds_per_point\n");
  std::printf("perturbed,%zu,%.6e,%.6e\n", grid.size(), perturbed, perturbed / grid.size());
  std::printf("talbot-exact,%zu,%.6e,%.6e\n", grid.size(), talbot, talbot / grid.size());
  std::printf("# ratio=%.1f\n", talbot / perturbed);
  std::printf("# table_load=%s\n", preload ? "excluded" : "included");
  return 0;
}

int cmd_selftest(bool quick, const std::string& coeffs, unsigned threads) {
  pfpt::AcceptanceOptions options;
  options.quick = quick;
  options.threads = threads;
  if (!coeffs.empty()) options.table = pfpt::load_table(coeffs);
  options.on_result = [](const pfpt::CriterionResult& r) {
    std::printf("%s\n", pfpt::format_result(r).c_str());
    std::fflush(stdout);
  };
  const auto results = pfpt::run_acceptance(options);
  const bool ok = pfpt::all_passed(results);
  std::printf("selftest: %s\n", ok ? "all criteria passed" : "FAILED");
  return ok ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perturbed first-passage-time densities for OU and Bessel diffusions"};
  app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
  app.require_subcommand(1);

  int max_order = 0;
  std::string coeffs_out;
  auto* coeffs = app.add_subcommand("coeffs", "build and save the OU coefficient table");
  coeffs->add_option("--max-order", max_order, "highest order N")->required();
  coeffs->add_option("--out", coeffs_out, "output CSV (default: $PFPT_COEFF_CACHE)");

  RunConfig run;
  std::string method = "perturbed";
  std::string compare;
  auto* density = app.add_subcommand("density", "density curve to CSV");
  add_model_flags(density, run);
  add_grid_flags(density, run);
  density->add_option("--method", method, "perturbed, talbot-exact, closed-form or mc");
  density->add_option("--compare", compare, "second method; max relative gap goes to the footer");

  std::string oracle = "auto";
  auto* error = app.add_subcommand("error", "Monte-Carlo truncation error and realized error per grid point");
  add_model_flags(error, run);
  add_grid_flags(error, run);
  error->add_option("--oracle", oracle, "auto, closed-form or talbot-exact");

  bool preload = false;
  auto* bench = app.add_subcommand("bench", "time perturbed vs talbot-exact evaluation");
  add_model_flags(bench, run);
  add_grid_flags(bench, run);
  bench->add_flag("--preload", preload, "load the coefficient table before timing starts");

  bool quick = false;
  std::string self_coeffs;
  unsigned self_threads = 0;
  auto* selftest = app.add_subcommand("selftest", "run the acceptance criteria");
  selftest->add_flag("--quick", quick, "skip the Monte-Carlo criteria");
  selftest->add_option("--coeffs", self_coeffs, "coefficient table to check");
  selftest->add_option("--threads", self_threads, "worker threads (0 = hardware)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    const auto parse_method = [](const std::string& name) {
      const auto it = kMethods.find(name);
      if (it == kMethods.end()) throw ValidationError("unknown method '" + name + "'");
      return it->second;
    };
    if (*coeffs) return cmd_coeffs(max_order, coeffs_out);
    if (*density) {
      run.method = parse_method(method);
      if (!compare.empty()) run.compare = parse_method(compare);
      return cmd_density(run);
    }
    if (*error) return cmd_error(run, oracle);
    if (*bench) return cmd_bench(run, preload);
    if (*selftest) return cmd_selftest(quick, self_coeffs, self_threads);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pfpt::DomainError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pfpt::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const pfpt::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitValidation;
}
