#pragma once

// Batch commands behind the selfsim executable.  Each command validates its
// configuration, writes CSV files into the output directory and returns an
// exit code: 0 success, 1 configuration error, 2 non-convergence,
// 3 verification failure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/boundary_layer.hpp"
#include "selfsim/csv.hpp"
#include "selfsim/grid.hpp"
#include "selfsim/kernels.hpp"
#include "selfsim/profile_solver.hpp"
#include "selfsim/verify.hpp"

namespace selfsim::cli {

enum ExitCode : int { kOk = 0, kConfigError = 1, kNotConverged = 2, kCheckFailed = 3 };

/// A e^{-r x}, written "exp", "exp:r" or "exp:A:r".
struct InitSpec {
  double amplitude = 1.0;
  double rate = 1.0;
  std::string label = "exp:1:1";
};

inline InitSpec parse_init(const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
  if (parts.empty() || parts[0] != "exp" || parts.size() > 3)
    throw std::invalid_argument("init '" + s + "': expected exp, exp:RATE or exp:AMPLITUDE:RATE");
  InitSpec init;
  try {
    if (parts.size() == 2) init.rate = std::stod(parts[1]);
    if (parts.size() == 3) {
      init.amplitude = std::stod(parts[1]);
      init.rate = std::stod(parts[2]);
    }
  } catch (const std::logic_error&) {
    throw std::invalid_argument("init '" + s + "': malformed number");
  }
  if (!(init.amplitude > 0.0) || !(init.rate > 0.0) || !std::isfinite(init.amplitude) || !std::isfinite(init.rate))
    throw std::invalid_argument("init '" + s + "': amplitude and rate must be positive");
  init.label = "exp:" + format_real(init.amplitude) + ":" + format_real(init.rate);
  return init;
}

struct RunConfig {
  double x_min = 1e-5;
  double x_max = 40.0;
  std::size_t n = 1024;

  double epsilon = 0.0;
  double alpha = 0.5;
  double c_star = 1.0;
  /// NaN selects (3 + alpha)/2.
  double beta = std::numeric_limits<double>::quiet_NaN();

  double tol = 1e-10;
  std::size_t max_iter = 500;
  double damping = 1.0;
  std::string scheme = "boundary_layer";

  std::string output_dir = ".";
  bool gnuplot = false;

  std::vector<double> epsilon_list = {0.2, 0.1, 0.05, 0.025, 0.0125};
  std::vector<std::string> init_list = {"exp:1:1", "exp:2:2"};
  /// Uniqueness: max pairwise distance.  bl: max boundary-layer residual.
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> only;
  std::uint64_t seed = 20170601;

  KernelSpec kernel(double eps) const { return power_kernel(eps, alpha, c_star); }
  KernelSpec kernel() const { return kernel(epsilon); }

  SolverOptions solver() const {
    SolverOptions o;
    o.scheme = parse_scheme(scheme);
    o.damping = damping;
    o.tol = tol;
    o.max_iter = max_iter;
    o.beta = beta;
    return o;
  }

  WeightParams weight() const { return {-alpha, std::isnan(beta) ? default_beta(alpha) : beta}; }

  GridPtr grid() const { return make_grid(x_min, x_max, n); }

  /// Throws std::invalid_argument on the first violated constraint.
  void validate() const {
    if (!(x_min > 0.0) || !std::isfinite(x_min)) throw std::invalid_argument("x-min must be positive");
    if (!(x_max > x_min) || !std::isfinite(x_max)) throw std::invalid_argument("x-max must exceed x-min");
    if (!(x_min < 1.0 && x_max > 1.0)) throw std::invalid_argument("the grid must contain x = 1");
    if (n < kMinGridSize) throw std::invalid_argument("n must be at least " + std::to_string(kMinGridSize));
    validate_spec(kernel());
    for (double e : epsilon_list) validate_spec(kernel(e));
    solver().validate();
    if (!std::isnan(threshold) && !(threshold > 0.0)) throw std::invalid_argument("threshold must be positive");
    for (const auto& s : init_list) parse_init(s);
    for (const auto& name : only) {
      const auto& names = verify_check_names();
      if (std::find(names.begin(), names.end(), name) == names.end())
        throw std::invalid_argument("unknown verify check '" + name + "'");
    }
  }
};

namespace detail {

inline std::filesystem::path prepare_output(const RunConfig& c) {
  std::filesystem::path dir(c.output_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void common_meta(CsvTable& t, const RunConfig& c, const std::string& command) {
  t.meta("command", command)
      .meta("x_min", c.x_min)
      .meta("x_max", c.x_max)
      .meta("n", std::to_string(c.n))
      .meta("alpha", c.alpha)
      .meta("c_star", c.c_star)
      .meta("beta", c.weight().b);
}

inline void solver_meta(CsvTable& t, const RunConfig& c) {
  t.meta("scheme", c.scheme).meta("tol", c.tol).meta("max_iter", std::to_string(c.max_iter)).meta("damping", c.damping);
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
}

inline ProfileSolution solve_from(const RunConfig& c, double eps, const InitSpec& init = {}) {
  const auto g = c.grid();
  return solve_profile(c.kernel(eps), c.solver(), exponential_profile(g, init.rate, init.amplitude));
}

inline void report_failure(const std::string& what, const ProfileSolution& s) {
  std::cerr << what << ": " << to_string(s.status) << " after " << s.iterations << " iterations (last change "
            << s.last_change << ")\n";
  if (s.status == SolveStatus::not_finite || s.status == SolveStatus::diverged)
    std::cerr << "hint: the layer near x_min may be under-resolved; raise --n or --x-min\n";
}

inline GridFunction exp_on(const GridPtr& g) { return exponential_profile(g); }

}  // namespace detail

inline int cmd_solve(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  const auto s = detail::solve_from(c, c.epsilon);
  const auto& p = s.profile;
  const auto e = detail::exp_on(p.grid_ptr());

  CsvTable profile({"x", "pi"});
  detail::common_meta(profile, c, "solve");
  detail::solver_meta(profile, c);
  profile.meta("epsilon", c.epsilon).meta("status", to_string(s.status)).meta("iterations", std::to_string(s.iterations));
  for (std::size_t i = 0; i < p.size(); ++i) profile.row({p.grid()[i], p[i]});
  profile.save((dir / "profile.csv").string());

  CsvTable diag({"name", "value"});
  detail::common_meta(diag, c, "solve");
  detail::solver_meta(diag, c);
  diag.meta("epsilon", c.epsilon).meta("status", to_string(s.status));
  const auto add = [&](const std::string& name, double v) { diag.row({name, v}); };
  const bool finite = s.status != SolveStatus::not_finite && s.status != SolveStatus::diverged;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  add("iterations", static_cast<double>(s.iterations));
  add("last_change", s.last_change);
  add("mass", s.mass);
  add("number", integrate(p));
  add("residual", s.final_residual);
  add("bl_residual", finite ? bl_residual(p, c.kernel(), c.beta) : nan);
  add("kappa", kappa_of(p));
  double rate = nan;
  try {
    rate = tail_decay_rate(p);
  } catch (const std::domain_error&) {
  }
  add("tail_rate", rate);
  add("laplace_gap", finite ? laplace_gap(p) : nan);
  for (double m : {-c.alpha, 0.0, c.alpha, 1.0, 2.0}) {
    double v = nan;
    try {
      v = moment(p, m);
    } catch (const std::exception&) {
    }
    add("moment_" + format_real(m), v);
  }
  add("norm_ab", weighted_distance(p, e, c.weight()));
  add("norm_01", weighted_distance(p, e, {0.0, 1.0}));
  add("pointwise_gap_x1", std::abs(p(1.0) - std::exp(-1.0)));
  diag.save((dir / "diagnostics.csv").string());

  if (c.gnuplot)
    detail::write_text(dir / "solve.gp",
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 'x'\nset ylabel 'pi'\n"
                       "plot 'profile.csv' using 1:2 with lines title 'profile', exp(-x) title 'e^{-x}'\n");
  if (!s.converged) {
    detail::report_failure("solve", s);
    return kNotConverged;
  }
  return kOk;
}

inline int cmd_sweep(const RunConfig& c) {
  if (c.epsilon_list.empty()) {
    std::cerr << "sweep: the epsilon list is empty\n";
    return kConfigError;
  }
  for (std::size_t k = 1; k < c.epsilon_list.size(); ++k)
    if (!(c.epsilon_list[k] < c.epsilon_list[k - 1])) {
      std::cerr << "sweep: the epsilon list must be strictly decreasing\n";
      return kConfigError;
    }
  const auto dir = detail::prepare_output(c);
  CsvTable t({"epsilon", "norm_ab", "norm_01", "kappa", "laplace_gap", "pointwise_gap_x1", "iterations", "status"});
  detail::common_meta(t, c, "sweep");
  detail::solver_meta(t, c);
  const auto path = (dir / "sweep.csv").string();
  bool all = true;
  for (double eps : c.epsilon_list) {
    const auto s = detail::solve_from(c, eps);
    const auto& p = s.profile;
    const auto e = detail::exp_on(p.grid_ptr());
    const bool finite = s.status != SolveStatus::not_finite && s.status != SolveStatus::diverged;
    t.row({eps, weighted_distance(p, e, c.weight()), weighted_distance(p, e, {0.0, 1.0}), kappa_of(p),
           finite ? laplace_gap(p) : std::numeric_limits<double>::quiet_NaN(), std::abs(p(1.0) - std::exp(-1.0)),
           static_cast<long long>(s.iterations), to_string(s.status)});
    // Rewritten after every solve so a failure leaves the finished rows on disk.
    t.save(path);
    if (!s.converged) {
      detail::report_failure("sweep at epsilon=" + format_real(eps), s);
      all = false;
    }
  }
  if (c.gnuplot)
    detail::write_text(dir / "sweep.gp",
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale xy\nset xlabel 'epsilon'\nset key left\n"
                       "plot 'sweep.csv' using 1:2 with linespoints title 'norm_ab', "
                       "'' using 1:3 with linespoints title 'norm_01'\n");
  return all ? kOk : kNotConverged;
}

inline int cmd_uniqueness(const RunConfig& c) {
  if (c.init_list.size() < 2) {
    std::cerr << "uniqueness: at least two initial profiles are required\n";
    return kConfigError;
  }
  const double threshold = std::isnan(c.threshold) ? 1e-6 : c.threshold;
  const auto dir = detail::prepare_output(c);
  std::vector<InitSpec> inits;
  for (const auto& s : c.init_list) inits.push_back(parse_init(s));

  std::vector<ProfileSolution> sols;
  bool all = true;
  for (const auto& init : inits) {
    sols.push_back(detail::solve_from(c, c.epsilon, init));
    if (!sols.back().converged) {
      detail::report_failure("uniqueness from " + init.label, sols.back());
      all = false;
    }
  }
  CsvTable t({"init_a", "init_b", "distance"});
  detail::common_meta(t, c, "uniqueness");
  detail::solver_meta(t, c);
  t.meta("epsilon", c.epsilon).meta("threshold", threshold);
  double worst = 0.0;
  for (std::size_t a = 0; a < sols.size(); ++a)
    for (std::size_t b = a + 1; b < sols.size(); ++b) {
      const double d = weighted_distance(sols[a].profile, sols[b].profile, c.weight());
      worst = std::max(worst, std::isnan(d) ? std::numeric_limits<double>::infinity() : d);
      t.row({inits[a].label, inits[b].label, d});
    }
  t.save((dir / "uniqueness.csv").string());
  if (c.gnuplot)
    detail::write_text(dir / "uniqueness.gp",
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset style data histograms\nset style fill solid\n"
                       "plot 'uniqueness.csv' using 3:xticlabels(stringcolumn(1).' / '.stringcolumn(2)) "
                       "title 'distance'\n");
  if (!all) return kNotConverged;
  if (!(worst <= threshold)) {
    std::cerr << "uniqueness: max pairwise distance " << worst << " exceeds " << threshold << '\n';
    return kCheckFailed;
  }
  return kOk;
}

inline int cmd_verify(const RunConfig& c) {
  const auto dir = detail::prepare_output(c);
  VerifyOptions o;
  o.alpha = c.alpha;
  o.beta = c.beta;
  o.seed = c.seed;
  o.only = c.only;
  const auto checks = run_verify(c.grid(), o);
  CsvTable t({"check_name", "measured", "tolerance", "pass"});
  detail::common_meta(t, c, "verify");
  bool all = true;
  for (const auto& k : checks) {
    t.row({k.name, k.measured, k.tolerance, std::string(k.pass ? "true" : "false")});
    if (!k.pass) {
      std::cerr << "verify: " << k.name << " failed (measured " << k.measured << ", "
                << (k.upper ? "limit " : "required at least ") << k.tolerance << ")\n";
      all = false;
    }
  }
  t.save((dir / "verify.csv").string());
  if (c.gnuplot)
    detail::write_text(dir / "verify.gp",
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale y\nset style data histograms\nset style fill solid\n"
                       "set xtics rotate by -45\n"
                       "plot 'verify.csv' using 2:xticlabels(1) title 'measured', '' using 3 "
                       "title 'tolerance'\n");
  return all ? kOk : kCheckFailed;
}

inline int cmd_bl(const RunConfig& c) {
  const double threshold = std::isnan(c.threshold) ? 1e-3 : c.threshold;
  const auto dir = detail::prepare_output(c);
  const auto s = detail::solve_from(c, c.epsilon);
  const auto& p = s.profile;
  const auto spec = c.kernel();
  const auto d = compute_bl_data(p, spec);
  const bool finite = s.status != SolveStatus::not_finite && s.status != SolveStatus::diverged;
  const double r = finite ? bl_residual(p, spec, c.beta) : std::numeric_limits<double>::quiet_NaN();

  CsvTable t({"epsilon", "kappa", "phi_at_xmin", "phi_at_1", "bl_residual", "selfsim_residual"});
  detail::common_meta(t, c, "bl");
  detail::solver_meta(t, c);
  t.meta("status", to_string(s.status)).meta("threshold", threshold);
  t.row({c.epsilon, d.kappa, d.phi[0], d.phi(1.0), r, s.final_residual});
  t.save((dir / "bl.csv").string());
  if (c.gnuplot) {
    // The table has a single row; the profile is the more useful picture.
    CsvTable prof({"x", "pi", "phi"});
    for (std::size_t i = 0; i < p.size(); ++i) prof.row({p.grid()[i], p[i], d.phi[i]});
    prof.save((dir / "bl_profile.csv").string());
    detail::write_text(dir / "bl.gp",
                       "set datafile separator ','\nset key autotitle columnhead\nset logscale x\nset xlabel 'x'\n"
                       "plot 'bl_profile.csv' using 1:2 with lines title 'pi', "
                       "'' using 1:(exp(-$3)) with lines title 'exp(-phi)'\n");
  }
  if (!s.converged) {
    detail::report_failure("bl", s);
    return kNotConverged;
  }
  if (!(r <= threshold)) {
    std::cerr << "bl: residual " << r << " exceeds " << threshold << '\n';
    return kCheckFailed;
  }
  return kOk;
}

}  // namespace selfsim::cli
