#pragma once

// Damped fixed-point iteration for self-similar profiles Pi = B2[Pi,Pi] +
// eps BW[Pi,Pi], and the diagnostics used to compare profiles with e^{-x}.
//
// Solutions come in the family c Pi(c x) (same N0 = \int Pi, mass 1/c), so
// every iterate is dilated to unit mass.  The amplitude is set by the number
// balance (1/2) \int\int K Pi Pi = N0:
//  - picard:          Q = coag_rhs(P) scaled by (N0[P]/N0[Q])^2,
//  - boundary_layer:  Q = bl_map(P / A[P]),  A = number_balance_factor.
// Both images are invariant under P -> s P.

#include <cmath>
#include <cstddef>
#include <iostream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "selfsim/boundary_layer.hpp"
#include "selfsim/coag_ops.hpp"
#include "selfsim/grid.hpp"
#include "selfsim/kernels.hpp"
#include "selfsim/linop.hpp"

namespace selfsim {

enum class SolverScheme { boundary_layer, picard };

inline std::string to_string(SolverScheme s) { return s == SolverScheme::picard ? "picard" : "boundary_layer"; }

inline SolverScheme parse_scheme(const std::string& s) {
  if (s == "picard") return SolverScheme::picard;
  if (s == "boundary_layer" || s == "bl") return SolverScheme::boundary_layer;
  throw std::invalid_argument("unknown solver scheme: " + s);
}

struct SolverOptions {
  SolverScheme scheme = SolverScheme::boundary_layer;
  double damping = 1.0;
  double tol = 1e-10;
  std::size_t max_iter = 500;
  bool renormalize = true;
  /// Exponent of the norm weight at infinity; NaN means (3 + alpha)/2.
  double beta = std::numeric_limits<double>::quiet_NaN();

  void validate() const {
    if (!(damping > 0.0 && damping <= 1.0)) throw std::invalid_argument("solver: damping must lie in (0, 1]");
    if (!(tol > 0.0)) throw std::invalid_argument("solver: tol must be positive");
    if (max_iter == 0) throw std::invalid_argument("solver: max_iter must be positive");
    if (!std::isnan(beta) && !(beta > 1.0)) throw std::invalid_argument("solver: beta must exceed 1");
  }
};

enum class SolveStatus { converged, max_iter, diverged, not_finite };

inline std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::converged: return "converged";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::diverged: return "diverged";
    case SolveStatus::not_finite: return "not_finite";
  }
  return "unknown";
}

struct ProfileSolution {
  GridFunction profile;
  KernelSpec spec;
  std::size_t iterations = 0;
  double final_residual = 0.0;
  double mass = 0.0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iter;
  /// Relative change of the last step.
  double last_change = 0.0;
  double damping = 1.0;
};

/// ||p - coag_rhs(p)|| / ||p|| in X_{-alpha, beta}.  The zero function gives 0
/// with a warning on stderr.
inline double selfsim_residual(const GridFunction& p, const KernelSpec& spec,
                               double beta = std::numeric_limits<double>::quiet_NaN()) {
  const WeightParams w = profile_weight(spec, beta);
  const double norm = weighted_norm(p, w);
  if (norm == 0.0) {
    std::cerr << "warning: selfsim_residual of the zero function\n";
    return 0.0;
  }
  return weighted_distance(p, coag_rhs(p, spec), w) / norm;
}

/// c p(c x) with c = first moment, then divided by its first moment.
inline GridFunction dilate_to_unit_mass(const GridFunction& p) {
  const double c = first_moment(p);
  if (!(c > 0.0) || !std::isfinite(c)) throw std::domain_error("dilate: mass must be positive");
  GridFunction out = GridFunction::sample(p.grid_ptr(), [&](double x) { return std::max(0.0, c * p(c * x)); });
  return (1.0 / first_moment(out)) * out;
}

namespace detail {

inline GridFunction clip_nonnegative(const GridFunction& f) {
  return f.map([](double, double v) { return v > 0.0 ? v : 0.0; });
}

/// One undamped step: the scheme's image, clipped at zero, at unit mass.
inline GridFunction solver_image(const GridFunction& p, const KernelSpec& spec, const SolverOptions& opts) {
  GridFunction q = p;
  if (opts.scheme == SolverScheme::picard) {
    q = coag_rhs(p, spec);
    if (opts.renormalize) {
      const double a = integrate(p) / integrate(q);
      if (!std::isfinite(a)) throw std::domain_error("solver: number integral vanished");
      q *= a * a;
    }
  } else {
    const double a = number_balance_factor(p, spec);
    if (!(a > 0.0) || !std::isfinite(a)) throw std::domain_error("solver: number balance failed");
    q = bl_map((1.0 / a) * p, spec);
  }
  q = clip_nonnegative(q);
  return opts.renormalize ? dilate_to_unit_mass(q) : q;
}

}  // namespace detail

inline ProfileSolution solve_profile(const KernelSpec& spec, const SolverOptions& opts, const GridFunction& init) {
  validate_spec(spec);
  opts.validate();
  if (!init.all_nonnegative()) throw std::invalid_argument("solve_profile: initial profile must be non-negative");
  const double init_mass = first_moment(init);
  if (!(init_mass > 0.0) || !std::isfinite(init_mass))
    throw std::invalid_argument("solve_profile: initial profile must have finite positive mass");

  const WeightParams w = profile_weight(spec, opts.beta);
  ProfileSolution sol;
  sol.spec = spec;
  sol.damping = opts.damping;

  GridFunction p = init;
  double theta = opts.damping;
  double previous_change = std::numeric_limits<double>::infinity();
  int increases = 0;
  for (std::size_t k = 1; k <= opts.max_iter; ++k) {
    sol.iterations = k;
    GridFunction q = p;
    try {
      q = detail::solver_image(p, spec, opts);
    } catch (const std::domain_error&) {
      sol.status = SolveStatus::not_finite;
      break;
    } catch (const std::invalid_argument&) {
      sol.status = SolveStatus::not_finite;
      break;
    }
    GridFunction next = theta == 1.0 ? q : (1.0 - theta) * p + theta * q;
    const double norm = weighted_norm(next, w);
    if (!std::isfinite(norm)) {
      sol.status = SolveStatus::not_finite;
      break;
    }
    if (norm > 1e6) {
      sol.status = SolveStatus::diverged;
      p = next;
      break;
    }
    // Fixed-point defect of the undamped map, so damping cannot fake convergence.
    const double change = weighted_distance(q, p, w) / weighted_norm(q, w);
    sol.last_change = change;
    p = std::move(next);
    if (change < opts.tol) {
      sol.status = SolveStatus::converged;
      sol.converged = true;
      break;
    }
    increases = change > previous_change ? increases + 1 : 0;
    if (increases >= 2) {
      theta *= 0.5;
      increases = 0;
    }
    previous_change = change;
  }
  sol.damping = theta;
  sol.profile = p;
  sol.mass = first_moment(p);
  sol.final_residual = sol.status == SolveStatus::not_finite || sol.status == SolveStatus::diverged
                           ? std::numeric_limits<double>::infinity()
                           : selfsim_residual(p, spec, opts.beta);
  return sol;
}

/// e^{-x} on a grid, the default initial profile.
inline GridFunction exponential_profile(const GridPtr& grid, double rate = 1.0, double amplitude = 1.0) {
  return GridFunction::sample(grid, [=](double x) { return amplitude * std::exp(-rate * x); });
}

/// \int x^s p dx for each exponent.
inline std::vector<double> moment_table(const GridFunction& p, const std::vector<double>& exponents) {
  std::vector<double> out;
  out.reserve(exponents.size());
  for (double s : exponents) out.push_back(moment(p, s));
  return out;
}

/// Least-squares slope of -ln p against x over the last quarter of the nodes.
inline double tail_decay_rate(const GridFunction& p) {
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  const std::size_t first = n - n / 4;
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = first; i < n; ++i) {
    if (!(p[i] > 0.0)) throw std::domain_error("tail_decay_rate: non-positive value in the fitting window");
    const double x = g[i];
    const double y = -std::log(p[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(n - first);
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

/// 0 and 60 log-spaced points in [1e-3, 1e3].
inline std::vector<double> default_laplace_samples() {
  std::vector<double> q{0.0};
  for (int k = 0; k < 60; ++k) q.push_back(std::pow(10.0, -3.0 + 6.0 * k / 59.0));
  return q;
}

/// max_q |T[p - e^{-x}](q)|, using T[e^{-x}](q) = q/(1+q).
inline double laplace_gap(const GridFunction& p, const std::vector<double>& samples) {
  double gap = 0.0;
  for (double q : samples) {
    if (!(q >= 0.0)) throw std::domain_error("laplace_gap: samples must be non-negative");
    gap = std::max(gap, std::abs(desing_laplace(p, q) - q / (1.0 + q)));
  }
  return gap;
}

inline double laplace_gap(const GridFunction& p) { return laplace_gap(p, default_laplace_samples()); }

}  // namespace selfsim
