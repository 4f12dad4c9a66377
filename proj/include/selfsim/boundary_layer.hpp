#pragma once

// The functionals beta_2, beta_W, Phi and kappa of a profile and the
// boundary-layer form of the profile equation,
//   Pi(x) = \int_x^\infty (x/z)^kappa e^{Phi(z) - Phi(x)}
//           [ J(z)/z^2 - eps beta_W(z) (1 - e^{-z}) Pi(z) / z ] dz,
//   J(z)  = \int_0^z K(y, z-y) y Pi(y) Pi(z-y) dy = z \int_0^{z/2} K(y, z-y) Pi(y) Pi(z-y) dy,
// with Phi(x) = eps \int_x^\infty beta_W(y) e^{-y}/y dy and kappa = beta_2 - 2.

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

#include "selfsim/grid.hpp"
#include "selfsim/kernels.hpp"
#include "selfsim/quadrature.hpp"

namespace selfsim {

struct BoundaryLayerData {
  double beta2 = 0.0;
  double kappa = 0.0;
  GridFunction beta_w;
  GridFunction phi;
};

/// beta = (3 + alpha)/2, the default exponent of the weight at infinity.
inline double default_beta(double alpha) { return 0.5 * (3.0 + alpha); }

/// The weight of X_{-alpha, beta}; a NaN beta selects the default.
inline WeightParams profile_weight(const KernelSpec& spec, double beta = std::numeric_limits<double>::quiet_NaN()) {
  return {-spec.alpha, std::isnan(beta) ? default_beta(spec.alpha) : beta};
}

/// kappa[p] = 2 \int p - 2.
inline double kappa_of(const GridFunction& p) { return 2.0 * integrate(p) - 2.0; }

namespace detail {

/// beta_W(x_i) = \int W(x_i, z) p(z) dz on every node.
inline std::vector<double> beta_w_values(const GridFunction& p, const KernelSpec& spec) {
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  std::vector<double> out(n);
  if (spec.is_power()) {
    const double a = spec.alpha;
    const double mm = moment(p, -a);
    const double mp = moment(p, a);
    for (std::size_t i = 0; i < n; ++i) out[i] = spec.c_star * (std::pow(g[i], a) * mm + std::pow(g[i], -a) * mp);
    return out;
  }
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) row[j] = perturbation_eval(spec, g[i], g[j]) * p[j];
    out[i] = integrate(GridFunction(p.grid_ptr(), row));
  }
  return out;
}

/// Log-measure samples of eps beta_W(y) e^{-y} / y and their cumulative integrals.
struct PhiTable {
  std::vector<double> forward, reverse;

  /// \int_{x_a}^{x_b} of the integrand, from whichever table cancels less.
  double between(std::size_t a, std::size_t b) const {
    if (a == b) return 0.0;
    if (a > b) return -between(b, a);
    if (std::abs(forward[b]) <= std::abs(reverse[a])) return forward[b] - forward[a];
    return reverse[a] - reverse[b];
  }
};

inline PhiTable phi_table(const Grid& g, const std::vector<double>& beta_w, const KernelSpec& spec) {
  const std::size_t n = g.size();
  const double eps = spec.epsilon;
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = eps * beta_w[i] * std::exp(-g[i]);
  // Beyond x_max: beta_W is dominated by c* M_{-a} y^a (or is taken constant).
  double tail = 0.0;
  if (eps != 0.0) {
    const double X = g.x_max();
    const double a = spec.is_power() ? spec.alpha : 0.0;
    tail = eps * beta_w[n - 1] * std::exp(-X) * std::pow(X, -a) * exp_tail_moment(a - 1.0, X, 1.0);
  }
  PhiTable t;
  t.forward = quad::cumulative(u, g.log_step());
  t.reverse = quad::reverse_cumulative(u, g.log_step(), tail);
  return t;
}

/// J(z_i) = z_i \int_0^{z_i/2} K(y, z_i - y) p(y) p(z_i - y) dy on every node.
inline std::vector<double> bl_convolution(const GridFunction& p, const KernelSpec& spec) {
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  const double h = g.log_step();
  const double xm = g.x_min();

  // z - y_j = z_i (1 - e^{-kh}) sits at fractional index i + c_k, k = i - j.
  std::vector<long> floor_k(n);
  std::vector<double> theta_k(n), kernel_k(n);
  for (std::size_t k = 1; k < n; ++k) {
    const double r = -std::expm1(-h * static_cast<double>(k));
    const double c = std::log(r) / h;
    floor_k[k] = static_cast<long>(std::floor(c));
    theta_k[k] = c - std::floor(c);
    kernel_k[k] = kernel_eval(spec, std::exp(-h * static_cast<double>(k)), r);
  }
  std::vector<double> logp(n);
  std::vector<char> pos(n);
  for (std::size_t i = 0; i < n; ++i) {
    pos[i] = p[i] > 0.0;
    logp[i] = pos[i] ? std::log(p[i]) : 0.0;
  }
  // Value of p at fractional position m + theta (m interior-or-clamped).
  auto value_at = [&](long m, double theta) {
    const auto mm = static_cast<std::size_t>(m);
    const std::size_t s = quad::stencil_start(mm, n);
    const auto w = quad::lagrange_weights(static_cast<double>(mm - s) + theta);
    bool positive = true;
    for (std::size_t l = 0; l < quad::kStencil; ++l) positive = positive && pos[s + l];
    if (positive) return std::exp(quad::dot(w, logp, s, quad::kStencil));
    return quad::dot(w, p.values(), s, quad::kStencil);
  };

  const double split = -std::log(2.0) / h;
  const long split_floor = static_cast<long>(std::floor(split));
  const double split_theta = split - std::floor(split);
  const double q = p.tails().left_logarithmic ? 0.0 : p.left_tail_exponent();

  std::vector<double> out(n, 0.0), samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = g[i];
    double acc = 0.0;

    // y below min(x_min, z/2): p(z - y) and W taken at the mean of the left tail.
    const double b = std::min(xm, 0.5 * z);
    const double mass = p.left_moment(0.0, b);
    if (mass != 0.0) {
      const double ybar = q > -1.0 ? b * (q + 1.0) / (q + 2.0) : 0.5 * b;
      acc += kernel_eval(spec, ybar, z - ybar) * p(z - ybar) * mass;
    }

    const long m_split = static_cast<long>(i) + split_floor;
    if (m_split >= 0 && m_split < 4) {
      const auto f = [&](double u) {
        const double y = std::exp(u);
        return kernel_eval(spec, y, z - y) * p(y) * p(z - y) * y;
      };
      acc += quad::GaussKronrod::panel(f, std::log(xm), std::log(0.5 * z)).value;
    } else if (m_split >= 4) {
      const auto ms = static_cast<std::size_t>(m_split);
      std::size_t last = std::min(std::max<std::size_t>(ms + 3, quad::kStencil - 1), i);
      while (last > ms + 2 && static_cast<long>(i) + floor_k[i - last] < 0) --last;
      for (std::size_t j = 0; j <= last; ++j) {
        const std::size_t k = i - j;
        double other, kernel;
        if (k == 0) {
          other = p[i];
          kernel = kernel_eval(spec, 1.0, 1.0);
        } else if (static_cast<long>(i) + floor_k[k] < 0) {
          other = p(z * -std::expm1(-h * static_cast<double>(k)));
          kernel = kernel_k[k];
        } else {
          other = value_at(static_cast<long>(i) + floor_k[k], theta_k[k]);
          kernel = kernel_k[k];
        }
        samples[j] = kernel * p[j] * other * g[j];
      }
      const std::span<const double> s(samples.data(), last + 1);
      acc += quad::integrate_uniform(s.first(ms + 1), h) + quad::partial_interval(s, h, ms, split_theta);
    }
    out[i] = z * acc;
  }
  return out;
}

}  // namespace detail

inline BoundaryLayerData compute_bl_data(const GridFunction& p, const KernelSpec& spec) {
  validate_spec(spec);
  const Grid& g = p.grid();
  BoundaryLayerData d;
  d.beta2 = 2.0 * integrate(p);
  d.kappa = d.beta2 - 2.0;
  const auto bw = detail::beta_w_values(p, spec);
  d.beta_w = GridFunction(p.grid_ptr(), bw);
  const auto t = detail::phi_table(g, bw, spec);
  d.phi = GridFunction(p.grid_ptr(), t.reverse);
  return d;
}

/// The right-hand side of the boundary-layer form evaluated at p.
inline GridFunction bl_map(const GridFunction& p, const KernelSpec& spec) {
  validate_spec(spec);
  const Grid& g = p.grid();
  const std::size_t n = g.size();
  const double h = g.log_step();
  const double eps = spec.epsilon;
  const double kappa = kappa_of(p);
  const auto bw = detail::beta_w_values(p, spec);
  const auto phi = detail::phi_table(g, bw, spec);
  const auto J = detail::bl_convolution(p, spec);

  std::vector<double> G(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = g[i];
    G[i] = J[i] / (z * z) + (eps == 0.0 ? 0.0 : eps * bw[i] * std::expm1(-z) * p[i] / z);
  }

  // R_i = \int_{x_i}^\infty (x_i/z)^kappa e^{Phi(z) - Phi(x_i)} G(z) dz, backwards.
  std::vector<double> R(n);
  {
    const double X = g.x_max();
    const double r = p.right_tail_rate() > 0.0 ? p.right_tail_rate() : 1.0;
    R[n - 1] = G[n - 1] * std::pow(X, kappa) * exp_tail_moment(-kappa, X, r);
  }
  for (std::size_t i = n - 1; i-- > 0;) {
    const std::size_t s = quad::stencil_start(i, n);
    const double off = static_cast<double>(i - s);
    const auto w = quad::integral_weights(off, off + 1.0);
    double piece = 0.0;
    for (std::size_t l = 0; l < quad::kStencil; ++l) {
      const std::size_t idx = s + l;
      const double du = h * (static_cast<double>(idx) - static_cast<double>(i));
      // (x_i/z)^kappa e^{Phi(z) - Phi(x_i)} = exp(-kappa du - \int_{x_i}^{z} phi-integrand)
      const double factor = std::exp(-kappa * du - phi.between(i, idx));
      piece += w[l] * factor * G[idx] * g[idx];
    }
    R[i] = std::exp(-kappa * h - phi.between(i, i + 1)) * R[i + 1] + h * piece;
  }
  return GridFunction(p.grid_ptr(), std::move(R));
}

/// ||p - bl_map(p)|| / ||p|| in X_{-alpha, beta}.
inline double bl_residual(const GridFunction& p, const KernelSpec& spec,
                          double beta = std::numeric_limits<double>::quiet_NaN()) {
  const WeightParams w = profile_weight(spec, beta);
  const double norm = weighted_norm(p, w);
  if (norm == 0.0) return 0.0;
  return weighted_distance(p, bl_map(p, spec), w) / norm;
}

/// (1/2) \int\int K p p / \int p: equal to one at every solution of the profile
/// equation (the number balance), and of degree one in p.
inline double number_balance_factor(const GridFunction& p, const KernelSpec& spec) {
  const double n0 = integrate(p);
  double pair = n0 * n0;
  if (spec.epsilon != 0.0) {
    const auto bw = detail::beta_w_values(p, spec);
    std::vector<double> v(p.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = bw[i] * p[i];
    pair += 0.5 * spec.epsilon * integrate(GridFunction(p.grid_ptr(), std::move(v)));
  }
  return pair / n0;
}

}  // namespace selfsim
