#pragma once

// The operator L[h] = h - B2[h, e] - B2[e, h] obtained by linearising the
// constant-kernel profile equation around e(x) = e^{-x}, its explicit inverse
// on zero-mass functions, the desingularised Laplace transform and the
// residual of the second-order ODE satisfied by L-preimages.

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "selfsim/coag_ops.hpp"
#include "selfsim/grid.hpp"
#include "selfsim/quadrature.hpp"
#include "selfsim/special_functions.hpp"

namespace selfsim {

/// Below this x the prefactor (x e^{-x} + e^{-x} - 1)/x^2 is taken from its series.
inline constexpr double kPrefactorSeriesCut = 1e-2;

/// (x e^{-x} + e^{-x} - 1) / x^2.
inline double tail_prefactor(double x) {
  if (x < kPrefactorSeriesCut)
    return -0.5 + x * (1.0 / 3.0 + x * (-1.0 / 8.0 + x * (1.0 / 30.0 + x * (-1.0 / 144.0 + x / 840.0))));
  return (x * std::exp(-x) + std::exp(-x) - 1.0) / (x * x);
}

namespace detail {

/// m1, m2 and E sampled on one grid; shared between calls.
struct SpecialTables {
  std::vector<double> m1, m2, E;
};

inline std::shared_ptr<const SpecialTables> special_tables(const Grid& g) {
  static std::mutex mutex;
  static std::map<std::tuple<double, double, std::size_t>, std::shared_ptr<const SpecialTables>> cache;
  const auto key = std::make_tuple(g.x_min(), g.x_max(), g.size());
  std::lock_guard<std::mutex> lock(mutex);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto t = std::make_shared<SpecialTables>();
  for (double x : g.nodes()) {
    t->m1.push_back(m1(x));
    t->m2.push_back(m2(x));
    t->E.push_back(aux_E(x));
  }
  cache.emplace(key, t);
  return t;
}

/// L[h] below x_min from the continuation of h, in the cancellation-free form,
/// at the LeftTable knots.  Shared by all three evaluations of L as their left
/// tail closure.
inline std::vector<double> linearized_continuation(const GridFunction& h, double upper_min) {
  const double xm = h.grid().x_min();
  const auto f = h.left_knot_values();
  const auto m0 = h.left_moment_profile(0.0);
  const auto m1p = h.left_moment_profile(1.0);
  const auto m2p = h.left_moment_profile(2.0);
  const auto m3p = h.left_moment_profile(3.0);
  std::vector<double> out(f.size());
  for (std::size_t j = 0; j < f.size(); ++j) {
    const double x = LeftTable::knot(xm, j);
    const double inner = -(m1p[j] + m2p[j] / 2.0 + m3p[j] / 6.0);
    const double upper = upper_min + m0[0] - m0[j];
    out[j] = f[j] + 2.0 * (x + 1.0) * std::exp(-x) / (x * x) * inner + 2.0 * tail_prefactor(x) * upper;
  }
  return out;
}

/// Attaches the shared continuation; inputs whose moments below x_min do not
/// exist keep the fitted tails.
inline GridFunction with_linearized_tail(const GridFunction& out, const GridFunction& h, double upper_min) {
  try {
    return out.with_left_table(linearized_continuation(h, upper_min));
  } catch (const std::domain_error&) {
    return out;
  }
}

}  // namespace detail

/// L[h] in the form with the cancellation at zero built in:
///   h + 2(x+1)e^{-x}/x^2 \int_0^x (1-e^z) h + 2 (x e^{-x} + e^{-x} - 1)/x^2 \int_x^\infty h.
inline GridFunction linearized_apply(const GridFunction& h) {
  const Grid& g = h.grid();
  const std::size_t n = g.size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = -std::expm1(g[i]) * h[i] * g[i];
  const auto inner = quad::cumulative(u, g.log_step());
  // 1 - e^z = -z - z^2/2 - z^3/6 below x_min.
  const double left = -(h.left_moment(1.0) + h.left_moment(2.0) / 2.0 + h.left_moment(3.0) / 6.0);
  const CumulativeTable table(h, 0.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g[i];
    out[i] = h[i] + 2.0 * (x + 1.0) * std::exp(-x) / (x * x) * (left + inner[i]) +
             2.0 * tail_prefactor(x) * table.upper(i);
  }
  return detail::with_linearized_tail(GridFunction(h.grid_ptr(), std::move(out)), h, table.upper(0));
}

/// L[h] = h + 2(x+1)e^{-x}/x^2 (\int_0^\infty h - \int_0^x e^z h) - (2/x^2) \int_x^\infty h.
inline GridFunction linearized_apply_expanded(const GridFunction& h) {
  const Grid& g = h.grid();
  const std::size_t n = g.size();
  const CumulativeTable table(h, 0.0);
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = std::exp(g[i]) * h[i] * g[i];
  const auto weighted = quad::cumulative(u, g.log_step());
  const double left = h.left_moment(0.0) + h.left_moment(1.0) + h.left_moment(2.0) / 2.0;
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g[i];
    const double c = 2.0 * (x + 1.0) * std::exp(-x) / (x * x);
    out[i] = h[i] + c * (table.total() - left - weighted[i]) - 2.0 / (x * x) * table.upper(i);
  }
  return detail::with_linearized_tail(GridFunction(h.grid_ptr(), std::move(out)), h, table.upper(0));
}

/// L[h] = h - B2[h, e] - B2[e, h] through the coagulation operator.
inline GridFunction linearized_apply_bilinear(const GridFunction& h) {
  const auto e = GridFunction::sample(h.grid_ptr(), [](double x) { return std::exp(-x); });
  const GridFunction out = h - b2_apply(h, e) - b2_apply(e, h);
  return detail::with_linearized_tail(out, h, CumulativeTable(h, 0.0).upper(0));
}

/// A[g] = g + 2 m1 \int_1^x E g - 2 m2 \int_x^\infty g, the cumulative anchored
/// exactly at x = 1 (which need not be a node).  Below x_min the result carries
/// its closed form in terms of the continuation of g.
inline GridFunction inverse_pre_apply(const GridFunction& gf) {
  const Grid& g = gf.grid();
  const std::size_t n = g.size();
  if (gf[n - 1] != 0.0 && !(gf.right_tail_rate() > 0.0))
    throw std::domain_error("inverse: input must decay at infinity");
  gf.left_moment(1.0);  // throws unless x g(x) is integrable at zero
  const auto tables = detail::special_tables(g);
  const double h = g.log_step();

  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = tables->E[i] * gf[i] * g[i];
  const auto cum = quad::cumulative(u, h);
  const double pos = g.index_of(1.0);
  const auto m = static_cast<std::size_t>(std::floor(pos));
  const double anchor = cum[m] + quad::partial_interval(u, h, m, pos - static_cast<double>(m));

  const CumulativeTable table(gf, 0.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i)
    out[i] = gf[i] + 2.0 * tables->m1[i] * (cum[i] - anchor) - 2.0 * tables->m2[i] * table.upper(i);

  // For x < x_min: \int_1^x E g = J(x_min) - \int_x^{x_min} E g and
  // \int_x^\infty g = T(x_min) + \int_x^{x_min} g, accumulated knot by knot in ln y.
  auto cont = gf.left_continuation();
  const double xm = g.x_min();
  std::vector<double> below(LeftTable::kKnots);
  double je = 0.0, jg = 0.0;
  for (std::size_t j = 0; j < below.size(); ++j) {
    const double x = LeftTable::knot(xm, j);
    if (j > 0) {
      const double lo = std::log(x), hi = std::log(LeftTable::knot(xm, j - 1));
      je += quad::GaussKronrod::panel([&](double l) { const double y = std::exp(l); return aux_E(y) * cont(y) * y; }, lo, hi).value;
      jg += quad::GaussKronrod::panel([&](double l) { const double y = std::exp(l); return cont(y) * y; }, lo, hi).value;
    }
    below[j] = cont(x) + 2.0 * m1(x) * (cum[0] - anchor - je) - 2.0 * m2(x) * (table.upper(0) + jg);
  }
  below[0] = out[0];
  return GridFunction(gf.grid_ptr(), std::move(out)).with_left_table(std::move(below));
}

/// A0[g] = A[g] + (\int y A[g] dy) m1: the preimage under L with zero first moment.
inline GridFunction inverse_apply(const GridFunction& g) {
  return project_zero_moment(inverse_pre_apply(g));
}

/// T[f](q) = \int_0^\infty (1 - e^{-q x}) f(x) dx.
inline double desing_laplace(const GridFunction& f, double q) {
  if (!(q >= 0.0)) throw std::domain_error("desing_laplace: q must be >= 0");
  if (q == 0.0) return 0.0;
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = -std::expm1(-q * g[i]) * f[i] * g[i];
  double total = quad::integrate_uniform(u, g.log_step());
  total += q * f.left_moment(1.0) - q * q / 2.0 * f.left_moment(2.0) + q * q * q / 6.0 * f.left_moment(3.0);
  if (f[n - 1] != 0.0) {
    const double r = f.right_tail_rate();
    if (!(r > 0.0)) throw std::domain_error("desing_laplace: right tail does not decay");
    total += f[n - 1] * (1.0 / r - std::exp(-q * g.x_max()) / (r + q));
  }
  return total;
}

/// dT/dq + (q-1)/(q(q+1)) T at each q, the derivative by centred differences
/// with step 1e-4 q.
inline std::vector<double> laplace_ode_residual(const GridFunction& f, const std::vector<double>& qs) {
  std::vector<double> out;
  out.reserve(qs.size());
  for (double q : qs) {
    if (!(q > 0.0)) throw std::domain_error("laplace_ode_residual: q must be positive");
    const double dq = 1e-4 * q;
    const double d = (desing_laplace(f, q + dq) - desing_laplace(f, q - dq)) / (2.0 * dq);
    out.push_back(d + (q - 1.0) / (q * (q + 1.0)) * desing_laplace(f, q));
  }
  return out;
}

namespace detail {

/// First and second x-derivatives at interior node i from five-point stencils in ln x.
inline std::pair<double, double> log_grid_derivatives(std::span<const double> f, double x, double h,
                                                      std::size_t i) {
  const double fu = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) / (12.0 * h);
  const double fuu =
      (-f[i - 2] + 16.0 * f[i - 1] - 30.0 * f[i] + 16.0 * f[i + 1] - f[i + 2]) / (12.0 * h * h);
  return {fu / x, (fuu - fu) / (x * x)};
}

}  // namespace detail

/// u'' + (1+x)/x u' + 2u/x - (g'' + (3+x)/x g' + 2g/x) on the nodes; the two
/// outermost nodes at each end are set to zero.
inline GridFunction ode_residual(const GridFunction& u, const GridFunction& g) {
  if (!(u.grid() == g.grid())) throw std::invalid_argument("ode_residual: grids differ");
  const Grid& grid = u.grid();
  const std::size_t n = grid.size();
  if (n < 5) throw std::invalid_argument("ode_residual: too few nodes");
  const double h = grid.log_step();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 2; i + 2 < n; ++i) {
    const double x = grid[i];
    const auto [u1, u2] = detail::log_grid_derivatives(u.values(), x, h, i);
    const auto [g1, g2] = detail::log_grid_derivatives(g.values(), x, h, i);
    out[i] = u2 + (1.0 + x) / x * u1 + 2.0 * u[i] / x - (g2 + (3.0 + x) / x * g1 + 2.0 * g[i] / x);
  }
  return GridFunction(u.grid_ptr(), std::move(out), TailModel{0.0, 1.0});
}

}  // namespace selfsim
