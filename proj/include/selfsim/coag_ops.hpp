#pragma once

// Bilinear coagulation operators
//   B2[g,h](x) = (2/x^2) \int_0^x y g(y) \int_{x-y}^\infty h(z) dz dy
//   BW[g,h](x) = (1/x^2) \int_0^x \int_{x-y}^\infty y W(y,z) g(y) h(z) dz dy
// and the right-hand side of the profile equation, Pi = B2[Pi,Pi] + eps BW[Pi,Pi].
//
// For the power perturbation both reduce to the sweep
//   S(x) = (1/x^2) \int_0^x phi(y) R(x-y) dy,   phi(y) = y^{1+e} g(y),
//   R(t) = \int_t^\infty z^s h(z) dz.
// R(t) is not smooth at t -> 0 when h is rough near the origin, so the outer
// integral is split at x/2 and the upper half is rewritten with the order of
// integration swapped:
//   x^2 S = \int_0^{x/2} phi(y) R(x-y) dy + [G(x) - G(x/2)] R(x/2)
//         + \int_0^{x/2} psi(z) [G(x) - G(x-z)] dz,
// where G is the cumulative of phi and psi(z) = z^s h(z).  Every table lookup
// then happens at arguments in [x/2, x].

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "selfsim/grid.hpp"
#include "selfsim/kernels.hpp"
#include "selfsim/quadrature.hpp"

namespace selfsim {

/// Integrals of w(z) = z^e f(z): H[i] = \int_0^{x_i} w and R[i] = \int_{x_i}^\infty w,
/// with closed-form tail pieces, and lookups at fractional node positions.
class CumulativeTable {
 public:
  CumulativeTable(const GridFunction& f, double exponent)
      : grid_(f.grid_ptr()), source_(f), exponent_(exponent) {
    const Grid& g = *grid_;
    const std::size_t n = g.size();
    h_ = g.log_step();
    w_.resize(n);
    u_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      w_[i] = (exponent == 0.0 ? 1.0 : std::pow(g[i], exponent)) * f[i];
      u_[i] = w_[i] * g[i];
    }
    left_power_ = f.tails().left_logarithmic ? exponent : f.left_tail_exponent() + exponent;
    double right = 0.0;
    if (f[n - 1] != 0.0) right = f[n - 1] * exp_tail_moment(exponent, g.x_max(), f.right_tail_rate());
    forward_ = quad::cumulative(u_, h_);
    reverse_ = quad::reverse_cumulative(u_, h_, right);
    left_total_ = below(g.x_min());
    total_ = left_total_ + reverse_[0];
  }

  const Grid& grid() const { return *grid_; }
  double exponent() const { return exponent_; }
  /// Integrand z^e f(z) at node i.
  double integrand(std::size_t i) const { return w_[i]; }
  /// Integrand in ln z, i.e. z^{e+1} f(z), at node i.
  double log_integrand(std::size_t i) const { return u_[i]; }
  /// z^{e+1} f(z) between nodes.
  double log_integrand_at(double z) const { return (exponent_ == 0.0 ? 1.0 : std::pow(z, exponent_)) * source_(z) * z; }
  double total() const { return total_; }
  /// \int_0^{x_i} z^e f.
  double lower(std::size_t i) const { return left_total_ + forward_[i]; }
  /// \int_{x_i}^\infty z^e f.
  double upper(std::size_t i) const { return reverse_[i]; }

  /// \int_0^t z^e f for t <= x_min (tail model).
  double below(double t) const { return source_.left_moment(exponent_, t); }

  /// \int_0^t z^{e+1} f for t <= x_min.
  double below_first_moment(double t) const { return source_.left_moment(exponent_ + 1.0, t); }

  /// Power q with z^e f(z) ~ z^q below x_min (e itself for a logarithmic tail).
  double left_power() const { return left_power_; }

  /// Local weights of \int_{m+theta}^{m+1} over the stencil around interval m,
  /// which starts a samples before m.
  static quad::Weights tail_weights(std::size_t a, double theta) {
    return quad::integral_weights(static_cast<double>(a) + theta, static_cast<double>(a) + 1.0);
  }

  /// Offset of interval m within its stencil away from the ends.
  static constexpr std::size_t kInterior = 2;

  /// \int_{pos}^{m+1} of the log-integrand, pos = m + theta, 0 <= theta < 1.
  double head(std::size_t m, double theta, const quad::Weights* interior) const {
    const std::size_t n = u_.size();
    if (theta == 0.0) return quad::interval_integral(u_, h_, m);
    const std::size_t s = quad::stencil_start(m, n);
    const std::size_t a = m - s;
    const quad::Weights w = (a == kInterior && interior) ? *interior : tail_weights(a, theta);
    return h_ * quad::dot(w, u_, s, quad::kStencil);
  }

  /// \int_t^\infty z^e f where t sits at fractional position m + theta (m may be < 0).
  double upper_at(long m, double theta, double t, const quad::Weights* interior = nullptr) const {
    if (m < 0) return reverse_[0] + left_total_ - below(t);
    const auto mm = static_cast<std::size_t>(m);
    if (mm + 1 >= u_.size()) return reverse_.back();
    return reverse_[mm + 1] + head(mm, theta, interior);
  }

  double upper_at(double t) const {
    const auto [m, theta] = locate(t);
    return upper_at(m, theta, t);
  }

  /// \int_t^{x_i} z^e f for t at fractional position m + theta <= i.
  double span_to(std::size_t i, long m, double theta, double t,
                 const quad::Weights* interior = nullptr) const {
    if (m < 0) return left_total_ - below(t) + forward_[i];
    const auto mm = static_cast<std::size_t>(m);
    if (mm >= i) return 0.0;
    return head(mm, theta, interior) + between(mm + 1, i);
  }

  double span_to(std::size_t i, double t) const {
    const auto [m, theta] = locate(t);
    return span_to(i, m, theta, t);
  }

  /// \int_{x_a}^{x_b} z^e f, from whichever cumulative is smaller (less cancellation).
  double between(std::size_t a, std::size_t b) const {
    if (a >= b) return 0.0;
    if (std::abs(forward_[b]) <= std::abs(reverse_[a])) return forward_[b] - forward_[a];
    return reverse_[a] - reverse_[b];
  }

  std::pair<long, double> locate(double t) const {
    const double pos = grid_->index_of(t);
    const double fl = std::floor(pos);
    return {static_cast<long>(fl), pos - fl};
  }

 private:
  GridPtr grid_;
  GridFunction source_;
  double exponent_;
  double h_ = 0.0;
  std::vector<double> w_;
  std::vector<double> u_;
  std::vector<double> forward_;
  std::vector<double> reverse_;
  double left_power_ = 0.0;
  double left_total_ = 0.0;
  double total_ = 0.0;
};

namespace detail {

/// Fractional index offset of x_i (1 - e^{-kh}) relative to i, for all k.
struct ShiftTable {
  std::vector<long> floor;
  std::vector<double> theta;
  std::vector<quad::Weights> weights;
  std::vector<double> ratio;

  explicit ShiftTable(const Grid& g) {
    const std::size_t n = g.size();
    const double h = g.log_step();
    floor.resize(n);
    theta.resize(n);
    weights.resize(n);
    ratio.resize(n);
    for (std::size_t k = 1; k < n; ++k) {
      ratio[k] = -std::expm1(-h * static_cast<double>(k));
      const double c = std::log(ratio[k]) / h;
      const double fl = std::floor(c);
      floor[k] = static_cast<long>(fl);
      theta[k] = c - fl;
      weights[k] = CumulativeTable::tail_weights(CumulativeTable::kInterior, theta[k]);
    }
  }
};

/// S(x_i) = x_i^{-2} \int_0^{x_i} y^{1+e} g(y) R(x_i - y) dy for all nodes, with
/// phi the cumulative table of g at exponent 1+e and psi that of h at exponent s.
inline std::vector<double> sweep(const CumulativeTable& phi, const CumulativeTable& psi) {
  const Grid& g = phi.grid();
  const std::size_t n = g.size();
  const double h = g.log_step();
  const double xm = g.x_min();
  const ShiftTable shifts(g);

  // Split point x/2 sits at fractional index i - ln2/h.
  const double split = -std::log(2.0) / h;
  const long split_floor = static_cast<long>(std::floor(split));
  const double split_theta = split - std::floor(split);
  const auto split_w = CumulativeTable::tail_weights(CumulativeTable::kInterior, split_theta);

  std::vector<double> out(n, 0.0);
  std::vector<double> samples_a(n), samples_b(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = g[i];
    const double half = 0.5 * x;
    const long m_split = static_cast<long>(i) + split_floor;

    // Below min(x_min, x/2): both power-law tails, the other factor smooth.
    const double b = std::min(xm, half);
    double acc = 0.0;
    {
      // The smooth factor is taken at the mean of the power-law density.
      const double mass = phi.below(b);
      if (mass != 0.0) {
        const double q = phi.left_power();
        acc += mass * psi.upper_at(x - b * (q + 1.0) / (q + 2.0));
      }
      const double zmass = psi.below_first_moment(b);
      if (zmass != 0.0) {
        const double q = psi.left_power();
        const double z = b * (q + 2.0) / (q + 3.0);
        acc += zmass * phi.span_to(i, x - z) / z;
      }
    }

    // Middle term [G(x) - G(x/2)] R(x/2).
    acc += phi.span_to(i, m_split, split_theta, half, &split_w) *
           psi.upper_at(m_split, split_theta, half, &split_w);

    // Grid parts on [x_min, x/2].  When x/2 is within four nodes of x_min the
    // stencils would reach past the left end; a single Kronrod panel in ln y
    // on the interpolants replaces them.
    if (m_split >= 0 && m_split < 4) {
      const auto f = [&](double u) {
        const double y = std::exp(u);
        return phi.log_integrand_at(y) * psi.upper_at(x - y) + psi.log_integrand_at(y) * phi.span_to(i, x - y);
      };
      acc += quad::GaussKronrod::panel(f, std::log(xm), std::log(half)).value;
    } else if (m_split >= 4) {
      const auto ms = static_cast<std::size_t>(m_split);
      std::size_t last = std::min(std::max<std::size_t>(ms + 3, quad::kStencil - 1), i);
      // Samples past x/2 whose partner x - y drops below x_min would straddle the
      // switch from grid to tail model; the partial interval does without them.
      while (last > ms + 2 && static_cast<long>(i) + shifts.floor[i - last] < 0) --last;
      for (std::size_t j = 0; j <= last; ++j) {
        const std::size_t k = i - j;
        const long m = static_cast<long>(i) + shifts.floor[k];
        const double t = x * shifts.ratio[k];
        samples_a[j] = phi.log_integrand(j) * psi.upper_at(m, shifts.theta[k], t, &shifts.weights[k]);
        samples_b[j] = psi.log_integrand(j) * phi.span_to(i, m, shifts.theta[k], t, &shifts.weights[k]);
      }
      const std::span<const double> a(samples_a.data(), last + 1);
      const std::span<const double> bb(samples_b.data(), last + 1);
      acc += quad::integrate_uniform(a.first(ms + 1), h) + quad::partial_interval(a, h, ms, split_theta);
      acc += quad::integrate_uniform(bb.first(ms + 1), h) + quad::partial_interval(bb, h, ms, split_theta);
    }
    out[i] = acc / (x * x);
  }
  return out;
}

/// Direct quadrature for a general W: for each y_j the inner tail integral
/// \int_t^\infty W(y_j, z) h(z) dz gets its own cumulative table.  O(N^2) work
/// and memory; only the plain (unsplit) outer integral is used.
inline std::vector<double> custom_sweep(const GridFunction& g, const GridFunction& h,
                                        const KernelSpec& spec) {
  const Grid& grid = g.grid();
  const std::size_t n = grid.size();
  const double dh = grid.log_step();
  const double xm = grid.x_min();
  const ShiftTable shifts(grid);
  const CumulativeTable phi(g, 1.0);

  std::vector<double> rows(n * n, 0.0);
  std::vector<double> wz(n);
  CumulativeTable first_column(h, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < n; ++k) wz[k] = perturbation_eval(spec, grid[j], grid[k]) * h[k];
    const CumulativeTable inner(GridFunction(g.grid_ptr(), wz), 0.0);
    if (j == 0) first_column = inner;
    rows[j * n + j] = phi.log_integrand(j) * inner.total();
    for (std::size_t i = j + 1; i < n; ++i) {
      const std::size_t k = i - j;
      const long m = static_cast<long>(i) + shifts.floor[k];
      rows[i * n + j] = phi.log_integrand(j) *
                        inner.upper_at(m, shifts.theta[k], grid[i] * shifts.ratio[k], &shifts.weights[k]);
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = grid[i];
    const double q = phi.left_power();
    double acc = phi.below(xm) * first_column.upper_at(x - xm * (q + 1.0) / (q + 2.0));
    acc += quad::integrate_uniform(std::span<const double>(rows.data() + i * n, i + 1), dh);
    out[i] = acc / (x * x);
  }
  return out;
}

}  // namespace detail

/// B2[g, h] on every node; output tails refitted.
inline GridFunction b2_apply(const GridFunction& g, const GridFunction& h) {
  if (!(g.grid() == h.grid())) throw std::invalid_argument("b2_apply: grids differ");
  auto s = detail::sweep(CumulativeTable(g, 1.0), CumulativeTable(h, 0.0));
  for (double& v : s) v *= 2.0;
  return GridFunction(g.grid_ptr(), std::move(s));
}

/// BW[g, h] on every node.  The power form separates into two sweeps with the
/// moment exponents +alpha / -alpha; other perturbations use direct quadrature.
inline GridFunction bw_apply(const GridFunction& g, const GridFunction& h, const KernelSpec& spec) {
  if (!(g.grid() == h.grid())) throw std::invalid_argument("bw_apply: grids differ");
  validate_spec(spec);
  if (!spec.is_power()) return GridFunction(g.grid_ptr(), detail::custom_sweep(g, h, spec));
  const double a = spec.alpha;
  auto s1 = detail::sweep(CumulativeTable(g, 1.0 + a), CumulativeTable(h, -a));
  const auto s2 = detail::sweep(CumulativeTable(g, 1.0 - a), CumulativeTable(h, a));
  for (std::size_t i = 0; i < s1.size(); ++i) s1[i] = spec.c_star * (s1[i] + s2[i]);
  return GridFunction(g.grid_ptr(), std::move(s1));
}

/// B2[p, p] + eps BW[p, p].
inline GridFunction coag_rhs(const GridFunction& p, const KernelSpec& spec) {
  validate_spec(spec);
  GridFunction out = b2_apply(p, p);
  if (spec.epsilon != 0.0) out += spec.epsilon * bw_apply(p, p, spec);
  return out;
}

}  // namespace selfsim
