#pragma once

// Quadrature on uniformly spaced samples (the log-coordinate grid) and a small
// adaptive Gauss-Kronrod integrator for smooth scalar integrands.
//
// The uniform-sample rules integrate a local quintic interpolant through six
// neighbouring samples (sixth order in the spacing).  Interior intervals use
// the centred stencil (11, -93, 802, 802, -93, 11)/1440; near the ends the
// stencil slides inwards.  Arrays shorter than six samples fall back to the
// interpolant through all of them.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <stdexcept>
#include <vector>

namespace selfsim::quad {

inline constexpr std::size_t kStencil = 6;

using Weights = std::array<double, kStencil>;

/// Lagrange basis through local abscissas 0..width-1, evaluated at t.
inline Weights lagrange_weights(double t, std::size_t width = kStencil) {
  Weights w{};
  for (std::size_t i = 0; i < width; ++i) {
    double v = 1.0;
    for (std::size_t j = 0; j < width; ++j)
      if (j != i) v *= (t - static_cast<double>(j)) / (static_cast<double>(i) - static_cast<double>(j));
    w[i] = v;
  }
  return w;
}

/// Integrals over [a, b] (local units) of the Lagrange basis; three-point
/// Gauss-Legendre is exact up to degree five.
inline Weights integral_weights(double a, double b, std::size_t width = kStencil) {
  static constexpr double node = 0.774596669241483377035853079956;
  static constexpr std::array<double, 3> x = {-node, 0.0, node};
  static constexpr std::array<double, 3> g = {5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  const double c = 0.5 * (a + b);
  const double r = 0.5 * (b - a);
  Weights w{};
  for (std::size_t q = 0; q < 3; ++q) {
    const auto l = lagrange_weights(c + r * x[q], width);
    for (std::size_t i = 0; i < width; ++i) w[i] += r * g[q] * l[i];
  }
  return w;
}

inline std::size_t stencil_width(std::size_t n) { return std::min(n, kStencil); }

/// First sample of the stencil used around interval [m, m+1].
inline std::size_t stencil_start(std::size_t m, std::size_t n) {
  const std::size_t w = stencil_width(n);
  const std::size_t s = m >= 2 ? m - 2 : 0;
  return std::min(s, n - w);
}

inline double dot(const Weights& w, std::span<const double> f, std::size_t s, std::size_t width) {
  double acc = 0.0;
  for (std::size_t l = 0; l < width; ++l) acc += w[l] * f[s + l];
  return acc;
}

/// Integral of the samples' interpolant over [m + a, m + b], 0 <= a <= b <= 1.
inline double sub_interval(std::span<const double> f, double h, std::size_t m, double a, double b) {
  const std::size_t n = f.size();
  const std::size_t width = stencil_width(n);
  const std::size_t s = stencil_start(m, n);
  const double off = static_cast<double>(m - s);
  return h * dot(integral_weights(off + a, off + b, width), f, s, width);
}

inline double interval_integral(std::span<const double> f, double h, std::size_t m) {
  const std::size_t n = f.size();
  if (n >= kStencil && m >= 2 && m + 3 < n)
    return h * (11.0 * (f[m - 2] + f[m + 3]) - 93.0 * (f[m - 1] + f[m + 2]) + 802.0 * (f[m] + f[m + 1])) /
           1440.0;
  return sub_interval(f, h, m, 0.0, 1.0);
}

namespace detail {

/// Collapsed composite weights of the first six samples (mirrored at the right end).
inline const Weights& end_weights() {
  static const Weights w = [] {
    constexpr std::size_t n = 24;
    Weights acc{};
    for (std::size_t m = 0; m + 1 < n; ++m) {
      const std::size_t s = stencil_start(m, n);
      const double off = static_cast<double>(m - s);
      const auto iw = integral_weights(off, off + 1.0);
      for (std::size_t l = 0; l < kStencil; ++l)
        if (s + l < kStencil) acc[s + l] += iw[l];
    }
    return acc;
  }();
  return w;
}

}  // namespace detail

/// Integral over all samples (composite of interval_integral).
inline double integrate_uniform(std::span<const double> f, double h) {
  const std::size_t n = f.size();
  if (n < 2) return 0.0;
  if (n < 2 * kStencil + 2) {
    double s = 0.0;
    for (std::size_t m = 0; m + 1 < n; ++m) s += interval_integral(f, h, m);
    return s;
  }
  const auto& w = detail::end_weights();
  double s = 0.0;
  for (std::size_t j = kStencil; j + kStencil < n; ++j) s += f[j];
  for (std::size_t j = 0; j < kStencil; ++j) s += w[j] * (f[j] + f[n - 1 - j]);
  return h * s;
}

/// c[i] = integral from sample 0 to sample i.
inline std::vector<double> cumulative(std::span<const double> f, double h) {
  std::vector<double> c(f.size(), 0.0);
  for (std::size_t m = 0; m + 1 < f.size(); ++m) c[m + 1] = c[m] + interval_integral(f, h, m);
  return c;
}

/// r[i] = integral from sample i to the last sample, plus `tail` beyond it.
inline std::vector<double> reverse_cumulative(std::span<const double> f, double h, double tail) {
  std::vector<double> r(f.size(), tail);
  for (std::size_t m = f.size() - 1; m-- > 0;) r[m] = r[m + 1] + interval_integral(f, h, m);
  return r;
}

/// Integral of the interpolant from sample m to the fractional position m + theta.
inline double partial_interval(std::span<const double> f, double h, std::size_t m, double theta) {
  return sub_interval(f, h, m, 0.0, theta);
}

/// Globally adaptive 7/15-point Gauss-Kronrod quadrature of a smooth integrand.
class GaussKronrod {
 public:
  struct Result {
    double value;
    double error;
  };

  static Result integrate(const std::function<double(double)>& f, double a, double b,
                          double rel_tol = 1e-13, double abs_tol = 0.0,
                          std::size_t max_panels = 2000) {
    if (a == b) return {0.0, 0.0};
    struct Panel {
      double a, b, value, error;
      bool operator<(const Panel& o) const { return error < o.error; }
    };
    std::priority_queue<Panel> heap;
    auto first = panel(f, a, b);
    heap.push({a, b, first.value, first.error});
    double total = first.value;
    double err = first.error;
    std::size_t panels = 1;
    while (err > std::max(abs_tol, rel_tol * std::abs(total)) && panels < max_panels) {
      const Panel worst = heap.top();
      heap.pop();
      const double mid = 0.5 * (worst.a + worst.b);
      const auto left = panel(f, worst.a, mid);
      const auto right = panel(f, mid, worst.b);
      total += left.value + right.value - worst.value;
      err += left.error + right.error - worst.error;
      heap.push({worst.a, mid, left.value, left.error});
      heap.push({mid, worst.b, right.value, right.error});
      ++panels;
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    err = 0.0;
    while (!heap.empty()) {
      total += heap.top().value;
      err += heap.top().error;
      heap.pop();
    }
    return {total, err};
  }

  /// A single 15-point Kronrod panel with its embedded Gauss error estimate.
  static Result panel(const std::function<double(double)>& f, double a, double b) {
    static constexpr std::array<double, 8> xgk = {
        0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
        0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
        0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
        0.207784955007898467600689403773245, 0.0};
    static constexpr std::array<double, 8> wgk = {
        0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
        0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
        0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
        0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
    static constexpr std::array<double, 4> wg = {
        0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
    const double c = 0.5 * (a + b);
    const double r = 0.5 * (b - a);
    const double fc = f(c);
    double kronrod = wgk[7] * fc;
    double gauss = wg[3] * fc;
    for (std::size_t k = 0; k < 7; ++k) {
      const double s = f(c - r * xgk[k]) + f(c + r * xgk[k]);
      kronrod += wgk[k] * s;
      if (k % 2 == 1) gauss += wg[k / 2] * s;
    }
    return {r * kronrod, std::abs(r * (kronrod - gauss))};
  }
};

}  // namespace selfsim::quad
