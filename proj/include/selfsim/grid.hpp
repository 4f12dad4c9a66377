#pragma once

// Log-uniform discretisation of (0, inf), grid functions with power-law /
// exponential tail closures, the weights x^a (x <= 1) / x^b (x >= 1), weighted
// L1 norms and the projection onto zero first moment.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "selfsim/quadrature.hpp"
#include "selfsim/special_functions.hpp"

namespace selfsim {

inline constexpr std::size_t kMinGridSize = 16;

class Grid {
 public:
  Grid(double x_min, double x_max, std::size_t n) : x_min_(x_min), x_max_(x_max) {
    if (!(x_min > 0.0)) throw std::invalid_argument("grid: x_min must be positive");
    if (!(x_max > x_min)) throw std::invalid_argument("grid: x_max must exceed x_min");
    if (!(x_min < 1.0 && x_max > 1.0))
      throw std::invalid_argument("grid: the interval must contain x = 1 in its interior");
    if (n < kMinGridSize) throw std::invalid_argument("grid: at least 16 nodes required");
    log_min_ = std::log(x_min);
    step_ = (std::log(x_max) - log_min_) / static_cast<double>(n - 1);
    nodes_.resize(n);
    const double ratio = x_max / x_min;
    for (std::size_t k = 0; k < n; ++k)
      nodes_[k] = x_min * std::pow(ratio, static_cast<double>(k) / static_cast<double>(n - 1));
    nodes_.front() = x_min;
    nodes_.back() = x_max;
  }

  double x_min() const { return x_min_; }
  double x_max() const { return x_max_; }
  std::size_t size() const { return nodes_.size(); }
  std::span<const double> nodes() const { return nodes_; }
  double operator[](std::size_t i) const { return nodes_[i]; }
  /// Constant spacing in ln x.
  double log_step() const { return step_; }
  double log_node(std::size_t i) const { return log_min_ + step_ * static_cast<double>(i); }
  /// Fractional node index of x (may fall outside [0, n-1]).
  double index_of(double x) const { return (std::log(x) - log_min_) / step_; }

  bool operator==(const Grid& o) const {
    return x_min_ == o.x_min_ && x_max_ == o.x_max_ && size() == o.size();
  }

 private:
  double x_min_;
  double x_max_;
  double log_min_ = 0.0;
  double step_ = 0.0;
  std::vector<double> nodes_;
};

using GridPtr = std::shared_ptr<const Grid>;

inline GridPtr make_grid(double x_min, double x_max, std::size_t n) {
  return std::make_shared<const Grid>(x_min, x_max, n);
}

inline GridPtr default_grid() { return make_grid(1e-5, 40.0, 1024); }

/// A function on (0, x_min] tabulated at x_j = x_min e^{-j dv}, j = 0..J, with
/// quintic interpolation in v = ln(x_min/x) and linear extrapolation in v
/// beyond the last knot.
class LeftTable {
 public:
  static constexpr double kStep = 1.0 / 32.0;
  static constexpr std::size_t kKnots = 1281;  // v up to 40

  LeftTable(double x_min, std::vector<double> values) : xm_(x_min), f_(std::move(values)) {
    if (f_.size() != kKnots) throw std::invalid_argument("left table: wrong knot count");
    for (double v : f_)
      if (!std::isfinite(v)) throw std::invalid_argument("left table: non-finite value");
  }

  static double knot(double x_min, std::size_t j) {
    return x_min * std::exp(-kStep * static_cast<double>(j));
  }
  static double span() { return kStep * static_cast<double>(kKnots - 1); }

  double x_min() const { return xm_; }
  std::span<const double> values() const { return f_; }

  double operator()(double x) const { return at(std::log(xm_ / x)); }

  /// Value at v = ln(x_min/x).
  double at(double v) const {
    const double pos = v / kStep;
    if (pos >= static_cast<double>(kKnots - 1)) return f_.back() + (v - span()) * end_slope();
    const auto m = static_cast<std::size_t>(std::max(pos, 0.0));
    const std::size_t s = quad::stencil_start(m, kKnots);
    const auto w = quad::lagrange_weights(pos - static_cast<double>(s));
    return quad::dot(w, f_, s, quad::kStencil);
  }

  /// \int_0^{x_j} z^k f dz at every knot.
  std::vector<double> moment_profile(double k) const {
    const double lambda = check_order(k);
    std::vector<double> u(kKnots);
    for (std::size_t j = 0; j < kKnots; ++j) u[j] = std::exp(-lambda * kStep * static_cast<double>(j)) * f_[j];
    auto r = quad::reverse_cumulative(u, kStep, beyond(lambda, span()));
    const double scale = std::pow(xm_, lambda);
    for (double& v : r) v *= scale;
    return r;
  }

  /// \int_0^t z^k f dz, t <= x_min.
  double moment(double k, double t) const {
    const double lambda = check_order(k);
    const double vt = std::log(xm_ / t);
    const double scale = std::pow(xm_, lambda);
    const double pos = vt / kStep;
    if (pos >= static_cast<double>(kKnots - 1)) return scale * beyond(lambda, vt);
    const auto m = static_cast<std::size_t>(std::max(pos, 0.0));
    std::vector<double> u(kKnots);
    const std::size_t first = quad::stencil_start(m, kKnots);
    for (std::size_t j = first; j < kKnots; ++j)
      u[j] = std::exp(-lambda * kStep * static_cast<double>(j)) * f_[j];
    double total = beyond(lambda, span());
    for (std::size_t j = kKnots - 1; j-- > m + 1;) total += quad::interval_integral(u, kStep, j);
    total += quad::sub_interval(u, kStep, m, pos - static_cast<double>(m), 1.0);
    return scale * total;
  }

 private:
  static double check_order(double k) {
    if (!(k > -1.0)) throw std::domain_error("left tail moment does not exist");
    return k + 1.0;
  }
  double end_slope() const { return (f_[kKnots - 1] - f_[kKnots - 2]) / kStep; }
  /// \int_{v0}^\infty e^{-lambda v} (linear extrapolation) dv, v0 >= span.
  double beyond(double lambda, double v0) const {
    const double a = f_.back() + (v0 - span()) * end_slope();
    return std::exp(-lambda * v0) * (a / lambda + end_slope() / (lambda * lambda));
  }

  double xm_;
  std::vector<double> f_;
};

using LeftContinuation = std::shared_ptr<const LeftTable>;

/// Extrapolation beyond the grid.  Below x_min either a power law
/// f_0 (x/x_min)^p e^{c (x - x_min)} or, for logarithmic singularities,
/// f_0 + s ln(x/x_min) + c (x - x_min); above x_max f_{n-1} exp(-r (x - x_max)).
/// A NaN rate marks a right tail that does not decay.  When a function is
/// known in closed form below x_min, its tabulation `left_exact` replaces the
/// fitted model.
struct TailModel {
  double left_exponent = 0.0;
  double right_rate = 1.0;
  bool left_logarithmic = false;
  double left_log_slope = 0.0;
  double left_correction = 0.0;
  LeftContinuation left_exact{};
};

/// \int_X^\infty y^a e^{-r (y - X)} dy.
inline double exp_tail_moment(double a, double X, double r) {
  if (!(r > 0.0)) throw std::domain_error("exponential tail with non-positive rate");
  if (a == 0.0) return 1.0 / r;
  if (a == 1.0) return X / r + 1.0 / (r * r);
  const double rx = r * X;
  auto f = [a, rx](double v) { return std::pow(1.0 + v / rx, a) * std::exp(-v); };
  return std::pow(X, a) / r * quad::GaussKronrod::integrate(f, 0.0, 60.0, 1e-13).value;
}

class GridFunction {
 public:
  GridFunction() = default;

  GridFunction(GridPtr grid, std::vector<double> values)
      : grid_(std::move(grid)), values_(std::move(values)) {
    check();
    tails_ = fit_tails(*grid_, values_);
  }

  GridFunction(GridPtr grid, std::vector<double> values, TailModel tails)
      : grid_(std::move(grid)), values_(std::move(values)), tails_(std::move(tails)) {
    check();
  }

  template <typename F>
  static GridFunction sample(GridPtr grid, F&& f) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid)[i]);
    return GridFunction(std::move(grid), std::move(v));
  }

  static GridFunction zero(GridPtr grid) {
    const std::size_t n = grid->size();
    return GridFunction(std::move(grid), std::vector<double>(n, 0.0));
  }

  const GridPtr& grid_ptr() const { return grid_; }
  const Grid& grid() const { return *grid_; }
  std::span<const double> values() const { return values_; }
  std::size_t size() const { return values_.size(); }
  double operator[](std::size_t i) const { return values_[i]; }
  double left_tail_exponent() const { return tails_.left_exponent; }
  double right_tail_rate() const { return tails_.right_rate; }
  const TailModel& tails() const { return tails_; }

  bool all_nonnegative() const {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v >= 0.0; });
  }

  /// Value at an arbitrary x > 0: quintic interpolation in (ln x, ln f) where
  /// the stencil is strictly positive, in (ln x, f) otherwise; tails outside.
  double operator()(double x) const {
    const Grid& g = *grid_;
    const std::size_t n = g.size();
    if (!(x > 0.0)) throw std::domain_error("grid function evaluated at non-positive x");
    if (x <= g.x_min()) return left_tail_value(x);
    if (x >= g.x_max()) {
      if (values_[n - 1] == 0.0) return 0.0;
      if (std::isnan(tails_.right_rate))
        throw std::domain_error("grid function has no decaying right tail");
      return values_[n - 1] * std::exp(-tails_.right_rate * (x - g.x_max()));
    }
    const double t = g.index_of(x);
    const auto m = std::min(static_cast<std::size_t>(std::max(t, 0.0)), n - 2);
    const std::size_t s = quad::stencil_start(m, n);
    const auto w = quad::lagrange_weights(t - static_cast<double>(s));
    bool positive = true;
    for (std::size_t l = 0; l < quad::kStencil; ++l) positive = positive && values_[s + l] > 0.0;
    double acc = 0.0;
    if (positive) {
      for (std::size_t l = 0; l < quad::kStencil; ++l) acc += w[l] * std::log(values_[s + l]);
      return std::exp(acc);
    }
    for (std::size_t l = 0; l < quad::kStencil; ++l) acc += w[l] * values_[s + l];
    return acc;
  }

  double left_tail_value(double x) const {
    if (tails_.left_exact) return (*tails_.left_exact)(x);
    const double xm = grid_->x_min();
    const double c = tails_.left_correction;
    if (tails_.left_logarithmic) return values_[0] + tails_.left_log_slope * std::log(x / xm) + c * (x - xm);
    if (values_[0] == 0.0) return 0.0;
    return values_[0] * std::pow(x / xm, tails_.left_exponent) * std::exp(c * (x - xm));
  }

  /// \int_0^t z^k f(z) dz under the left tail model, t <= x_min.
  double left_moment(double k, double t) const {
    if (tails_.left_exact) return tails_.left_exact->moment(k, t);
    const double f0 = values_[0];
    const double xm = grid_->x_min();
    const double c = tails_.left_correction;
    if (tails_.left_logarithmic) {
      if (!(k > -1.0)) throw std::domain_error("left tail moment does not exist");
      const double k1 = k + 1.0;
      const double tk = std::pow(t, k1);
      const double s = tails_.left_log_slope;
      return tk / k1 * (f0 - c * xm + s * std::log(t / xm) - s / k1) + c * tk * t / (k1 + 1.0);
    }
    if (f0 == 0.0) return 0.0;
    const double q = tails_.left_exponent + k + 1.0;
    if (!(q > 0.0)) throw std::domain_error("left tail moment does not exist");
    // \int_0^t z^{q-1} e^{c z} dz as a series in c t (|c t| <= 1).
    double term = 1.0, sum = 1.0 / q;
    for (int j = 1; j < 40 && c != 0.0; ++j) {
      term *= c * t / j;
      sum += term / (q + j);
      if (std::abs(term) < 1e-17 * std::abs(sum)) break;
    }
    return f0 * std::exp(-c * xm) * std::pow(xm, k + 1.0) * std::pow(t / xm, q) * sum;
  }

  double left_moment(double k) const { return left_moment(k, grid_->x_min()); }

  /// The left continuation at the knots of a LeftTable.
  std::vector<double> left_knot_values() const {
    if (tails_.left_exact) {
      const auto v = tails_.left_exact->values();
      return {v.begin(), v.end()};
    }
    const double xm = grid_->x_min();
    std::vector<double> out(LeftTable::kKnots);
    bool finite = true;
    for (std::size_t j = 0; j < out.size(); ++j) {
      out[j] = left_tail_value(LeftTable::knot(xm, j));
      finite = finite && std::isfinite(out[j]);
    }
    if (!finite) {
      // A steep fitted power law; fall back to the log-linear continuation.
      const double slope = (values_[1] - values_[0]) / grid_->log_step();
      for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = values_[0] - slope * LeftTable::kStep * static_cast<double>(j);
    }
    out[0] = values_[0];
    return out;
  }

  /// \int_0^{x_j} z^k f dz at the knots of a LeftTable.
  std::vector<double> left_moment_profile(double k) const {
    if (tails_.left_exact) return tails_.left_exact->moment_profile(k);
    std::vector<double> out(LeftTable::kKnots);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = left_moment(k, LeftTable::knot(grid_->x_min(), j));
    return out;
  }

  /// Tail parameters from the outermost nodes.  On the left both the power law
  /// and the logarithmic continuation are fitted to nodes 0..2 (the correction
  /// c absorbs the next order in x); the one that better predicts node 3 is
  /// kept.
  static TailModel fit_tails(const Grid& g, std::span<const double> v) {
    const std::size_t n = v.size();
    TailModel t;
    const double h = g.log_step();
    const double xm = g.x_min();
    // Linear solve for (slope, c) from y_j - y_0 = slope j h + c (x_j - x_0), j = 1, 2.
    auto solve = [&](double y1, double y2, double& slope, double& c) {
      const double d1 = g[1] - g[0], d2 = g[2] - g[0];
      const double det = h * d2 - 2.0 * h * d1;
      c = (h * y2 - 2.0 * h * y1) / det;
      if (!std::isfinite(c) || std::abs(c * xm) > 0.5) c = 0.0;
      slope = (y1 - c * d1) / h;
    };
    bool power_ok = true;
    for (std::size_t j = 0; j < 3; ++j) power_ok = power_ok && v[j] != 0.0 && (v[j] > 0.0) == (v[0] > 0.0);
    double pp = 0.0, pc = 0.0;
    if (power_ok) {
      solve(std::log(v[1] / v[0]), std::log(v[2] / v[0]), pp, pc);
      t.left_exponent = pp;
      t.left_correction = pc;
    }
    if (v[0] != 0.0 || v[1] != 0.0 || v[2] != 0.0) {
      double ls = 0.0, lc = 0.0;
      solve(v[1] - v[0], v[2] - v[0], ls, lc);
      const double log_pred = v[0] + ls * 3.0 * h + lc * (g[3] - xm);
      const double pow_pred =
          power_ok ? v[0] * std::exp(pp * 3.0 * h + pc * (g[3] - xm)) : log_pred;
      if (!power_ok || std::abs(log_pred - v[3]) < std::abs(pow_pred - v[3])) {
        t.left_logarithmic = true;
        t.left_log_slope = ls;
        t.left_correction = lc;
      }
    }
    const double b = v[n - 1];
    t.right_rate = std::numeric_limits<double>::quiet_NaN();
    if (b == 0.0) {
      t.right_rate = 1.0;
      return t;
    }
    // Last two nodes; if rounding noise there hides the decay, the secant from
    // the node nearest x_max/2.
    const std::size_t mid = static_cast<std::size_t>(std::lround(g.index_of(0.5 * g.x_max())));
    for (std::size_t j : {n - 2, mid}) {
      const double a = v[j];
      if (a != 0.0 && (a > 0.0) == (b > 0.0) && std::abs(b) < std::abs(a)) {
        t.right_rate = std::log(a / b) / (g[n - 1] - g[j]);
        return t;
      }
    }
    // A sign change near x_max: cancellation noise far below the function's
    // scale.  The decay of |v| from x_max/2 still bounds the tail.
    double scale = 0.0;
    for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(v[j]));
    if (std::abs(b) < 1e-12 * scale && std::abs(v[mid]) > std::abs(b))
      t.right_rate = std::log(std::abs(v[mid] / b)) / (g[n - 1] - g[mid]);
    return t;
  }

  template <typename F>
  GridFunction map(F&& f) const {
    std::vector<double> v(values_.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f((*grid_)[i], values_[i]);
    return GridFunction(grid_, std::move(v));
  }

  GridFunction& operator+=(const GridFunction& o) { return combine(o, 1.0); }
  GridFunction& operator-=(const GridFunction& o) { return combine(o, -1.0); }
  GridFunction& operator*=(double c) {
    const LeftContinuation old = tails_.left_exact;
    for (double& v : values_) v *= c;
    tails_ = fit_tails(*grid_, values_);
    if (old) {
      std::vector<double> t(old->values().begin(), old->values().end());
      for (double& v : t) v *= c;
      tails_.left_exact = std::make_shared<const LeftTable>(grid_->x_min(), std::move(t));
    }
    return *this;
  }

  /// Same values with the continuation below x_min given at the LeftTable knots.
  GridFunction with_left_table(std::vector<double> knot_values) const {
    GridFunction out = *this;
    out.tails_.left_exact = std::make_shared<const LeftTable>(grid_->x_min(), std::move(knot_values));
    return out;
  }

  /// Same values with a closed-form continuation below x_min.
  template <typename F>
  GridFunction with_left_continuation(F&& f) const {
    std::vector<double> t(LeftTable::kKnots);
    for (std::size_t j = 0; j < t.size(); ++j) t[j] = f(LeftTable::knot(grid_->x_min(), j));
    return with_left_table(std::move(t));
  }

  /// Continuation below x_min as a standalone callable (tabulated or fitted).
  std::function<double(double)> left_continuation() const {
    if (tails_.left_exact) {
      auto t = tails_.left_exact;
      return [t](double x) { return (*t)(x); };
    }
    GridFunction copy(grid_, {values_[0]}, tails_, 0);
    return [copy](double x) { return copy.left_tail_value(x); };
  }

 private:
  // Holds only the first value; enough for left_tail_value.
  GridFunction(GridPtr grid, std::vector<double> first, TailModel tails, int)
      : grid_(std::move(grid)), values_(std::move(first)), tails_(std::move(tails)) {}

  void check() const {
    if (!grid_) throw std::invalid_argument("grid function without grid");
    if (values_.size() != grid_->size())
      throw std::invalid_argument("grid function: value count does not match grid");
    for (double v : values_)
      if (!std::isfinite(v)) throw std::invalid_argument("grid function: non-finite value");
  }

  GridFunction& combine(const GridFunction& o, double sign) {
    if (!(*grid_ == *o.grid_)) throw std::invalid_argument("grid functions on different grids");
    std::vector<double> table;
    if (tails_.left_exact || o.tails_.left_exact) {
      table = left_knot_values();
      const auto b = o.left_knot_values();
      for (std::size_t j = 0; j < table.size(); ++j) table[j] += sign * b[j];
    }
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += sign * o.values_[i];
    tails_ = fit_tails(*grid_, values_);
    if (!table.empty()) tails_.left_exact = std::make_shared<const LeftTable>(grid_->x_min(), std::move(table));
    return *this;
  }

  GridPtr grid_;
  std::vector<double> values_;
  TailModel tails_;
};

inline GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
inline GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
inline GridFunction operator*(double c, GridFunction a) { return a *= c; }
inline GridFunction operator*(GridFunction a, double c) { return a *= c; }

/// Exponents of the weight: x^a for x <= 1 and x^b for x >= 1.
struct WeightParams {
  double a = 0.0;
  double b = 0.0;
};

inline double weight_eval(WeightParams w, double x) {
  if (!(x > 0.0)) throw std::domain_error("weight: x must be positive");
  return x <= 1.0 ? std::pow(x, w.a) : std::pow(x, w.b);
}

/// \int_0^\infty x^s f(x) dx: sixth-order rule in ln x plus the tail models.
inline double moment(const GridFunction& f, double s) {
  const Grid& g = f.grid();
  const std::size_t n = g.size();
  std::vector<double> integrand(n);
  for (std::size_t i = 0; i < n; ++i) integrand[i] = (s == 0.0 ? 1.0 : std::pow(g[i], s)) * f[i] * g[i];
  double total = quad::integrate_uniform(integrand, g.log_step());

  try {
    total += f.left_moment(s);
  } catch (const std::domain_error&) {
    throw std::domain_error("integrate: left tail is not integrable");
  }
  if (f[n - 1] != 0.0) {
    const double r = f.right_tail_rate();
    if (!(r > 0.0)) throw std::domain_error("integrate: right tail does not decay");
    total += f[n - 1] * exp_tail_moment(s, g.x_max(), r);
  }
  return total;
}

/// \int_0^\infty f(x) dx.
inline double integrate(const GridFunction& f) { return moment(f, 0.0); }

inline double first_moment(const GridFunction& f) { return moment(f, 1.0); }

/// |f| times the weight, node-wise.
inline GridFunction weighted_abs(const GridFunction& f, WeightParams w) {
  return f.map([w](double x, double v) { return std::abs(v) * weight_eval(w, x); });
}

namespace detail {

/// \int_0^{x_min} |f| x^a dx in v = ln(x_min/x).  A fitted power law that is
/// not integrable against x^a (typically the fit of a near-cancelling
/// difference) is replaced by the log-linear continuation through nodes 0, 1.
/// Integrands are formed in v so that nothing underflows before the decay
/// factor is applied.
inline double left_tail_l1(const GridFunction& f, double a) {
  if (!(a > -1.0)) throw std::domain_error("weighted norm: weight not integrable at zero");
  const Grid& grid = f.grid();
  const double xm = grid.x_min();
  const double a1 = a + 1.0;
  const auto& t = f.tails();
  const double f0 = f[0];
  const double c = t.left_correction;
  std::function<double(double)> term;  // |f| x^{a+1} / x_min^{a+1} at v
  double k = a1;
  if (t.left_exact) {
    const auto table = t.left_exact;
    term = [table, a1](double v) { return std::abs(table->at(v)) * std::exp(-a1 * v); };
  } else if (t.left_logarithmic) {
    const double s = t.left_log_slope;
    term = [=](double v) { return std::abs(f0 - s * v + c * xm * std::expm1(-v)) * std::exp(-a1 * v); };
  } else if (f0 == 0.0) {
    return 0.0;
  } else if (t.left_exponent + a1 > 0.0) {
    const double q = t.left_exponent + a1;
    k = std::min(k, q);
    term = [=](double v) { return std::abs(f0) * std::exp(-q * v + c * xm * std::expm1(-v)); };
  } else {
    const double s = (f[1] - f[0]) / grid.log_step();
    term = [=](double v) { return std::abs(f0 - s * v) * std::exp(-a1 * v); };
  }
  const double span = 60.0 / k;
  const double scale = std::pow(xm, a1);
  return scale * (quad::GaussKronrod::integrate(term, 0.0, 0.1 * span, 1e-10, 1e-300).value +
                  quad::GaussKronrod::integrate(term, 0.1 * span, span, 1e-10, 1e-300).value);
}

/// \int_{x_max}^\infty |f| x^b dx under the exponential tail.
inline double right_tail_l1(const GridFunction& f, double b) {
  const Grid& grid = f.grid();
  const double f1 = f[grid.size() - 1];
  if (f1 == 0.0) return 0.0;
  const double r = f.right_tail_rate();
  if (!(r > 0.0)) throw std::domain_error("weighted norm: right tail does not decay");
  return std::abs(f1) * exp_tail_moment(b, grid.x_max(), r);
}

}  // namespace detail

/// \int_0^\infty |f| weight dx.
inline double weighted_norm(const GridFunction& f, WeightParams w) {
  const Grid& grid = f.grid();
  const std::size_t n = grid.size();
  const double h = grid.log_step();
  const double tails = detail::left_tail_l1(f, w.a) + detail::right_tail_l1(f, w.b);
  std::vector<double> lo(n);
  for (std::size_t i = 0; i < n; ++i) lo[i] = std::abs(f[i]) * std::pow(grid[i], w.a + 1.0);
  if (w.a == w.b) return quad::integrate_uniform(lo, h) + tails;
  // The weight has a kink at x = 1: each side integrates its own smooth power.
  std::vector<double> hi(n);
  for (std::size_t i = 0; i < n; ++i) hi[i] = std::abs(f[i]) * std::pow(grid[i], w.b + 1.0);
  const double pos = grid.index_of(1.0);
  const auto m = std::min(static_cast<std::size_t>(std::floor(pos)), n - 2);
  const double theta = pos - static_cast<double>(m);
  const auto prefix = [&](const std::vector<double>& u) {
    return quad::integrate_uniform(std::span<const double>(u.data(), m + 1), h) + quad::partial_interval(u, h, m, theta);
  };
  return prefix(lo) + quad::integrate_uniform(hi, h) - prefix(hi) + tails;
}

/// \int_0^\infty |f - g| weight dx, with the tails of the difference refitted.
/// When rounding noise leaves the difference without a decaying right tail,
/// the slower of the two input rates is used.
inline double weighted_distance(const GridFunction& f, const GridFunction& g, WeightParams w) {
  if (!(f.grid() == g.grid())) throw std::invalid_argument("weighted_distance: grids differ");
  GridFunction d = f - g;
  const std::size_t n = d.size();
  if (d[n - 1] != 0.0 && !(d.right_tail_rate() > 0.0)) {
    double r = std::numeric_limits<double>::infinity();
    for (const GridFunction* u : {&f, &g})
      if ((*u)[n - 1] != 0.0) r = std::min(r, u->right_tail_rate());
    if (!(r > 0.0)) throw std::domain_error("weighted norm: right tail does not decay");
    TailModel t = d.tails();
    t.right_rate = r;
    d = GridFunction(d.grid_ptr(), std::vector<double>(d.values().begin(), d.values().end()), t);
  }
  return weighted_norm(d, w);
}

/// f + c m1 with c chosen so the discrete first moment vanishes.  The
/// continuous moment of m1 is -1; the discrete one is used so the result is
/// exact at the quadrature level, and a second pass removes the small
/// nonlinearity introduced by the refitted tails.
inline GridFunction project_zero_moment(const GridFunction& f) {
  const GridFunction kernel =
      GridFunction::sample(f.grid_ptr(), m1).with_left_continuation([](double x) { return m1(x); });
  const double kernel_moment = first_moment(kernel);
  GridFunction out = f;
  for (int pass = 0; pass < 2; ++pass) {
    const double mom = first_moment(out);
    if (mom == 0.0) break;
    out -= (mom / kernel_moment) * kernel;
  }
  return out;
}

}  // namespace selfsim
