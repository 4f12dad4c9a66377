#pragma once

// The homogeneous solutions m1, m2 of the second-order ODE attached to the
// linearised operator, the abbreviation E, and the truncated exponential
// integrals I_k(x) = \int_1^x e^z / z^k dz they are built from.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "selfsim/quadrature.hpp"

namespace selfsim {

/// m2 switches from the defining formula to the twice integrated-by-parts form here.
inline constexpr double kM2Switch = 1.5;

/// Below this x, I_k comes from the exponential-integral series.
inline constexpr double kExpIntegralSeriesCut = 0.25;

/// Ei(1).
inline constexpr double kEi1 = 1.8951178163559367554665209343316342690170605817327;

/// I_k(x) = \int_1^x e^z / z^k dz for k in {1, 2, 3}; negative for x < 1.
///
/// Integrated in t = ln z, where the integrand e^{e^t} e^{(1-k)t} is smooth on
/// the whole half line.  For small x, I_1 = Ei(x) - Ei(1) from the convergent
/// series of Ei and I_2, I_3 by integration by parts.
inline double exp_integral(int k, double x) {
  if (k < 1 || k > 3) throw std::invalid_argument("exp_integral: k must be 1, 2 or 3");
  if (!(x > 0.0)) throw std::domain_error("exp_integral: x must be positive");
  if (x == 1.0) return 0.0;
  if (x < kExpIntegralSeriesCut) {
    double term = 1.0, sum = 0.0;
    for (int j = 1; j < 30; ++j) {
      term *= x / j;
      sum += term / j;
      if (term < 1e-18 * sum) break;
    }
    const double i1 = std::numbers::egamma + std::log(x) + sum - kEi1;
    if (k == 1) return i1;
    const double ex = std::exp(x);
    const double i2 = std::numbers::e - ex / x + i1;
    if (k == 2) return i2;
    return 0.5 * (std::numbers::e - ex / (x * x)) + 0.5 * i2;
  }
  const double kk = static_cast<double>(k);
  auto integrand = [kk](double t) { return std::exp(std::exp(t) + (1.0 - kk) * t); };
  return quad::GaussKronrod::integrate(integrand, 0.0, std::log(x), 1e-14).value;
}

inline double m1(double x) { return (1.0 - x) * std::exp(-x); }
inline double m1_prime(double x) { return (x - 2.0) * std::exp(-x); }

/// m2 from its definition 1 + (1-x) e^{-x} I_1(x). Loses digits for large x.
inline double m2_direct(double x) {
  return 1.0 + (1.0 - x) * std::exp(-x) * exp_integral(1, x);
}

/// m2 after two integrations by parts; free of the e^x e^{-x} cancellation.
inline double m2_stable(double x) {
  const double em = std::exp(-x);
  return 1.0 / (x * x) - 2.0 * std::numbers::e * (1.0 - x) * em +
         2.0 * (1.0 - x) * em * exp_integral(3, x);
}

inline double m2(double x) {
  if (!(x > 0.0)) throw std::domain_error("m2: x must be positive");
  return x <= kM2Switch ? m2_direct(x) : m2_stable(x);
}

/// d/dx m2 = (x-2) e^{-x} I_1(x) + (1-x)/x.
inline double m2_prime(double x) {
  if (!(x > 0.0)) throw std::domain_error("m2_prime: x must be positive");
  return (x - 2.0) * std::exp(-x) * exp_integral(1, x) + (1.0 - x) / x;
}

/// E(x) = e^x/x - I_1(x), evaluated as e - I_2(x).
inline double aux_E(double x) {
  if (!(x > 0.0)) throw std::domain_error("aux_E: x must be positive");
  return std::numbers::e - exp_integral(2, x);
}

inline double aux_E_direct(double x) { return std::exp(x) / x - exp_integral(1, x); }

}  // namespace selfsim
