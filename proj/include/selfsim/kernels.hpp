#pragma once

// Coagulation kernels K = 2 + eps W with W symmetric and homogeneous of degree
// zero, plus a randomized checker for the structural assumptions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfsim {

enum class PerturbationForm { power_symmetric, bounded_custom };

inline std::string to_string(PerturbationForm f) {
  return f == PerturbationForm::power_symmetric ? "power_symmetric" : "bounded_custom";
}

inline PerturbationForm parse_form(const std::string& s) {
  if (s == "power_symmetric" || s == "power") return PerturbationForm::power_symmetric;
  if (s == "bounded_custom" || s == "custom") return PerturbationForm::bounded_custom;
  throw std::invalid_argument("unknown perturbation form '" + s + "'");
}

struct KernelSpec {
  double epsilon = 0.0;
  double alpha = 0.5;
  PerturbationForm form = PerturbationForm::power_symmetric;
  double c_star = 1.0;
  /// W for bounded_custom; when empty, 2 c* min(x,y)/max(x,y) is used.
  std::function<double(double, double)> custom_w;

  bool is_power() const { return form == PerturbationForm::power_symmetric; }
};

inline KernelSpec power_kernel(double epsilon, double alpha, double c_star = 1.0) {
  return KernelSpec{epsilon, alpha, PerturbationForm::power_symmetric, c_star, {}};
}

/// Throws on out-of-range parameters. alpha = 0 is accepted as the formal
/// degenerate case W = 2 c*.
inline void validate_spec(const KernelSpec& k) {
  if (!std::isfinite(k.epsilon) || k.epsilon < 0.0)
    throw std::invalid_argument("kernel: epsilon must be finite and >= 0");
  if (!(k.alpha >= 0.0 && k.alpha < 1.0))
    throw std::invalid_argument("kernel: alpha must lie in [0, 1)");
  if (k.is_power() && !(k.c_star > 0.0 && k.c_star <= 1.0))
    throw std::invalid_argument("kernel: c_star must lie in (0, 1]");
}

inline double perturbation_eval(const KernelSpec& k, double x, double y) {
  if (!(x > 0.0 && y > 0.0)) throw std::domain_error("kernel evaluated at non-positive size");
  if (k.is_power()) {
    const double r = std::pow(x / y, k.alpha);
    return k.c_star * (r + 1.0 / r);
  }
  if (k.custom_w) return k.custom_w(x, y);
  return 2.0 * k.c_star * std::min(x, y) / std::max(x, y);
}

inline double kernel_eval(const KernelSpec& k, double x, double y) {
  return 2.0 + k.epsilon * perturbation_eval(k, x, y);
}

struct KernelCheck {
  std::string name;
  bool passed = true;
  /// Largest violation (or, for the weight bound, the empirical constant).
  double measured = 0.0;
};

struct ValidationReport {
  std::vector<KernelCheck> checks;
  double weight_constant = 0.0;

  bool all_passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const KernelCheck& c) { return c.passed; });
  }
  const KernelCheck& check(const std::string& name) const {
    for (const auto& c : checks)
      if (c.name == name) return c;
    throw std::out_of_range("no kernel check named " + name);
  }
};

/// Samples log-uniform (x, y, lambda) in [1e-4, 1e4] and checks symmetry,
/// 0-homogeneity, the power upper bound, the product-weight bound and (for the
/// power form) the lower bound with the spec's c*.
inline ValidationReport validate_kernel(const KernelSpec& k, std::size_t sample_count,
                                        std::uint64_t seed) {
  if (sample_count == 0) throw std::invalid_argument("validate_kernel: sample_count must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logu(std::log(1e-4), std::log(1e4));
  const double a = k.alpha;
  auto bound = [a](double x, double y) { return std::pow(x / y, a) + std::pow(y / x, a); };
  auto sigma = [a](double x) { return x <= 1.0 ? std::pow(x, -a) : std::pow(x, a); };

  KernelCheck sym{"symmetry"}, hom{"homogeneity"}, upper{"upper_bound"}, weight{"weight_bound"},
      lower{"lower_bound"};
  for (std::size_t s = 0; s < sample_count; ++s) {
    const double x = std::exp(logu(rng));
    const double y = std::exp(logu(rng));
    const double lambda = std::exp(logu(rng));
    const double kxy = kernel_eval(k, x, y);
    const double scale = std::max(std::abs(kxy), 1.0);
    const double dsym = std::abs(kxy - kernel_eval(k, y, x)) / scale;
    const double dhom = std::abs(kernel_eval(k, lambda * x, lambda * y) - kxy) / scale;
    sym.measured = std::max(sym.measured, dsym);
    hom.measured = std::max(hom.measured, dhom);

    const double w = perturbation_eval(k, x, y);
    const double b = bound(x, y);
    upper.measured = std::max(upper.measured, (w - b) / b);
    weight.measured = std::max(weight.measured, w / (sigma(x) * sigma(y)));
    if (k.is_power()) lower.measured = std::max(lower.measured, (k.c_star * b - w) / b);
  }
  sym.passed = sym.measured <= 1e-12;
  hom.passed = hom.measured <= 1e-12;
  upper.passed = upper.measured <= 1e-12;
  // (x/y)^a + (y/x)^a <= 2 sigma(x) sigma(y), so any admissible W has C <= 2.
  weight.passed = std::isfinite(weight.measured) && weight.measured <= 2.0 + 1e-12;
  lower.passed = lower.measured <= 1e-12;

  ValidationReport r;
  r.weight_constant = weight.measured;
  r.checks = {sym, hom, upper, weight};
  if (k.is_power()) r.checks.push_back(lower);
  return r;
}

}  // namespace selfsim
