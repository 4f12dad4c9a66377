#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "property_checks.hpp"
#include "selfsim/coag_ops.hpp"

using namespace selfsim;

namespace {

GridFunction expo(const GridPtr& g) { return GridFunction::sample(g, [](double x) { return std::exp(-x); }); }

/// B_W[e, e](x) for the power kernel: inner z-integral as an incomplete gamma.
double bw_exp_oracle(double x, double alpha, double c_star) {
  const auto f = [&](double y) {
    return y * std::exp(-y) * c_star *
           (std::pow(y, alpha) * oracle::upper_gamma(1.0 - alpha, x - y) +
            std::pow(y, -alpha) * oracle::upper_gamma(1.0 + alpha, x - y));
  };
  return oracle::integral(f, 0.0, x) / (x * x);
}

}  // namespace

TEST(CumulativeTable, MonotoneWithTotal) {
  const auto g = default_grid();
  const auto f = GridFunction::sample(g, [](double x) { return std::exp(-x) / std::sqrt(x); });
  for (double s : {0.0, 0.5, -0.25}) {
    const CumulativeTable t(f, s);
    for (std::size_t i = 1; i < g->size(); ++i) EXPECT_GE(t.lower(i), t.lower(i - 1));
    EXPECT_NEAR(t.total(), boost::math::tgamma(0.5 + s), 1e-7);
    EXPECT_NEAR(t.lower(500) + t.upper(500), t.total(), 1e-12);
  }
}

TEST(B2Apply, ExponentialIsFixed) {
  const auto g = default_grid();
  const auto b = b2_apply(expo(g), expo(g));
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(b[i], std::exp(-(*g)[i]), 1e-6) << (*g)[i];
  EXPECT_NEAR(b(1.0), std::exp(-1.0), 1e-8);
}

TEST(B2Apply, ZeroArgument) {
  const auto g = default_grid();
  const auto b = b2_apply(GridFunction::zero(g), expo(g));
  for (double v : b.values()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(b2_apply(expo(g), expo(make_grid(1e-5, 40.0, 512))), std::invalid_argument);
}

TEST(B2Apply, ClosedFormForDifferentExponentials) {
  // B2[e^{-x}, e^{-2x}](x) = (2/x^2) \int_0^x y e^{-y} e^{-2(x-y)}/2 dy = (e^{-x}(x-1) + e^{-2x}) / x^2
  const auto g = default_grid();
  const auto b = b2_apply(expo(g), GridFunction::sample(g, [](double x) { return std::exp(-2.0 * x); }));
  for (double x : {0.01, 0.3, 1.0, 4.0, 15.0}) {
    const double want = (std::exp(-x) * (x - 1.0) + std::exp(-2.0 * x)) / (x * x);
    EXPECT_NEAR(b(x) / want, 1.0, 1e-6) << x;
  }
}

TEST(BWApply, ExponentZeroMatchesB2) {
  const auto g = default_grid();
  const auto f = GridFunction::sample(g, [](double x) { return (1.0 + x) * std::exp(-x); });
  const auto a = bw_apply(f, expo(g), power_kernel(0.1, 0.0, 1.0));
  const auto b = b2_apply(f, expo(g));
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * std::max(1.0, std::abs(b[i])));
}

TEST(BWApply, MatchesDoubleIntegralOracle) {
  const auto g = default_grid();
  for (double alpha : {0.25, 0.5, 0.75}) {
    const auto b = bw_apply(expo(g), expo(g), power_kernel(0.1, alpha, 1.0));
    for (double x : {0.05, 1.0, 3.0}) {
      const double want = bw_exp_oracle(x, alpha, 1.0);
      EXPECT_NEAR(b(x) / want, 1.0, 1e-5) << "alpha=" << alpha << " x=" << x;
    }
  }
}

TEST(BWApply, CustomFormUsesDirectQuadrature) {
  const auto g = make_grid(1e-5, 40.0, 256);
  KernelSpec flat = power_kernel(0.1, 0.5);
  flat.form = PerturbationForm::bounded_custom;
  flat.custom_w = [](double, double) { return 2.0; };
  const auto a = bw_apply(expo(g), expo(g), flat);
  for (double x : {0.01, 1.0, 5.0}) EXPECT_NEAR(a(x) / std::exp(-x), 1.0, 1e-4) << x;
}

TEST(BWApply, ZeroArgument) {
  const auto g = default_grid();
  const auto b = bw_apply(expo(g), GridFunction::zero(g), power_kernel(0.1, 0.5));
  for (double v : b.values()) EXPECT_EQ(v, 0.0);
}

TEST(CoagRhs, Examples) {
  const auto g = default_grid();
  const auto r0 = coag_rhs(expo(g), power_kernel(0.0, 0.5));
  for (std::size_t i = 0; i < g->size(); ++i) EXPECT_NEAR(r0[i], std::exp(-(*g)[i]), 1e-6);
  const auto out = coag_rhs(GridFunction::zero(g), power_kernel(0.2, 0.5));
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(CoagRhs, MassMatchesFubiniOracle) {
  // \int x coag_rhs dx = \int\int y K(y,z) e^{-y-z} ln(1 + z/y); with z = t y this is
  // 1 + 2 eps \int_0^\infty (t^a + t^{-a}) ln(1+t) / (1+t)^3 dt.
  const double eps = 0.1, a = 0.5;
  const double want =
      1.0 + 2.0 * eps * oracle::integral_to_inf([&](double t) {
        return (std::pow(t, a) + std::pow(t, -a)) * std::log1p(t) / std::pow(1.0 + t, 3);
      });
  const auto g = default_grid();
  EXPECT_NEAR(first_moment(coag_rhs(expo(g), power_kernel(eps, a))), want, 1e-5);
}

TEST(CoagProperties, Bilinearity) {
  const auto g = default_grid();
  for (double a : {0.25, 0.75}) {
    const auto r = props::bilinearity(g, power_kernel(0.1, a), 42);
    // Positive inputs are interpolated in log space, so linearity holds to
    // interpolation accuracy only.
    EXPECT_LE(r.b2, 1e-8);
    EXPECT_LE(r.bw, 1e-8);
  }
}

TEST(CoagProperties, FubiniCrossCheck) { EXPECT_LE(props::fubini_defect(default_grid()), 1e-6); }

TEST(CoagProperties, NonNegativeOutputsForNonNegativeInputs) {
  const auto g = default_grid();
  const auto spec = power_kernel(0.1, 0.5);
  const auto pos = [&](double r, double s) {
    return GridFunction::sample(g, [=](double x) { return std::pow(x, s) * std::exp(-r * x); });
  };
  for (const auto& [u, v] : {std::pair{pos(1.0, 0.0), pos(2.0, 1.0)}, std::pair{pos(0.5, -0.3), pos(3.0, 2.0)}}) {
    for (const auto& out : {b2_apply(u, v), bw_apply(u, v, spec)}) {
      const double top = *std::max_element(out.values().begin(), out.values().end());
      for (double w : out.values()) EXPECT_GE(w, -1e-13 * top);
    }
  }
}
