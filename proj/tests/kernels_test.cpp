#include <cmath>
#include <stdexcept>

#include <gtest/gtest.h>

#include "selfsim/kernels.hpp"

using namespace selfsim;

TEST(PerturbationEval, Examples) {
  for (double a : {0.1, 0.5, 0.9}) EXPECT_DOUBLE_EQ(perturbation_eval(power_kernel(0.1, a), 3.0, 3.0), 2.0);
  EXPECT_NEAR(perturbation_eval(power_kernel(0.1, 0.5), 4.0, 1.0), 2.5, 1e-15);
  const auto flat = power_kernel(0.1, 0.0);
  for (double x : {1e-3, 0.5, 70.0}) EXPECT_DOUBLE_EQ(perturbation_eval(flat, x, 2.0), 2.0);
  EXPECT_DOUBLE_EQ(kernel_eval(flat, 0.01, 9.0), 2.2);
  EXPECT_THROW(perturbation_eval(power_kernel(0.1, 0.5), 0.0, 1.0), std::domain_error);
  EXPECT_THROW(perturbation_eval(power_kernel(0.1, 0.5), 1.0, -2.0), std::domain_error);
}

TEST(KernelEval, Examples) {
  const auto k0 = power_kernel(0.0, 0.5);
  for (double x : {1e-4, 0.3, 12.0}) EXPECT_EQ(kernel_eval(k0, x, 1.0 / x), 2.0);
  EXPECT_NEAR(kernel_eval(power_kernel(0.1, 0.5), 4.0, 1.0), 2.25, 1e-15);
  const auto k = power_kernel(0.2, 0.75);
  EXPECT_NEAR(kernel_eval(k, 7.3 * 0.4, 7.3 * 5.0), kernel_eval(k, 0.4, 5.0), 1e-13);
}

TEST(ValidateSpec, Ranges) {
  EXPECT_NO_THROW(validate_spec(power_kernel(0.0, 0.5)));
  EXPECT_THROW(validate_spec(power_kernel(-0.1, 0.5)), std::invalid_argument);
  EXPECT_THROW(validate_spec(power_kernel(0.1, 1.0)), std::invalid_argument);
  EXPECT_THROW(validate_spec(power_kernel(0.1, -0.2)), std::invalid_argument);
  EXPECT_THROW(validate_spec(power_kernel(0.1, 0.5, 0.0)), std::invalid_argument);
  EXPECT_THROW(validate_spec(power_kernel(0.1, 0.5, 1.5)), std::invalid_argument);
  EXPECT_THROW(validate_spec(power_kernel(std::nan(""), 0.5)), std::invalid_argument);
  EXPECT_EQ(parse_form("power"), PerturbationForm::power_symmetric);
  EXPECT_EQ(parse_form("bounded_custom"), PerturbationForm::bounded_custom);
  EXPECT_THROW(parse_form("smoluchowski"), std::invalid_argument);
}

TEST(ValidateKernel, PowerFormPassesEverything) {
  for (double a : {0.1, 0.25, 0.5, 0.75, 0.95}) {
    const auto r = validate_kernel(power_kernel(0.1, a), 2000, 17);
    EXPECT_TRUE(r.all_passed()) << a;
    EXPECT_LE(r.check("symmetry").measured, 1e-12);
    EXPECT_LE(r.check("homogeneity").measured, 1e-12);
    EXPECT_LE(r.weight_constant, 2.0 + 1e-12);
    // c* = 1 attains the upper bound.
    EXPECT_NEAR(r.check("upper_bound").measured, 0.0, 1e-12);
  }
}

TEST(ValidateKernel, HalfConstantStrongSingularity) {
  const auto r = validate_kernel(power_kernel(0.1, 0.75, 0.5), 2000, 3);
  EXPECT_TRUE(r.check("upper_bound").passed);
  EXPECT_TRUE(r.check("lower_bound").passed);
  EXPECT_TRUE(r.all_passed());
}

TEST(ValidateKernel, AsymmetricCustomFailsSymmetry) {
  KernelSpec k = power_kernel(0.1, 0.5);
  k.form = PerturbationForm::bounded_custom;
  k.custom_w = [](double x, double y) { return std::pow(x / y, 0.5); };
  const auto r = validate_kernel(k, 500, 5);
  EXPECT_FALSE(r.check("symmetry").passed);
  EXPECT_TRUE(r.check("homogeneity").passed);
  EXPECT_FALSE(r.all_passed());
}

TEST(ValidateKernel, NonHomogeneousCustomFailsHomogeneity) {
  KernelSpec k = power_kernel(0.1, 0.5);
  k.form = PerturbationForm::bounded_custom;
  k.custom_w = [](double x, double y) { return 1.0 / (1.0 + x + y); };
  const auto r = validate_kernel(k, 500, 5);
  EXPECT_TRUE(r.check("symmetry").passed);
  EXPECT_FALSE(r.check("homogeneity").passed);
}

TEST(ValidateKernel, BoundedCustomDefault) {
  KernelSpec k = power_kernel(0.1, 0.5);
  k.form = PerturbationForm::bounded_custom;
  const auto r = validate_kernel(k, 1000, 9);
  EXPECT_TRUE(r.all_passed());
  EXPECT_THROW(validate_kernel(k, 0, 1), std::invalid_argument);
}
