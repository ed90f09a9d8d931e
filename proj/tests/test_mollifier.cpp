#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mmlp_lab/detail/random.hpp"
#include "mmlp_lab/mollifier.hpp"

using namespace mmlp_lab;

namespace {
const Activation kGauss{ActivationKind::GaussianBump};
}

TEST(Mollifier, GaussianL1NormIsSqrtPi) {
  EXPECT_NEAR(activation_l1_norm(kGauss), std::sqrt(std::numbers::pi), 1e-8);
  EXPECT_NEAR(build_kernel(kGauss, 1, 0.3).l1_norm, 1.7724538509055160273, 1e-8);
}

TEST(Mollifier, NonDecayingActivationIsRejected) {
  EXPECT_THROW(build_kernel(Activation{ActivationKind::Tanh}, 2, 0.1), std::invalid_argument);
  EXPECT_THROW(build_kernel(kGauss, 2, 0.0), std::invalid_argument);
}

TEST(Mollifier, KernelIntegratesToOne) {
  for (double eps : {0.5, 0.1, 0.02}) {
    EXPECT_NEAR(kernel_mass(build_kernel(kGauss, 2, eps)), 1.0, 1e-6) << eps;
    EXPECT_NEAR(kernel_mass(build_kernel(kGauss, 1, eps)), 1.0, 1e-6) << eps;
  }
}

TEST(Mollifier, MassIsConcentratedWithinSixEps) {
  for (double eps : {0.5, 0.1, 0.02}) {
    const auto k = build_kernel(kGauss, 2, eps);
    EXPECT_LT(kernel_mass_outside(k, 6 * eps), 1e-6 * kernel_mass(k));
  }
}

TEST(Mollifier, SingleBlockRendering) {
  std::uint64_t n = 0;
  for (double eps : {0.5, 0.1, 0.02}) {
    const auto k = build_kernel(kGauss, 2, eps);
    for (int t = 0; t < 100; ++t) {
      const Point2 y{detail::uniform(-1, 1, 9, detail::kTestDraws, n++),
                     detail::uniform(-1, 1, 9, detail::kTestDraws, n++)};
      const Point2 x{y[0] + detail::uniform(-3, 3, 9, detail::kTestDraws, n++) * eps,
                     y[1] + detail::uniform(-3, 3, 9, detail::kTestDraws, n++) * eps};
      const Network block = k.as_block(y);
      ASSERT_EQ(block.arch, Architecture::mmlp(1));
      const double direct = k(Point2{x[0] - y[0], x[1] - y[1]});
      EXPECT_NEAR(forward(block, kGauss, x), direct, 1e-12 * std::max(1.0, direct));
    }
  }
}

TEST(Mollify, ConstantAndAffineAreReproduced) {
  for (double eps : {0.3, 0.05}) {
    const auto k = build_kernel(kGauss, 2, eps, 128);
    const Point2 x{0.2, -0.7};
    EXPECT_NEAR(mollify(k, [](const Point2&) { return 2.5; }, x), 2.5, 1e-6);
    const auto affine = [](const Point2& p) { return 1.5 * p[0] - 4.0 * p[1] + 0.25; };
    EXPECT_NEAR(mollify(k, affine, x), affine(x), 1e-6);
  }
}

TEST(Mollify, SecondMomentOfTheGaussianKernel) {
  // Per-axis density exp(-t^2/eps^2)/(eps sqrt(pi)) has variance eps^2/2.
  for (double eps : {0.4, 0.1, 0.02}) {
    const auto k = build_kernel(kGauss, 2, eps, 256);
    for (const Point2 x : {Point2{0.0, 0.0}, Point2{0.6, -0.3}}) {
      const double v = mollify(k, [](const Point2& p) { return p[0] * p[0]; }, x);
      EXPECT_NEAR(v, x[0] * x[0] + eps * eps / 2, 1e-10);
    }
  }
}

TEST(ConvergenceReport, ConstantQuadraticAndCircle) {
  const Grid2D g(0.25);
  const std::vector<double> eps{0.2, 0.1, 0.05, 0.025};
  for (const auto& row : convergence_report(kGauss, eps, [](const Point2&) { return -1.0; }, g, 128)) {
    EXPECT_LT(row.sup_error, 1e-6);
    EXPECT_LT(row.l2_error, 1e-6);
  }
  const auto quad = [](const Point2& p) { return p[0] * p[0] + p[1] * p[1]; };
  for (const auto& row : convergence_report(kGauss, eps, quad, g, 128))
    EXPECT_NEAR(row.l2_error / (row.eps * row.eps), 1.0, 0.1);

  const auto rows = convergence_report(kGauss, eps, TargetFunction::circle(), g, 128);
  for (std::size_t k = 1; k < rows.size(); ++k)
    EXPECT_LE(rows[k].sup_error, 1.05 * rows[k - 1].sup_error);
  EXPECT_LT(rows.back().sup_error, rows.front().sup_error);
}

TEST(ConvergenceReport, RejectsBadEpsLists) {
  const Grid2D g(1.0);
  const auto f = [](const Point2&) { return 0.0; };
  EXPECT_THROW(convergence_report(kGauss, std::vector<double>{}, f, g), std::invalid_argument);
  EXPECT_THROW(convergence_report(kGauss, std::vector<double>{0.1, 0.2}, f, g),
               std::invalid_argument);
  EXPECT_THROW(convergence_report(kGauss, std::vector<double>{0.1, -0.2}, f, g),
               std::invalid_argument);
}
