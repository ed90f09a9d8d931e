#include <gtest/gtest.h>

#include <cmath>

#include "mmlp_lab/targets.hpp"

using namespace mmlp_lab;

TEST(Targets, TransitionMidpointAndApex) {
  EXPECT_EQ(TargetFunction::circle()(Point2{0.5, 0.0}), 0.5);
  EXPECT_EQ(TargetFunction::cone()(Point2{0.0, 0.0}), 1.0);
  EXPECT_EQ(TargetFunction::cone()(Point2{1.0, 0.0}), 0.0);
  EXPECT_EQ(TargetFunction::cone()(Point2{3.0, -2.0}), 0.0);
}

TEST(Targets, HighPrecisionValues) {
  // mpmath, 30 digits.
  EXPECT_NEAR(TargetFunction::circle()(Point2{0.0, 0.0}), 0.999999997938846381809796, 1e-15);
  EXPECT_NEAR(TargetFunction::cone()(Point2{0.5, 0.0}), 0.287174588749258751699657, 1e-15);
}

TEST(Targets, ValidationRejectsDegenerateParameters) {
  EXPECT_THROW(TargetFunction::circle(0.5, 0.0).validate(), std::invalid_argument);
  EXPECT_THROW(TargetFunction::cone(1.0).validate(), std::invalid_argument);
  EXPECT_NO_THROW(TargetFunction::cone(1.8).validate());
}

TEST(Targets, RadialSymmetryRangeAndMonotonicity) {
  for (const auto& t : {TargetFunction::circle(), TargetFunction::cone()}) {
    for (std::uint64_t k = 0; k < 500; ++k) {
      const double x = detail::uniform(-1.0, 1.0, 3, detail::kTestDraws, 2 * k);
      const double y = detail::uniform(-1.0, 1.0, 3, detail::kTestDraws, 2 * k + 1);
      const double v = t.eval(x, y);
      EXPECT_EQ(v, t.eval(y, x));
      EXPECT_EQ(v, t.eval(-x, y));
      if (t.kind == TargetKind::MollifiedCircle) {
        EXPECT_GT(v, 0.0);
        EXPECT_LE(v, 1.0);
      } else {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
      }
    }
    double prev = t.eval(0.0, 0.0);
    for (int i = 1; i <= 400; ++i) {
      const double v = t.eval(i * 0.005, 0.0);
      EXPECT_LE(v, prev);
      prev = v;
    }
  }
}

TEST(Targets, SamplingIsDeterministicAndInDomain) {
  const auto a = sample_uniform(TargetFunction::cone(), 1, 42);
  const auto b = sample_uniform(TargetFunction::cone(), 1, 42);
  ASSERT_EQ(a.size(), 1u);
  EXPECT_EQ(a[0].x, b[0].x);
  EXPECT_EQ(a[0].value, b[0].value);
  EXPECT_THROW(sample_uniform(TargetFunction::cone(), 0, 1), std::invalid_argument);

  const auto s = sample_uniform(TargetFunction::circle(), 50000, 7);
  for (const auto& p : s) {
    EXPECT_GE(p.x[0], -1.0);
    EXPECT_LT(p.x[0], 1.0);
    EXPECT_GE(p.x[1], -1.0);
    EXPECT_LT(p.x[1], 1.0);
    EXPECT_GE(p.value, 0.0);
    EXPECT_LE(p.value, 1.0);
  }
  // Prefix property of the counter-based stream.
  const auto shorter = sample_uniform(TargetFunction::circle(), 10, 7);
  for (std::size_t i = 0; i < shorter.size(); ++i) EXPECT_EQ(shorter[i].x, s[i].x);
}

TEST(Targets, SampleMeanMatchesQuadrature) {
  // Oracle: midpoint rule on a 2000x2000 grid of [-1,1]^2, divided by the area.
  const auto cone = TargetFunction::cone();
  const int n = 2000;
  double q = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      q += cone.eval(-1.0 + (i + 0.5) * 2.0 / n, -1.0 + (j + 0.5) * 2.0 / n);
  q /= static_cast<double>(n) * n;
  EXPECT_NEAR(q, 0.1476312337213249, 1e-5);  // closed form 2pi/(2.8*3.8)/4

  const auto s = sample_uniform(cone, 100000, 11);
  double mean = 0.0;
  for (const auto& p : s) mean += p.value;
  mean /= s.size();
  double var = 0.0;
  for (const auto& p : s) var += (p.value - mean) * (p.value - mean);
  var /= (s.size() - 1);
  EXPECT_LT(std::abs(mean - q), 3.0 * std::sqrt(var / s.size()));
}
