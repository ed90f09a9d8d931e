#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "mmlp_lab/network.hpp"

using namespace mmlp_lab;

namespace {

const Activation kGauss{ActivationKind::GaussianBump};
const Activation kTanh{ActivationKind::Tanh};

double draw(std::uint64_t seed, std::uint64_t k, double lo = -1.0, double hi = 1.0) {
  return detail::uniform(lo, hi, seed, detail::kTestDraws, k);
}

// Independent evaluation with explicit loops over named parameters.
double naive_forward(const Network& net, const Activation& act, std::span<const double> x) {
  const int m = net.arch.m;
  double F = net.output_bias();
  for (int j = 0; j < net.arch.units; ++j) {
    if (net.arch.kind == ArchKind::Mlp) {
      double z = net.bias(j);
      for (int i = 0; i < m; ++i) z += net.weight(j, i) * x[i];
      F += net.output_weight(j) * act.value(z);
    } else {
      double prod = 1.0;
      for (int i = 0; i < m; ++i) prod = prod * act.value(net.weight(j, i) * x[i] + net.bias(j, i));
      F += net.output_weight(j) * prod;
    }
  }
  return F;
}

double fd_relative_error(const Network& net, const Activation& act, std::span<const double> x) {
  const auto g = grad_params(net, act, x);
  Network probe = net;
  double max_diff = 0.0;
  double max_ref = 0.0;
  for (std::size_t k = 0; k < net.params.size(); ++k) {
    const double step = 1e-5;
    probe.params[k] = net.params[k] + step;
    const double up = forward(probe, act, x);
    probe.params[k] = net.params[k] - step;
    const double down = forward(probe, act, x);
    probe.params[k] = net.params[k];
    const double fd = (up - down) / (2.0 * step);
    max_diff = std::max(max_diff, std::abs(fd - g[k]));
    max_ref = std::max(max_ref, std::abs(fd));
  }
  return max_diff / max_ref;
}

}  // namespace

TEST(Network, ParamCountsMatchReferenceTable) {
  EXPECT_EQ(param_count(Architecture::mlp(320)), 1281u);
  EXPECT_EQ(param_count(Architecture::mmlp(256)), 1281u);
  EXPECT_EQ(param_count(Architecture::mlp(640)), 2561u);
  EXPECT_EQ(param_count(Architecture::mmlp(512)), 2561u);
  EXPECT_EQ(param_count(Architecture::mlp(1280)), 5121u);
  EXPECT_EQ(param_count(Architecture::mmlp(1024)), 5121u);
  for (auto [n, nb] : {std::pair{320, 256}, {640, 512}, {1280, 1024}})
    EXPECT_EQ(4 * n + 1, 5 * nb + 1);
}

TEST(Network, ParamCountFormulasForAllSmallShapes) {
  for (int m = 1; m <= 16; ++m)
    for (int n = 1; n <= 64; ++n) {
      EXPECT_EQ(param_count(Architecture::mlp(n, m)), static_cast<std::size_t>((m + 2) * n + 1));
      EXPECT_EQ(param_count(Architecture::mmlp(n, m)), static_cast<std::size_t>((2 * m + 1) * n + 1));
    }
  EXPECT_THROW(param_count(Architecture::mlp(0)), std::invalid_argument);
  EXPECT_THROW(param_count(Architecture::mmlp(4, 0)), std::invalid_argument);
}

TEST(Network, ForwardExamples) {
  Network b(Architecture::mmlp(1));
  b.weight(0, 0) = 1.0;
  b.weight(0, 1) = 1.0;
  b.output_weight(0) = 1.0;
  EXPECT_EQ(forward(b, kGauss, Point2{0.0, 0.0}), 1.0);
  EXPECT_NEAR(forward(b, kGauss, Point2{1.0, 0.0}), 0.367879441171442321595524, 1e-15);

  Network a(Architecture::mlp(1));
  a.output_weight(0) = 5.0;
  EXPECT_EQ(forward(a, kTanh, Point2{0.3, -0.8}), 0.0);

  for (auto arch : {Architecture::mlp(7), Architecture::mmlp(7)}) {
    Network net = init_params(arch, 9);
    for (int j = 0; j < arch.units; ++j) net.output_weight(j) = 0.0;
    net.output_bias() = 0.7;
    EXPECT_EQ(forward(net, kTanh, Point2{0.1, 0.2}), 0.7);
    EXPECT_EQ(forward(net, kGauss, Point2{-0.9, 0.4}), 0.7);
  }
}

TEST(Network, MismatchedInputsAreRejected) {
  const Network net = init_params(Architecture::mmlp(3, 3), 1);
  EXPECT_THROW(forward(net, kGauss, Point2{0.0, 0.0}), std::invalid_argument);
  EXPECT_THROW(Network(Architecture::mmlp(3), ParamVector(15)), std::invalid_argument);
}

TEST(Network, GradientExamples) {
  Network b(Architecture::mmlp(1));
  b.weight(0, 0) = 1.0;
  b.weight(0, 1) = 1.0;
  b.output_weight(0) = 1.0;
  const auto g = grad_params(b, kGauss, Point2{0.0, 0.0});
  EXPECT_EQ(g.back(), 1.0);
  EXPECT_EQ(g[4], 1.0);  // alpha_0
  EXPECT_EQ(g[0], 0.0);  // w_00
  const auto ga = grad_params(init_params(Architecture::mlp(5), 2), kTanh, Point2{0.4, 0.1});
  EXPECT_EQ(ga.back(), 1.0);
}

TEST(Network, GradientMatchesFiniteDifferences) {
  std::uint64_t k = 0;
  for (auto kind : {ArchKind::Mlp, ArchKind::Mmlp})
    for (const auto& act : {kGauss, kTanh})
      for (int trial = 0; trial < 100; ++trial) {
        const Architecture arch{kind, 2, 1 + trial % 6};
        Network net = init_params(arch, 1000 + trial);
        net.output_bias() = draw(5, k++);
        const Point2 x{draw(6, k++), draw(6, k++)};
        EXPECT_LT(fd_relative_error(net, act, x), 1e-5)
            << to_string(kind) << ' ' << to_string(act.kind) << " trial " << trial;
      }
}

TEST(Network, GradientWithZeroFactorIsExact) {
  // A factor with sigma = 0 must still yield the product of the other factors.
  Network net(Architecture::mmlp(1));
  net.weight(0, 0) = 0.0;
  net.bias(0, 0) = 0.0;
  net.weight(0, 1) = 0.5;
  net.output_weight(0) = 2.0;
  const Point2 x{0.3, 0.6};
  const auto g = grad_params(net, kTanh, x);  // tanh(0) = 0
  const double other = std::tanh(0.5 * 0.6);
  EXPECT_DOUBLE_EQ(g[1], 2.0 * 1.0 * other);
  EXPECT_DOUBLE_EQ(g[0], 2.0 * 0.3 * other);
  EXPECT_EQ(count_near_zero_factor_weights(net), 1u);
}

TEST(Network, OutputLayerLinearity) {
  for (auto arch : {Architecture::mlp(9), Architecture::mmlp(9)}) {
    Network net = init_params(arch, 4);
    Network doubled = net;
    for (int j = 0; j < arch.units; ++j) doubled.output_weight(j) *= 2.0;
    for (int t = 0; t < 50; ++t) {
      const Point2 x{draw(8, 2 * t), draw(8, 2 * t + 1)};
      EXPECT_NEAR(forward(doubled, kGauss, x), 2.0 * forward(net, kGauss, x), 1e-14);
    }
  }
}

TEST(Network, MatchesNaiveEvaluation) {
  std::uint64_t k = 0;
  for (int m : {1, 2, 3, 5})
    for (auto kind : {ArchKind::Mlp, ArchKind::Mmlp})
      for (const auto& act : {kGauss, kTanh})
        for (int trial = 0; trial < 20; ++trial) {
          const Network net = init_params({kind, m, 11}, 77 + trial);
          std::vector<double> x(m);
          for (auto& v : x) v = draw(10, k++, -2.0, 2.0);
          EXPECT_NEAR(forward(net, act, x), naive_forward(net, act, x), 1e-12);
        }
}

TEST(Network, InitializationIsDeterministicAndUniform) {
  const auto arch = Architecture::mmlp(256);
  const auto a = init_params(arch, 3);
  EXPECT_EQ(a.params, init_params(arch, 3).params);
  EXPECT_NE(a.params, init_params(arch, 4).params);
  EXPECT_EQ(a.params.size(), 1281u);
  EXPECT_EQ(a.output_bias(), 0.0);
  for (int j = 0; j < arch.units; ++j)
    EXPECT_LE(std::abs(a.output_weight(j)), 1.0 / 16.0);

  // Hidden weights over 10^4 draws: U[-1,1] has mean 0 and variance 1/3.
  const auto big = init_params(Architecture::mlp(10000, 1), 5);
  double mean = 0.0;
  for (int j = 0; j < 10000; ++j) mean += big.weight(j, 0);
  mean /= 10000.0;
  EXPECT_LT(std::abs(mean), 3.0 * std::sqrt(1.0 / 3.0 / 10000.0));
}
