#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "mmlp_lab/detail/random.hpp"
#include "mmlp_lab/types.hpp"

namespace mmlp_lab {

enum class ActivationKind { Tanh, GaussianBump };

/// Scalar activation with its derivative. GaussianBump is exp(-t^2).
struct Activation {
  ActivationKind kind = ActivationKind::GaussianBump;

  double value(double t) const noexcept {
    return kind == ActivationKind::Tanh ? std::tanh(t) : std::exp(-t * t);
  }
  double derivative(double t) const noexcept {
    if (kind == ActivationKind::Tanh) {
      const double th = std::tanh(t);
      return 1.0 - th * th;
    }
    return -2.0 * t * std::exp(-t * t);
  }
};

inline std::string to_string(ActivationKind k) {
  return k == ActivationKind::Tanh ? "tanh" : "gaussian";
}

inline ActivationKind parse_activation(std::string_view s) {
  if (s == "tanh") return ActivationKind::Tanh;
  if (s == "gaussian") return ActivationKind::GaussianBump;
  throw std::invalid_argument("unknown activation '" + std::string(s) + "'");
}

enum class ArchKind { Mlp, Mmlp };

inline std::string to_string(ArchKind k) {
  return k == ArchKind::Mlp ? "mlp" : "mmlp";
}

inline constexpr int kMaxInputDim = 16;

/// One hidden layer of `units` additive neurons (Mlp) or multiplicative blocks
/// (Mmlp) on inputs of dimension m.
struct Architecture {
  ArchKind kind = ArchKind::Mmlp;
  int m = 2;
  int units = 1;

  static Architecture mlp(int n, int m = 2) { return {ArchKind::Mlp, m, n}; }
  static Architecture mmlp(int n_b, int m = 2) { return {ArchKind::Mmlp, m, n_b}; }

  /// Trainable scalars per neuron or block.
  std::size_t unit_stride() const noexcept {
    return kind == ArchKind::Mlp ? static_cast<std::size_t>(m) + 2
                                 : 2 * static_cast<std::size_t>(m) + 1;
  }

  void validate() const {
    if (m < 1 || m > kMaxInputDim)
      throw std::invalid_argument("input dimension m must be in [1, 16]");
    if (units < 1) throw std::invalid_argument("unit count must be >= 1");
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// (m+2)n+1 for the MLP, (2m+1)n_b+1 for the MMLP.
inline std::size_t param_count(const Architecture& a) {
  a.validate();
  return a.unit_stride() * static_cast<std::size_t>(a.units) + 1;
}

using ParamVector = std::vector<double>;

/// Network parameters in a flat vector.
///
/// Layout, unit-major with the global output bias c last:
///   MLP  neuron j at j*(m+2):   w_j[0..m-1], b_j, alpha_j
///   MMLP block j  at j*(2m+1):  (w_j0, b_j0), ..., (w_j(m-1), b_j(m-1)), alpha_j
/// MMLP block j evaluates alpha_j * prod_i sigma(w_ji * x_i + b_ji).
struct Network {
  Architecture arch;
  ParamVector params;

  Network() = default;
  Network(Architecture a, ParamVector p) : arch(a), params(std::move(p)) {
    if (params.size() != param_count(arch))
      throw std::invalid_argument(
          "parameter vector length " + std::to_string(params.size()) +
          " does not match architecture (" + std::to_string(param_count(arch)) +
          ")");
  }

  /// Zero-initialized parameters.
  explicit Network(Architecture a) : arch(a), params(param_count(a), 0.0) {}

  std::size_t unit_offset(int j) const noexcept {
    return arch.unit_stride() * static_cast<std::size_t>(j);
  }
  double& output_bias() noexcept { return params.back(); }
  double output_bias() const noexcept { return params.back(); }
  double& output_weight(int j) noexcept {
    return params[unit_offset(j) + arch.unit_stride() - 1];
  }
  double output_weight(int j) const noexcept {
    return params[unit_offset(j) + arch.unit_stride() - 1];
  }
  /// MLP: w_j[i]. MMLP: w_ji.
  double& weight(int j, int i) noexcept {
    return params[unit_offset(j) +
                  (arch.kind == ArchKind::Mlp ? i : 2 * static_cast<std::size_t>(i))];
  }
  double weight(int j, int i) const noexcept {
    return const_cast<Network*>(this)->weight(j, i);
  }
  /// MLP: b_j (i ignored). MMLP: b_ji.
  double& bias(int j, int i = 0) noexcept {
    return params[unit_offset(j) + (arch.kind == ArchKind::Mlp
                                        ? static_cast<std::size_t>(arch.m)
                                        : 2 * static_cast<std::size_t>(i) + 1)];
  }
  double bias(int j, int i = 0) const noexcept {
    return const_cast<Network*>(this)->bias(j, i);
  }
};

inline void check_input(const Network& net, std::span<const double> x) {
  if (x.size() != static_cast<std::size_t>(net.arch.m))
    throw std::invalid_argument("input dimension mismatch");
}

/// F(x) = c + sum_j alpha_j sigma(w_j . x + b_j)              (MLP)
/// F(x) = c + sum_j alpha_j prod_i sigma(w_ji x_i + b_ji)     (MMLP)
inline double forward(const Network& net, const Activation& act,
                      std::span<const double> x) {
  check_input(net, x);
  const auto& p = net.params;
  const int m = net.arch.m;
  const std::size_t stride = net.arch.unit_stride();
  double sum = 0.0;
  if (net.arch.kind == ArchKind::Mlp) {
    for (int j = 0; j < net.arch.units; ++j) {
      const double* u = p.data() + stride * j;
      double z = u[m];
      for (int i = 0; i < m; ++i) z += u[i] * x[i];
      sum += u[m + 1] * act.value(z);
    }
  } else {
    for (int j = 0; j < net.arch.units; ++j) {
      const double* u = p.data() + stride * j;
      double prod = 1.0;
      for (int i = 0; i < m; ++i) prod *= act.value(u[2 * i] * x[i] + u[2 * i + 1]);
      sum += u[2 * m] * prod;
    }
  }
  return sum + p.back();
}

inline double forward(const Network& net, const Activation& act,
                      const Point2& x) {
  return forward(net, act, std::span<const double>(x));
}

/// out += scale * dF(x)/dtheta, in ParamVector layout.
inline void accumulate_grad(const Network& net, const Activation& act,
                            std::span<const double> x, double scale,
                            std::span<double> out) {
  check_input(net, x);
  if (out.size() != net.params.size())
    throw std::invalid_argument("gradient buffer length mismatch");
  const auto& p = net.params;
  const int m = net.arch.m;
  const std::size_t stride = net.arch.unit_stride();
  if (net.arch.kind == ArchKind::Mlp) {
    for (int j = 0; j < net.arch.units; ++j) {
      const double* u = p.data() + stride * j;
      double* g = out.data() + stride * j;
      double z = u[m];
      for (int i = 0; i < m; ++i) z += u[i] * x[i];
      const double alpha = u[m + 1];
      const double dz = scale * alpha * act.derivative(z);
      for (int i = 0; i < m; ++i) g[i] += dz * x[i];
      g[m] += dz;
      g[m + 1] += scale * act.value(z);
    }
  } else {
    std::array<double, kMaxInputDim> s{};
    std::array<double, kMaxInputDim> ds{};
    std::array<double, kMaxInputDim + 1> prefix{};
    std::array<double, kMaxInputDim + 1> suffix{};
    for (int j = 0; j < net.arch.units; ++j) {
      const double* u = p.data() + stride * j;
      double* g = out.data() + stride * j;
      for (int i = 0; i < m; ++i) {
        const double z = u[2 * i] * x[i] + u[2 * i + 1];
        s[i] = act.value(z);
        ds[i] = act.derivative(z);
      }
      // prod_{k != i} s_k via prefix/suffix products (exact when a factor is 0).
      prefix[0] = 1.0;
      for (int i = 0; i < m; ++i) prefix[i + 1] = prefix[i] * s[i];
      suffix[m] = 1.0;
      for (int i = m - 1; i >= 0; --i) suffix[i] = suffix[i + 1] * s[i];
      const double alpha = u[2 * m];
      for (int i = 0; i < m; ++i) {
        const double d = scale * alpha * ds[i] * prefix[i] * suffix[i + 1];
        g[2 * i] += d * x[i];
        g[2 * i + 1] += d;
      }
      g[2 * m] += scale * prefix[m];
    }
  }
  out.back() += scale;
}

inline ParamVector grad_params(const Network& net, const Activation& act,
                               std::span<const double> x) {
  ParamVector g(net.params.size(), 0.0);
  accumulate_grad(net, act, x, 1.0, g);
  return g;
}

/// Hidden weights and biases uniform on [-1,1]; output weights uniform on [-1,1]
/// scaled by 1/sqrt(units); c = 0. Parameter k depends only on (seed, k).
inline Network init_params(const Architecture& arch, std::uint64_t seed) {
  Network net(arch);
  const std::size_t stride = arch.unit_stride();
  const double out_scale = 1.0 / std::sqrt(static_cast<double>(arch.units));
  for (std::size_t k = 0; k + 1 < net.params.size(); ++k) {
    const double u = detail::uniform(-1.0, 1.0, seed, detail::kInitParams, k);
    net.params[k] = (k % stride == stride - 1) ? u * out_scale : u;
  }
  net.output_bias() = 0.0;
  return net;
}

/// Number of MMLP factor weights with |w_ji| < tol. Such blocks have a singular
/// weight matrix; they are reported, not rejected. Always 0 for the MLP.
inline std::size_t count_near_zero_factor_weights(const Network& net,
                                                  double tol = 1e-8) {
  if (net.arch.kind != ArchKind::Mmlp) return 0;
  std::size_t n = 0;
  for (int j = 0; j < net.arch.units; ++j)
    for (int i = 0; i < net.arch.m; ++i)
      if (std::abs(net.weight(j, i)) < tol) ++n;
  return n;
}

}  // namespace mmlp_lab
