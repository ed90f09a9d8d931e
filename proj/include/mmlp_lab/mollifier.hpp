#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "mmlp_lab/fdgrid.hpp"
#include "mmlp_lab/network.hpp"

namespace mmlp_lab {

/// Composite trapezoid nodes and weights on [a, b] with `points` nodes.
struct TrapezoidRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  TrapezoidRule(double a, double b, int points) {
    if (points < 2) throw std::invalid_argument("trapezoid rule needs >= 2 points");
    const double step = (b - a) / (points - 1);
    nodes.resize(points);
    weights.assign(points, step);
    for (int k = 0; k < points; ++k) nodes[k] = a + k * step;
    weights.front() = weights.back() = 0.5 * step;
  }
};

/// xi_eps(x) = eps^-m * xi(x / eps),  xi(x) = ||sigma||_L1^-m * prod_i sigma(x_i).
///
/// The tails of sigma beyond `window` (in units of eps) are below 1e-16 and
/// are treated as zero by every quadrature.
struct MollifierKernel {
  Activation act;
  int m = 2;
  double eps = 0.1;
  double l1_norm = 0.0;
  double window = 0.0;
  int resolution = 512;

  double normalization() const { return std::pow(l1_norm, -m); }

  /// Direct evaluation of xi_eps at x.
  double operator()(std::span<const double> x) const {
    if (x.size() != static_cast<std::size_t>(m))
      throw std::invalid_argument("mollifier: point dimension mismatch");
    double prod = 1.0;
    for (double xi : x) prod *= act.value(xi / eps);
    return std::pow(eps, -m) * normalization() * prod;
  }
  double operator()(const Point2& x) const { return (*this)(std::span<const double>(x)); }

  /// The kernel centered at y as one MMLP block: weights 1/eps, biases -y_i/eps,
  /// output weight normalization * eps^-m, c = 0. forward(block, x) = xi_eps(x - y).
  Network as_block(std::span<const double> center) const {
    if (center.size() != static_cast<std::size_t>(m))
      throw std::invalid_argument("mollifier: center dimension mismatch");
    Network net(Architecture::mmlp(1, m));
    for (int i = 0; i < m; ++i) {
      net.weight(0, i) = 1.0 / eps;
      net.bias(0, i) = -center[i] / eps;
    }
    net.output_weight(0) = normalization() * std::pow(eps, -m);
    net.output_bias() = 0.0;
    return net;
  }
};

/// Half-width T with |sigma(t)| < tail for |t| >= T, found by doubling from 1.
inline double decay_window(const Activation& act, double tail = 1e-16) {
  for (double t = 1.0; t <= 1e6; t *= 2.0) {
    bool below = true;
    // Check a few points past t so a zero crossing cannot fool the search.
    for (double s = t; s <= 4.0 * t; s += 0.25 * t)
      below = below && std::abs(act.value(s)) < tail && std::abs(act.value(-s)) < tail;
    if (below) return t;
  }
  throw std::invalid_argument("activation does not decay; its L1 norm is not finite");
}

/// ||sigma||_L1(R) by composite trapezoid on [-T, T], T = decay_window(act).
inline double activation_l1_norm(const Activation& act, int resolution = 512) {
  const double t = decay_window(act);
  const TrapezoidRule rule(-t, t, resolution);
  double s = 0.0;
  for (std::size_t k = 0; k < rule.nodes.size(); ++k)
    s += rule.weights[k] * std::abs(act.value(rule.nodes[k]));
  return s;
}

inline MollifierKernel build_kernel(const Activation& act, int m, double eps,
                                    int resolution = 512) {
  if (!(eps > 0.0)) throw std::invalid_argument("mollifier eps must be > 0");
  if (m < 1 || m > kMaxInputDim) throw std::invalid_argument("mollifier dimension out of range");
  MollifierKernel k;
  k.act = act;
  k.m = m;
  k.eps = eps;
  k.resolution = resolution;
  k.window = decay_window(act);
  k.l1_norm = activation_l1_norm(act, resolution);
  if (!(k.l1_norm > 0.0) || !std::isfinite(k.l1_norm))
    throw std::invalid_argument("activation has vanishing L1 norm");
  return k;
}

namespace detail {

/// Tensor-product trapezoid of g over center + eps*[-T, T]^m.
inline double kernel_window_quadrature(
    const MollifierKernel& k, std::span<const double> center,
    const std::function<double(std::span<const double>)>& g) {
  const double half = k.window * k.eps;
  std::vector<TrapezoidRule> rules;
  for (int i = 0; i < k.m; ++i)
    rules.emplace_back(center[i] - half, center[i] + half, k.resolution);
  std::vector<int> idx(k.m, 0);
  std::vector<double> pt(k.m);
  double sum = 0.0;
  for (;;) {
    double w = 1.0;
    for (int i = 0; i < k.m; ++i) {
      pt[i] = rules[i].nodes[idx[i]];
      w *= rules[i].weights[idx[i]];
    }
    sum += w * g(pt);
    int d = 0;
    while (d < k.m && ++idx[d] == k.resolution) idx[d++] = 0;
    if (d == k.m) break;
  }
  return sum;
}

}  // namespace detail

/// Integral of xi_eps over its window.
inline double kernel_mass(const MollifierKernel& k) {
  const std::vector<double> origin(k.m, 0.0);
  return detail::kernel_window_quadrature(
      k, origin, [&](std::span<const double> y) { return k(y); });
}

/// Integral of xi_eps over {|y| > radius} within the window.
inline double kernel_mass_outside(const MollifierKernel& k, double radius) {
  const std::vector<double> origin(k.m, 0.0);
  return detail::kernel_window_quadrature(k, origin, [&](std::span<const double> y) {
    double r2 = 0.0;
    for (double v : y) r2 += v * v;
    return r2 > radius * radius ? k(y) : 0.0;
  });
}

/// (f * xi_eps)(x) by tensor trapezoid over the kernel window around x.
template <typename F>
double mollify(const MollifierKernel& k, const F& f, const Point2& x) {
  if (k.m != 2) throw std::invalid_argument("mollify: kernel must be two-dimensional");
  return detail::kernel_window_quadrature(k, x, [&](std::span<const double> y) {
    const Point2 yp{y[0], y[1]};
    const Point2 d{x[0] - y[0], x[1] - y[1]};
    return k(d) * f(yp);
  });
}

struct ConvergenceRow {
  double eps;
  double sup_error;
  double l2_error;
};

/// Per eps: max and root-mean-square over grid nodes of |mollify(f) - f|.
template <typename F>
std::vector<ConvergenceRow> convergence_report(const Activation& act,
                                               std::span<const double> eps_list,
                                               const F& f, const Grid2D& grid,
                                               int resolution = 512) {
  if (eps_list.empty()) throw std::invalid_argument("eps list must be nonempty");
  for (std::size_t i = 0; i < eps_list.size(); ++i) {
    if (!(eps_list[i] > 0.0)) throw std::invalid_argument("eps values must be > 0");
    if (i > 0 && !(eps_list[i] < eps_list[i - 1]))
      throw std::invalid_argument("eps list must be strictly decreasing");
  }
  std::vector<ConvergenceRow> rows;
  for (double eps : eps_list) {
    const auto k = build_kernel(act, 2, eps, resolution);
    double sup = 0.0;
    double sq = 0.0;
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const Point2 x = grid.node(n);
      const double e = std::abs(mollify(k, f, x) - f(x));
      sup = std::max(sup, e);
      sq += e * e;
    }
    rows.push_back({eps, sup, std::sqrt(sq / static_cast<double>(grid.size()))});
  }
  return rows;
}

}  // namespace mmlp_lab
