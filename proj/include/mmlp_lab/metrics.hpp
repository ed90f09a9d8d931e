#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "mmlp_lab/fdgrid.hpp"

namespace mmlp_lab {

enum class ZygmundExponent {
  Alpha,         // |h|^alpha
  OnePlusAlpha,  // |h|^(1+alpha)
};

enum class ZygmundBoundary {
  Restrict,  // only increments whose stencil stays on the grid
  Extend,    // evaluate u off the grid
};

/// Discrete Zygmund seminorm settings. Increments are k*h*d for k = 1..K and
/// d in {e1, e2} (plus (1,1), (1,-1) with diagonals), h the grid spacing.
struct ZygmundSpec {
  double alpha = 0.8;
  int increments = 8;
  bool diagonals = false;
  ZygmundExponent exponent = ZygmundExponent::Alpha;
  ZygmundBoundary boundary = ZygmundBoundary::Restrict;

  void validate() const {
    if (!(alpha > 0.0 && alpha < 1.0))
      throw std::invalid_argument("zygmund.alpha must be in (0,1)");
    if (increments < 1) throw std::invalid_argument("zygmund.increments must be >= 1");
  }
  double power() const noexcept {
    return exponent == ZygmundExponent::Alpha ? alpha : 1.0 + alpha;
  }
};

namespace detail {

/// Values of u on the grid extended by `pad` rings of nodes on every side.
struct PaddedSamples {
  Grid2D grid;
  int pad;
  int np;
  std::vector<double> v;

  template <typename U>
  PaddedSamples(const Grid2D& g, int pad_, const U& u)
      : grid(g), pad(pad_), np(g.n() + 2 * pad_),
        v(static_cast<std::size_t>(np) * np) {
    for (int j = 0; j < np; ++j)
      for (int i = 0; i < np; ++i)
        v[static_cast<std::size_t>(j) * np + i] =
            u(Point2{g.coord(i - pad), g.coord(j - pad)});
  }
  /// Grid-index access; i, j may be in [-pad, n + pad).
  double operator()(int i, int j) const noexcept {
    return v[static_cast<std::size_t>(j + pad) * np + (i + pad)];
  }
};

inline double zygmund_from_samples(const PaddedSamples& s, const ZygmundSpec& spec) {
  struct Dir {
    int di, dj;
    double len;
  };
  std::vector<Dir> dirs{{1, 0, 1.0}, {0, 1, 1.0}};
  if (spec.diagonals) {
    dirs.push_back({1, 1, std::sqrt(2.0)});
    dirs.push_back({1, -1, std::sqrt(2.0)});
  }
  const int n = s.grid.n();
  const double p = spec.power();
  double best = 0.0;
  for (const auto& d : dirs) {
    for (int k = 1; k <= spec.increments; ++k) {
      const double denom = std::pow(k * s.grid.h() * d.len, p);
      const int si = k * d.di;
      const int sj = k * d.dj;
      for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
          if (spec.boundary == ZygmundBoundary::Restrict) {
            if (i - std::abs(si) < 0 || i + std::abs(si) >= n ||
                j - std::abs(sj) < 0 || j + std::abs(sj) >= n)
              continue;
          }
          const double second =
              s(i + si, j + sj) + s(i - si, j - sj) - 2.0 * s(i, j);
          best = std::max(best, std::abs(second) / denom);
        }
      }
    }
  }
  return best;
}

inline int zygmund_padding(const ZygmundSpec& spec) {
  return spec.boundary == ZygmundBoundary::Extend ? spec.increments : 0;
}

}  // namespace detail

/// max over grid nodes x and increments h_k of
///   |u(x + h_k) + u(x - h_k) - 2 u(x)| / |h_k|^alpha.
/// Returns 0 when no increment is admissible.
template <typename U>
double zygmund_seminorm(const U& u, const ZygmundSpec& spec, const Grid2D& grid) {
  spec.validate();
  const detail::PaddedSamples s(grid, detail::zygmund_padding(spec), u);
  return detail::zygmund_from_samples(s, spec);
}

/// Root mean square of F - f over the grid nodes.
template <typename FA, typename FB>
double l2_error(const FA& F, const FB& f, const Grid2D& grid) {
  double sum = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point2 x = grid.node(k);
    const double d = F(x) - f(x);
    sum += d * d;
  }
  return std::sqrt(sum / static_cast<double>(grid.size()));
}

/// sqrt(mean |F - f|^2 + mean |Lap_h F - Lap_h f|^2) over the grid nodes, with
/// the 5-point Laplacian at the grid spacing.
template <typename FA, typename FB>
double h2_error(const FA& F, const FB& f, const Grid2D& grid) {
  const auto lf = laplacian_field(grid, F);
  const auto lg = laplacian_field(grid, f);
  double s0 = 0.0;
  double s2 = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Point2 x = grid.node(k);
    const double d = F(x) - f(x);
    const double dl = lf.values[k] - lg.values[k];
    s0 += d * d;
    s2 += dl * dl;
  }
  const auto n = static_cast<double>(grid.size());
  return std::sqrt(s0 / n + s2 / n);
}

/// The three scalar errors recorded at every training checkpoint.
struct ErrorMetrics {
  double l2 = 0.0;
  double h2 = 0.0;
  double zygmund = 0.0;
};

/// All checkpoint metrics from one sampling pass of the residual u = F - f on a
/// padded grid. Matches l2_error, h2_error and zygmund_seminorm of F - f up to
/// rounding of the Laplacian difference.
template <typename U>
ErrorMetrics residual_metrics(const U& residual, const ZygmundSpec& zspec,
                              const Grid2D& grid) {
  zspec.validate();
  const detail::PaddedSamples s(grid, std::max(1, detail::zygmund_padding(zspec)),
                                residual);
  const int n = grid.n();
  const double h2inv = 1.0 / (grid.h() * grid.h());
  double s0 = 0.0;
  double s2 = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double d = s(i, j);
      const double lap =
          ((s(i + 1, j) + s(i - 1, j)) + (s(i, j + 1) + s(i, j - 1)) - 4.0 * d) * h2inv;
      s0 += d * d;
      s2 += lap * lap;
    }
  }
  const auto count = static_cast<double>(grid.size());
  return {std::sqrt(s0 / count), std::sqrt(s0 / count + s2 / count),
          detail::zygmund_from_samples(s, zspec)};
}

/// Nodewise |F - f|.
struct ErrorField {
  ScalarField field;

  explicit ErrorField(ScalarField f) : field(std::move(f)) {
    for (double v : field.values)
      if (!(v >= 0.0)) throw std::invalid_argument("error field values must be >= 0");
  }
  const Grid2D& grid() const noexcept { return field.grid; }
  double squared_mass() const noexcept {
    double s = 0.0;
    for (double v : field.values) s += v * v;
    return s;
  }
};

template <typename FA, typename FB>
ErrorField error_field(const FA& F, const FB& f, const Grid2D& grid) {
  return ErrorField(
      sample_field(grid, [&](const Point2& x) { return std::abs(F(x) - f(x)); }));
}

using Region = std::function<bool(const Point2&)>;

inline Region annulus_region(double r0, double half_width) {
  return [=](const Point2& x) { return std::abs(std::hypot(x[0], x[1]) - r0) < half_width; };
}

inline Region disk_region(double radius) {
  return [=](const Point2& x) { return std::hypot(x[0], x[1]) < radius; };
}

/// (squared-error mass inside / total squared-error mass) divided by
/// (nodes inside / total nodes). Values above 1 mean the error concentrates in
/// the region. Returns nullopt for an all-zero field.
inline std::optional<double> localization_ratio(const ErrorField& e,
                                                const Region& region) {
  const auto& g = e.grid();
  double inside = 0.0;
  double total = 0.0;
  std::size_t inside_nodes = 0;
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double v = e.field.values[k];
    total += v * v;
    if (region(g.node(k))) {
      inside += v * v;
      ++inside_nodes;
    }
  }
  if (inside_nodes == 0) throw std::invalid_argument("localization region contains no nodes");
  if (inside_nodes == g.size())
    throw std::invalid_argument("localization region covers every node");
  if (total == 0.0) return std::nullopt;
  const double area = static_cast<double>(inside_nodes) / static_cast<double>(g.size());
  return (inside / total) / area;
}

}  // namespace mmlp_lab
