#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmlp_lab/detail/random.hpp"
#include "mmlp_lab/types.hpp"

namespace mmlp_lab {

enum class TargetKind { MollifiedCircle, MollifiedCone };

/// Closed-form radial target on R^2.
///
/// circle: 1/2 (1 + tanh((r0 - |x|) / eps))
/// cone:   max(1 - |x|, 0)^beta
struct TargetFunction {
  TargetKind kind = TargetKind::MollifiedCone;
  double r0 = 0.5;
  double eps = 0.05;
  double beta = 1.8;

  static TargetFunction circle(double r0 = 0.5, double eps = 0.05) {
    return TargetFunction{TargetKind::MollifiedCircle, r0, eps, 1.8};
  }
  static TargetFunction cone(double beta = 1.8) {
    return TargetFunction{TargetKind::MollifiedCone, 0.5, 0.05, beta};
  }

  void validate() const {
    if (kind == TargetKind::MollifiedCircle && !(eps > 0.0))
      throw std::invalid_argument("target.eps must be > 0");
    if (kind == TargetKind::MollifiedCone && !(beta > 1.0))
      throw std::invalid_argument("target.beta must be > 1");
    if (!std::isfinite(r0) || !std::isfinite(eps) || !std::isfinite(beta))
      throw std::invalid_argument("target parameters must be finite");
  }

  double operator()(const Point2& p) const noexcept { return eval(p[0], p[1]); }

  double eval(double x, double y) const noexcept {
    const double r = std::hypot(x, y);
    if (kind == TargetKind::MollifiedCircle)
      return 0.5 * (1.0 + std::tanh((r0 - r) / eps));
    return std::pow(std::max(1.0 - r, 0.0), beta);
  }
};

inline double eval_target(const TargetFunction& t, const Point2& p) noexcept {
  return t(p);
}

inline std::string to_string(TargetKind k) {
  return k == TargetKind::MollifiedCircle ? "circle" : "cone";
}

/// n i.i.d. points uniform on [-1,1]^2 with their target values. Point i depends
/// only on (seed, i).
inline std::vector<Sample> sample_uniform(const TargetFunction& t, std::size_t n,
                                          std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample count must be >= 1");
  std::vector<Sample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Point2 p{
        detail::uniform(-1.0, 1.0, seed, detail::kSamplePoints, 2 * i),
        detail::uniform(-1.0, 1.0, seed, detail::kSamplePoints, 2 * i + 1)};
    out.push_back({p, t(p)});
  }
  return out;
}

}  // namespace mmlp_lab
