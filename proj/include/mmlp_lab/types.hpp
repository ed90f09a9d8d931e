#pragma once

#include <array>

namespace mmlp_lab {

using Point2 = std::array<double, 2>;

/// A labelled training point.
struct Sample {
  Point2 x;
  double value;
};

}  // namespace mmlp_lab
