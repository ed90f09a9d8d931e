#pragma once

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "mmlp_lab/detail/format.hpp"
#include "mmlp_lab/targets.hpp"

namespace mmlp_lab {

/// Uniform grid on [-1,1]^2 with nodes (-1 + i h, -1 + j h), i, j in [0, 2/h].
///
/// h must be a power of two no larger than 1, so every node coordinate is exact
/// in binary floating point and the origin is a node.
class Grid2D {
 public:
  explicit Grid2D(double h = 1.0 / 128.0) : h_(h) {
    if (!is_valid_spacing(h))
      throw std::invalid_argument("grid spacing h must be 2^-k with k >= 0 (got " +
                                  detail::format_double(h) + ")");
    n_ = static_cast<int>(std::lround(2.0 / h)) + 1;
  }

  static bool is_valid_spacing(double h) noexcept {
    if (!(h > 0.0) || h > 1.0 || !std::isfinite(h)) return false;
    int exp = 0;
    return std::frexp(h, &exp) == 0.5;
  }

  double h() const noexcept { return h_; }
  /// Nodes per axis.
  int n() const noexcept { return n_; }
  std::size_t size() const noexcept {
    return static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_);
  }
  double coord(int i) const noexcept { return -1.0 + i * h_; }
  /// i indexes x (columns), j indexes y (rows).
  Point2 node(int i, int j) const noexcept { return {coord(i), coord(j)}; }
  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(j) * n_ + i;
  }
  Point2 node(std::size_t k) const noexcept {
    return node(static_cast<int>(k % n_), static_cast<int>(k / n_));
  }

  friend bool operator==(const Grid2D& a, const Grid2D& b) noexcept {
    return a.h_ == b.h_;
  }

 private:
  double h_;
  int n_;
};

/// Node values in row-major order (y rows, x columns).
struct ScalarField {
  Grid2D grid;
  std::vector<double> values;

  explicit ScalarField(Grid2D g) : grid(g), values(g.size(), 0.0) {}
  ScalarField(Grid2D g, std::vector<double> v) : grid(g), values(std::move(v)) {
    if (values.size() != grid.size())
      throw std::invalid_argument("field value count does not match grid");
  }

  double& at(int i, int j) noexcept { return values[grid.index(i, j)]; }
  double at(int i, int j) const noexcept { return values[grid.index(i, j)]; }
};

template <typename F>
ScalarField sample_field(const Grid2D& g, const F& f) {
  ScalarField out(g);
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i) out.at(i, j) = f(g.node(i, j));
  return out;
}

/// 5-point stencil (f(x+h e1) + f(x-h e1) + f(x+h e2) + f(x-h e2) - 4 f(x)) / h^2.
/// Neighbours may lie outside [-1,1]^2; f is evaluated there directly.
template <typename F>
double discrete_laplacian_at(const F& f, const Point2& x, double h) {
  // Pairwise grouping keeps the result exactly invariant under grid symmetries.
  const double sum = (f(Point2{x[0] + h, x[1]}) + f(Point2{x[0] - h, x[1]})) +
                     (f(Point2{x[0], x[1] + h}) + f(Point2{x[0], x[1] - h}));
  return (sum - 4.0 * f(x)) / (h * h);
}

/// Stencil offsets and weights (before the 1/h^2 factor) in evaluation order.
struct StencilTap {
  double dx, dy, weight;
};
inline constexpr StencilTap kFivePoint[5] = {
    {1, 0, 1}, {-1, 0, 1}, {0, 1, 1}, {0, -1, 1}, {0, 0, -4}};

/// The stencil at every node, including boundary nodes.
template <typename F>
ScalarField laplacian_field(const Grid2D& g, const F& f) {
  // Sample once on the grid padded by one ring, then difference.
  const int n = g.n();
  const int np = n + 2;
  const double h = g.h();
  std::vector<double> padded(static_cast<std::size_t>(np) * np);
  for (int j = 0; j < np; ++j)
    for (int i = 0; i < np; ++i)
      padded[static_cast<std::size_t>(j) * np + i] =
          f(Point2{g.coord(i - 1), g.coord(j - 1)});
  const auto P = [&](int i, int j) {
    return padded[static_cast<std::size_t>(j + 1) * np + (i + 1)];
  };
  ScalarField out(g);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      out.at(i, j) = ((P(i + 1, j) + P(i - 1, j)) + (P(i, j + 1) + P(i, j - 1)) -
                      4.0 * P(i, j)) /
                     (h * h);
  return out;
}

/// CSV with header `x,y,value`, row-major, shortest round-trip decimals.
inline void write_field_csv(const ScalarField& field, std::ostream& os) {
  os << "x,y,value\n";
  const auto& g = field.grid;
  for (int j = 0; j < g.n(); ++j)
    for (int i = 0; i < g.n(); ++i)
      os << detail::format_double(g.coord(i)) << ','
         << detail::format_double(g.coord(j)) << ','
         << detail::format_double(field.at(i, j)) << '\n';
}

inline void write_field_csv(const ScalarField& field,
                            const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_field_csv(field, os);
  if (!os) throw std::runtime_error("write failed: " + path.string());
}

/// Parses a field CSV written by write_field_csv; the grid is inferred from the
/// row count and coordinates are checked against it.
inline ScalarField read_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "x,y,value")
    throw std::runtime_error("field CSV: missing header 'x,y,value'");
  std::vector<Point2> xy;
  std::vector<double> values;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw std::runtime_error("field CSV: malformed row '" + line + "'");
    xy.push_back({detail::parse_double(std::string_view(line).substr(0, c1)),
                  detail::parse_double(
                      std::string_view(line).substr(c1 + 1, c2 - c1 - 1))});
    values.push_back(detail::parse_double(std::string_view(line).substr(c2 + 1)));
  }
  const auto n = static_cast<long>(std::lround(std::sqrt(values.size())));
  if (n < 2 || static_cast<std::size_t>(n * n) != values.size())
    throw std::runtime_error("field CSV: row count is not a square grid");
  Grid2D g(2.0 / static_cast<double>(n - 1));
  for (std::size_t k = 0; k < xy.size(); ++k)
    if (xy[k] != g.node(k))
      throw std::runtime_error("field CSV: row " + std::to_string(k + 1) +
                               " coordinates do not match the grid");
  return ScalarField(g, std::move(values));
}

inline ScalarField read_field_csv(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return read_field_csv(is);
}

}  // namespace mmlp_lab
