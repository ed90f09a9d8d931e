#pragma once

#include <cstdint>

namespace mmlp_lab::detail {

// Counter-based stream: every draw is a pure function of (seed, stream, index),
// so results do not depend on the order in which draws are requested.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t hash3(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) noexcept {
  return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index);
}

/// Uniform double in [0, 1) with 53 random bits.
constexpr double unit_uniform(std::uint64_t seed, std::uint64_t stream,
                              std::uint64_t index) noexcept {
  return static_cast<double>(hash3(seed, stream, index) >> 11) * 0x1.0p-53;
}

/// Uniform double in [lo, hi).
constexpr double uniform(double lo, double hi, std::uint64_t seed,
                         std::uint64_t stream, std::uint64_t index) noexcept {
  return lo + (hi - lo) * unit_uniform(seed, stream, index);
}

/// Uniform integer in [0, n) by multiply-shift; n must be nonzero.
inline std::uint64_t below(std::uint64_t n, std::uint64_t seed,
                           std::uint64_t stream, std::uint64_t index) noexcept {
  const auto r = hash3(seed, stream, index);
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(r) * n) >> 64);
}

// Stream tags keep independent consumers of one seed apart.
enum Stream : std::uint64_t {
  kSamplePoints = 0x5a11,
  kInitParams = 0x1417,
  kEpochShuffle = 0xe90c,
  kStencilCenters = 0x5cce,
  kTestDraws = 0x7e57,
};

}  // namespace mmlp_lab::detail
