#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace hetune {

// mt19937_64 output is fixed by the standard; the draws below are built on
// raw engine output so sequences do not depend on the standard library's
// distribution implementations.
using Rng = std::mt19937_64;

/// Uniform integer in [0, n). n must be positive.
inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = Rng::max() - (Rng::max() % bound);
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return static_cast<std::size_t>(x % bound);
}

/// Uniform real in [0, 1) with 53 random bits.
inline double uniform_unit(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller, one variate per call.
  double u1 = uniform_unit(rng);
  while (u1 <= 0.0) u1 = uniform_unit(rng);
  const double u2 = uniform_unit(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

/// Multiplicative lognormal factor with median 1 and relative standard
/// deviation `rel_stddev`.
inline double lognormal_factor(Rng& rng, double rel_stddev) {
  const double sigma = std::sqrt(std::log1p(rel_stddev * rel_stddev));
  return std::exp(sigma * standard_normal(rng));
}

}  // namespace hetune
