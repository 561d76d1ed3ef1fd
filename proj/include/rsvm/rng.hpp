#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>

namespace rsvm {

// Reproducibility helpers. mt19937_64 output is bit-exact per the standard;
// std::uniform_int_distribution / std::normal_distribution are not, so all
// derived draws are implemented here.

// Unbiased integer in [0, bound) via rejection sampling.
inline std::uint64_t bounded_u64(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t threshold = (0 - bound) % bound;
  for (;;) {
    std::uint64_t u = gen();
    if (u >= threshold) return u % bound;
  }
}

// Uniform in [0, 1) with 53 random bits.
inline double unit_uniform(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform in [lo, hi).
inline double uniform_in(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_uniform(gen);
}

// Standard normal pair, Box-Muller.
inline std::pair<double, double> gauss_pair(std::mt19937_64& gen) {
  const double u1 = 1.0 - unit_uniform(gen);  // (0, 1]
  const double u2 = unit_uniform(gen);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double t = 2.0 * 3.14159265358979323846 * u2;
  return {r * std::cos(t), r * std::sin(t)};
}

}  // namespace rsvm
