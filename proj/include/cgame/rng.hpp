#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>

#include "cgame/errors.hpp"

namespace cgame {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Purposes for derived streams. Values are part of the reproducibility
// contract: changing them changes every trace.
enum class StreamKind : std::uint64_t {
  nature = 1,
  choice = 2,
  noise = 3,
  setup = 4,
};

// Independent stream for (master seed, purpose, index).
inline Rng derive_stream(std::uint64_t master, StreamKind kind, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ static_cast<std::uint64_t>(kind));
  h = splitmix64(h ^ (index * 0x632be59bd9b4e019ULL));
  return Rng(h);
}

// Uniform in [0, 1) with 53 random bits; independent of the standard
// library's distribution implementations.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

inline std::size_t uniform_index(Rng& rng, std::size_t n) {
  if (n == 0) throw InputError("uniform_index: empty range");
  auto i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

// Box-Muller; one normal per call so the number of draws is predictable.
inline double standard_normal(Rng& rng) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Inverse-CDF sampling over indices in order.
inline std::size_t sample_index(std::span<const double> p, Rng& rng) {
  if (p.empty()) throw InputError("sample_index: empty distribution");
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  // Rounding left u above the total mass; fall back to the last index with
  // positive probability.
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > 0.0) return i;
  }
  return p.size() - 1;
}

}  // namespace cgame
