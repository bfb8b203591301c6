#pragma once

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cgame/errors.hpp"

namespace cgame {

using Vector = std::vector<double>;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw InputError("dot: size mismatch " + std::to_string(a.size()) +
                     " vs " + std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("l1_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return s;
}

// Bit patterns of a vector: the key used wherever contexts are compared for
// exact equality.
using BitKey = std::vector<std::uint64_t>;

inline BitKey bit_key(std::span<const double> v) {
  BitKey key(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) key[i] = std::bit_cast<std::uint64_t>(v[i]);
  return key;
}

inline bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  }
  return true;
}

// Shortest decimal representation that round-trips.
inline std::string format_double(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

}  // namespace cgame
