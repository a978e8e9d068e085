#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>

namespace sprinter {

/// Candidate interaction X_a * X_b with a <= b. Pairs are numbered row by
/// row: (0,0), (0,1), ..., (0,p-1), (1,1), ..., (p-1,p-1).
struct PairIndex {
  std::size_t a = 0;
  std::size_t b = 0;
  std::size_t flat = 0;

  friend bool operator==(const PairIndex&, const PairIndex&) = default;
};

inline std::size_t pair_count(std::size_t p) { return p * (p + 1) / 2; }

inline std::size_t pair_flat(std::size_t a, std::size_t b, std::size_t p) {
  return a * p - a * (a == 0 ? 0 : a - 1) / 2 + (b - a);
}

inline PairIndex pair_from_flat(std::size_t flat, std::size_t p) {
  // Row a begins at S(a) = a*p - a(a-1)/2; invert the quadratic, then fix
  // rounding by stepping.
  const double pp = static_cast<double>(p) + 0.5;
  const double disc = pp * pp - 2.0 * static_cast<double>(flat);
  std::size_t a = disc > 0.0 ? static_cast<std::size_t>(std::max(0.0, std::floor(pp - std::sqrt(disc)))) : p - 1;
  if (a >= p) a = p - 1;
  while (a > 0 && pair_flat(a, a, p) > flat) --a;
  while (a + 1 < p && pair_flat(a + 1, a + 1, p) <= flat) ++a;
  const std::size_t b = a + (flat - pair_flat(a, a, p));
  return {a, b, flat};
}

inline PairIndex make_pair_index(std::size_t a, std::size_t b, std::size_t p) {
  if (a > b) {
    const std::size_t t = a;
    a = b;
    b = t;
  }
  return {a, b, pair_flat(a, b, p)};
}

}  // namespace sprinter
