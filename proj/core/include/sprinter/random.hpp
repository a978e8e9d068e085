#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace sprinter {

/// Deterministic random source. The engine is std::mt19937_64 (fully
/// specified by the standard); every derived distribution is implemented
/// here rather than taken from <random>, whose distributions differ between
/// standard libraries. Normals use Wichura's AS241 inverse CDF, Poisson
/// variates use inversion below mean 10 and Hoermann's PTRS above.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform();
  /// Uniform integer in [0, bound), unbiased.
  std::uint64_t uniform_int(std::uint64_t bound);
  double normal();
  double normal(double mean, double sd) { return mean + sd * normal(); }
  int bernoulli(double p) { return uniform() < p ? 1 : 0; }
  std::uint64_t poisson(double mean);
  /// Gamma(shape, 1) by Marsaglia-Tsang squeeze.
  double gamma(double shape);

  /// Independent child stream derived from this generator's seed lineage.
  static Rng derived(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Standard normal quantile function (AS241, ~1e-16 relative accuracy).
double normal_quantile(double p);

/// In-place Fisher-Yates shuffle driven by `rng`.
template <class T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng.uniform_int(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace sprinter
