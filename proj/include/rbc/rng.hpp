// Seedable random source with a fixed sampling algorithm, so draws do not
// depend on which standard library implements std::normal_distribution.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace rbc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for one (trial, stream) pair; independent of scheduling order.
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t stream = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ trial) ^ (stream * 0x632be59bd9b4e019ULL));
}

/// mt19937_64 with uniforms from the top 53 bits and Box-Muller normals
/// (cosine branch only, nothing cached between calls).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  double lognormal(double mu, double sigma) { return std::exp(mu + sigma * normal()); }

  std::uint64_t next() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace rbc
