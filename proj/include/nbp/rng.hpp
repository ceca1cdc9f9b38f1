#pragma once

#include <cstdint>
#include <random>

namespace nbp {

/// splitmix64 step; used as the documented seed-splitting function.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Stream `id` derived from a master seed. Derivation is fixed so that
/// replications and pipeline stages get independent, reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t id) {
  std::uint64_t s = master;
  std::uint64_t out = splitmix64(s);
  s = master ^ (0xD1B54A32D192ED03ULL * (id + 1));
  out ^= splitmix64(s);
  return out;
}

/// Deterministic RNG. All draws go through explicit mappings of the raw
/// mt19937_64 output so results are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform draw in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform draw in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * unit(); }

  /// Uniform integer in [0, bound) by rejection; bound > 0.
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % bound;
  }

  bool coin() { return (gen_() & 1u) != 0; }

  std::uint64_t raw() { return gen_(); }

 private:
  std::mt19937_64 gen_;
};

}  // namespace nbp
