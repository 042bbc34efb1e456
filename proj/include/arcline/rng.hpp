// Self-contained counter-seeded PRNG. std::mt19937 + distributions are
// avoided on purpose: sweep outputs must be bitwise reproducible across
// compilers and thread counts, so both the generator and the gaussian
// sampler are pinned here.

#ifndef ARCLINE_RNG_HPP
#define ARCLINE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace arcline {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// xoshiro256** with a splitmix64-expanded seed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : s_) word = splitmix64(sm);
    has_spare_ = false;
    spare_ = 0.0;
  }

  /// Independent stream for one trial of one sweep; hashing the indices
  /// into the seed keeps parallel trial order irrelevant.
  static Rng stream(std::uint64_t master_seed, std::uint64_t sweep_index, std::uint64_t trial_index) {
    std::uint64_t sm = master_seed;
    splitmix64(sm);
    sm ^= 0xA0761D6478BD642FULL * (sweep_index + 1);
    splitmix64(sm);
    sm ^= 0xE7037ED1A0B428DBULL * (trial_index + 1);
    return Rng(splitmix64(sm));
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Marsaglia polar, one spare cached.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, q;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      q = u * u + v * v;
    } while (q >= 1.0 || q == 0.0);
    const double f = std::sqrt(-2.0 * std::log(q) / q);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
  }

  double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  bool has_spare_;
  double spare_;
};

}  // namespace arcline

#endif  // ARCLINE_RNG_HPP
