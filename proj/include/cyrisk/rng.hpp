#pragma once

#include <cstdint>
#include <random>

namespace cyrisk {

// splitmix64 step; used to derive decorrelated sub-stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seedable generator with portable sampling. The mt19937_64 sequence is
// fixed by the standard; the helpers below avoid std::uniform_*
// distributions, whose outputs differ between standard library
// implementations, so a seed reproduces bit-identical streams everywhere.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // Unbiased integer in [0, n); masked rejection sampling.
  std::uint64_t below(std::uint64_t n) {
    if (n <= 1) return 0;
    std::uint64_t mask = ~std::uint64_t{0} >> __builtin_clzll(n - 1 | 1);
    for (;;) {
      std::uint64_t v = next() & mask;
      if (v < n) return v;
    }
  }

  // Inclusive range [lo, hi].
  int int_in(int lo, int hi) {
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Uniform double in [0, 1) with 53 random bits.
  double real01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool chance(double p) { return real01() < p; }

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    return splitmix64(s);
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace cyrisk
