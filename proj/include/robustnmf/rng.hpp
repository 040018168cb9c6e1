#pragma once

#include <cstdint>
#include <random>

namespace robustnmf {

// splitmix64 finalizer; used to derive independent seeds for the different
// random roles (init, corruption, clustering, column reseeds) from one base
// seed without correlated streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace seed_tag {
inline constexpr std::uint64_t kFactorInit = 0x01;
inline constexpr std::uint64_t kColumnReseed = 0x02;
inline constexpr std::uint64_t kCorruption = 0x03;
inline constexpr std::uint64_t kKmeans = 0x04;
}  // namespace seed_tag

// mt19937_64 with hand-rolled draws. std::uniform_*_distribution output is
// implementation-defined, so the distributions are done here to keep results
// identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }

  // Uniform in [0, n). n must be > 0.
  std::uint64_t next_index(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace robustnmf
