#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace gapcast {

/* splitmix64 finalizer. Used to hash (seed, stream ids) into independent
   engine seeds so that draw order never depends on loop scheduling. */
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a,
                                 std::uint64_t b = 0, std::uint64_t c = 0) {
  std::uint64_t h = mix64(base);
  h = mix64(h ^ mix64(a + 0x100000001b3ULL));
  h = mix64(h ^ mix64(b + 0xcbf29ce484222325ULL));
  h = mix64(h ^ mix64(c + 0x9e3779b97f4a7c15ULL));
  return h;
}

/* Deterministic random source. std::mt19937_64 output is pinned by the
   standard; the distributions below are hand-rolled because the standard
   library distribution objects are implementation-defined and would break
   cross-platform reproducibility. */
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /* Uniform on [0, 1), 53-bit resolution. */
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /* Uniform integer on [0, n). Rejection sampling, unbiased. */
  std::uint64_t uniform_int(std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
      x = engine_();
    } while (x >= limit);
    return x % n;
  }

  /* Standard normal via Box-Muller; the paired draw is cached. */
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1], keeps log() finite
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    have_spare_ = true;
    return radius * std::cos(angle);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  std::mt19937_64 engine_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace gapcast
