#ifndef L2T_RNG_HPP_
#define L2T_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <string_view>

namespace l2t {

// splitmix64: cheap, well-mixed 64-bit scrambler used for seed derivation
// and content hashing. Fixed algorithm so streams are stable across
// platforms and standard-library versions.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t seed, std::uint64_t value) {
  return splitmix64(seed ^ splitmix64(value));
}

// FNV-1a over bytes, then scrambled. Stable content hash for text.
inline std::uint64_t hash_text(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

// Deterministic RNG with hand-rolled distributions. std::normal_distribution
// and friends are implementation-defined, which would break bit-identical
// replay across standard libraries; everything here is pinned.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed)) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_ + 0x9e3779b97f4a7c15ULL);
    return state_;
  }

  // uniform in [0, 1)
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // uniform in [lo, hi)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // uniform integer in [0, n)
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  // standard normal via Box-Muller
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  Rng fork(std::uint64_t stream) const {
    return Rng(hash_combine(state_, stream));
  }

 private:
  std::uint64_t state_;
};

}  // namespace l2t

#endif  // L2T_RNG_HPP_
