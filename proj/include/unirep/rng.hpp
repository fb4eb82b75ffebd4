#ifndef UNIREP_RNG_HPP_
#define UNIREP_RNG_HPP_

#include <cmath>
#include <cstdint>

namespace unirep {

// Counter-style RNG built on splitmix64. Every consumer derives its own
// stream from (seed, purpose tags), so resumed runs regenerate identical
// draws from plain integers and no generator state ever needs saving.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be >= 1.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  bool coin() { return (next_u64() & 1ull) != 0; }

  /// Standard normal via Box-Muller (pairs cached).
  double gaussian() {
    if (has_cached_) {
      has_cached_ = false;
      return cached_;
    }
    double u1 = uniform();
    double u2 = uniform();
    // Guard log(0).
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    cached_ = r * std::sin(a);
    has_cached_ = true;
    return r * std::cos(a);
  }

private:
  std::uint64_t state_;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and up to three tags
/// (e.g. purpose id, domain id, step index).
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag0,
                                 std::uint64_t tag1 = 0, std::uint64_t tag2 = 0) {
  return mix_seed(mix_seed(mix_seed(base, tag0), tag1), tag2);
}

// Stream purpose tags for derive_seed.
namespace rng_tag {
constexpr std::uint64_t kWeightInit = 1;
constexpr std::uint64_t kDataSplit = 2;
constexpr std::uint64_t kShuffle = 3;
constexpr std::uint64_t kAugment = 4;
constexpr std::uint64_t kSynthProto = 5;
constexpr std::uint64_t kSynthNoise = 6;
constexpr std::uint64_t kClassPairing = 7;
}  // namespace rng_tag

}  // namespace unirep

#endif  // UNIREP_RNG_HPP_
