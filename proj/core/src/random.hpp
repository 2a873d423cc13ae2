#pragma once

#include <cstdint>
#include <random>

namespace singr::detail {

// std::mt19937_64 output is fixed by the standard; the distributions are not,
// so sampling is done by hand to keep datasets identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t r;
    do {
      r = engine_();
    } while (r >= limit);
    return r % n;
  }

 private:
  std::mt19937_64 engine_;
};

// Independent stream ids so that, for a given seed, model init and batch order
// do not depend on which label mode is trained.
inline constexpr std::uint64_t kStreamData = 0x5151'0000'0000'0001ull;
inline constexpr std::uint64_t kStreamSplit = 0x5151'0000'0000'0002ull;
inline constexpr std::uint64_t kStreamInit = 0x5151'0000'0000'0003ull;
inline constexpr std::uint64_t kStreamShuffle = 0x5151'0000'0000'0004ull;

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finalizer
  std::uint64_t z = seed + stream * 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace singr::detail
