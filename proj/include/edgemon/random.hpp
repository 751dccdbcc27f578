#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace edgemon {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a run seed and a tuple of indices,
/// so per-task randomness does not depend on scheduling order.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (auto k : keys) h = splitmix64(h ^ splitmix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

/// Stream tags used with derive_seed.
enum class Stream : std::uint64_t {
  kDyadSample = 1,
  kDissimilarity = 2,
  kThreshold = 3,
  kGenerator = 4,
  kSchedule = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream) {
  return Rng(derive_seed(seed, {static_cast<std::uint64_t>(stream)}));
}

/// Uniform double in [0, 1) from the top 53 bits of one engine output.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniforms in [0, 1) with 32-bit resolution, two per engine output. Used
/// by the snapshot generator, which draws one per visited dyad.
class SplitUniform {
 public:
  explicit SplitUniform(Rng& rng) : rng_(rng) {}

  double operator()() {
    if (spare_) {
      spare_ = false;
      return static_cast<double>(low_) * 0x1.0p-32;
    }
    const std::uint64_t x = rng_();
    low_ = static_cast<std::uint32_t>(x);
    spare_ = true;
    return static_cast<double>(x >> 32) * 0x1.0p-32;
  }

 private:
  Rng& rng_;
  std::uint32_t low_ = 0;
  bool spare_ = false;
};

/// Failures before the first success of a Bernoulli(q) sequence, given
/// log_miss = log(1 - q) < 0. Inverse-CDF form, one engine output per call.
inline std::uint64_t geometric_gap(Rng& rng, double log_miss) {
  const double g = std::floor(std::log1p(-uniform01(rng)) / log_miss);
  return g >= 0x1.0p63 ? std::uint64_t{1} << 63 : static_cast<std::uint64_t>(g);
}

}  // namespace edgemon
