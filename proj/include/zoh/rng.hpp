#pragma once

// Counter-based random number generation.
//
// Monte-Carlo estimates in this library must be reproducible independent of
// thread scheduling, so instead of stateful engines every variate is a pure
// function of (seed, stream, counter).  The block cipher is Philox4x32-10
// (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3"), which is
// the de-facto standard counter-based generator.

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>

namespace zoh {

namespace detail {

inline void philox_mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                           std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

}  // namespace detail

// One 10-round Philox4x32 block: 128-bit counter + 64-bit key -> 128 bits.
inline std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                               std::uint32_t k0, std::uint32_t k1) {
  constexpr std::uint32_t kMul0 = 0xD2511F53u;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    detail::philox_mulhilo(kMul0, ctr[0], hi0, lo0);
    detail::philox_mulhilo(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ k0, lo1, hi0 ^ ctr[3] ^ k1, lo0};
    k0 += kWeyl0;
    k1 += kWeyl1;
  }
  return ctr;
}

// SplitMix64 finalizer; used to derive independent sub-seeds from a master
// seed plus a tag, and to hash arbitrary 64-bit data.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  return splitmix64(seed ^ splitmix64(tag));
}

// Uniform double in [0, 1) from 64 bits (53-bit mantissa).
inline double u64_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// Stateless generator addressed by (seed; stream, counter).  Each address
// yields one Philox block = two N(0,1) variates via Box-Muller.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::array<std::uint32_t, 4> block(std::uint64_t stream, std::uint64_t counter) const {
    const std::array<std::uint32_t, 4> ctr = {
        static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32),
        static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return philox4x32(ctr, static_cast<std::uint32_t>(seed_),
                      static_cast<std::uint32_t>(seed_ >> 32));
  }

  // Two uniforms in [0,1) from one block.
  void uniform_pair(std::uint64_t stream, std::uint64_t counter, double& u0,
                    double& u1) const {
    const auto b = block(stream, counter);
    u0 = u64_to_unit((static_cast<std::uint64_t>(b[0]) << 32) | b[1]);
    u1 = u64_to_unit((static_cast<std::uint64_t>(b[2]) << 32) | b[3]);
  }

  // Two independent N(0,1) variates from one block.  Box-Muller keeps the
  // mapping counter -> variate deterministic (no rejection loop).
  void normal_pair(std::uint64_t stream, std::uint64_t counter, double& z0,
                   double& z1) const {
    double u0, u1;
    uniform_pair(stream, counter, u0, u1);
    // 1-u0 lies in (0,1], so the log is finite.
    const double r = std::sqrt(-2.0 * std::log1p(-u0));
    const double t = 6.283185307179586476925286766559 * u1;
    z0 = r * std::cos(t);
    z1 = r * std::sin(t);
  }

 private:
  std::uint64_t seed_;
};

// Position-sensitive hash of a vector of doubles (by bit pattern) plus a seed.
// Used by noise models that must be deterministic functions of the query
// point, so that concurrent or repeated queries agree.
inline std::uint64_t hash_doubles(const double* data, int n, std::uint64_t seed) {
  std::uint64_t h = splitmix64(seed ^ 0x517CC1B727220A95ull);
  for (int i = 0; i < n; ++i) {
    std::uint64_t bits;
    std::memcpy(&bits, &data[i], sizeof(bits));
    h = splitmix64(h ^ bits ^ (static_cast<std::uint64_t>(i) << 1));
  }
  return h;
}

}  // namespace zoh
