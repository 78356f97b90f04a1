#pragma once

// Seeded randomness for reproducible Monte-Carlo runs.
//
// Every independent unit of work (a trial, an interval, a run) draws from its
// own engine seeded by derive_seed(master, stream, index), so results do not
// depend on the order or the thread in which units execute.

#include <cstdint>
#include <random>

namespace covert {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based child seed.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index = 0) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Engine& eng, double p) { return uniform01(eng) < p; }

/// Uniform integer in [0, bound), Lemire's multiply-and-reject.
std::uint64_t uniform_below(Engine& eng, std::uint64_t bound);

/// Binomial(n, p) draw. Uses a Poisson(n p) draw when n >= 1e7 and
/// p <= 1e-4; the total-variation error of that substitution is at most p
/// (Le Cam), i.e. <= 1e-4.
std::uint64_t sample_binomial(Engine& eng, std::uint64_t n, double p);

}  // namespace covert
