#pragma once

// Detection-bias bound for the covert channel and its inversion.
//
// Convention: N counts time-bin pairs. Each pair is one mode in which Alice
// sends with probability q = d / N, and the total number of time bins is
// kBinsPerMode * N. Published bin counts are compared against bins_total().

#include <cstdint>

#include "covert/fock.hpp"

namespace covert {

inline constexpr std::uint64_t kBinsPerMode = 2;
inline constexpr std::uint64_t kDefaultPairCeiling = 10'000'000'000'000'000ULL;  // 1e16

/// Target detection bias, 0 < epsilon < 1/2.
struct CovertnessBudget {
  double epsilon = 0.0;

  CovertnessBudget() = default;
  explicit CovertnessBudget(double value);
};

struct ModePair {
  std::uint64_t n_pairs = 1;

  std::uint64_t bins_total() const noexcept { return kBinsPerMode * n_pairs; }
};

/// sqrt(n_pairs * d_per_mode / 8).
double detection_bias_bound(std::uint64_t n_pairs, double d_per_mode);

/// Noise state rho and signal state rho_s seen in one mode, both built from
/// Alice's output noise.
class ModeStates {
 public:
  ModeStates(CoherentMean mu, ThermalMean noise, double trunc_tol = kDivergenceTruncTol);

  const FockDistribution& noise() const noexcept { return rho_; }
  const FockDistribution& signal() const noexcept { return rho_s_; }

  /// Per-mode D(rho || (1 - q) rho + q rho_s) in nats.
  Divergence divergence(double q) const;

  /// Bound for d signals spread over n_pairs modes; +inf when d > n_pairs.
  double bias_bound(std::uint64_t d_signals, std::uint64_t n_pairs) const;

 private:
  FockDistribution rho_;
  FockDistribution rho_s_;
};

/// Per-mode relative entropy for send probability q.
Divergence per_mode_divergence(CoherentMean mu, ThermalMean noise, double q);

/// Smallest N with detection_bias_bound(N, D(q = d / N)) <= epsilon.
///
/// The bound is non-increasing in N (N * D(d / N) = d * D(q) / q and D is
/// convex in q with D(0) = 0), so an exponential bracket followed by an
/// integer bisection finds the exact minimum. d = 0 returns N = 1. Throws
/// InfeasibleError if no N up to `ceiling` meets the budget.
ModePair min_pairs_for_budget(CovertnessBudget budget, std::uint64_t d_signals,
                              CoherentMean mu, ThermalMean noise,
                              std::uint64_t ceiling = kDefaultPairCeiling);

}  // namespace covert
