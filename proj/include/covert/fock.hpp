#pragma once

// Photon-number statistics for Fock-diagonal states.
//
// Every state in the covert channel model (thermal noise, phase-randomized
// coherent pulses, their convolution and the per-mode mixture) is diagonal in
// the Fock basis, so a truncated probability mass function is an exact
// representation and the quantum relative entropy reduces to the classical
// Kullback-Leibler divergence. All divergences are in nats.

#include <cstddef>
#include <span>
#include <vector>

namespace covert {

inline constexpr double kDefaultTruncTol = 1e-15;
/// Far tighter cut for divergence work: terms rho_s(n)^2 / rho(n) just past
/// a 1e-15 cut still carry ~1e-7 of the total at small noise.
inline constexpr double kDivergenceTruncTol = 1e-200;

/// Mean photon number of a thermal (Bose-Einstein) state.
struct ThermalMean {
  double n_bar = 0.0;

  ThermalMean() = default;
  explicit ThermalMean(double value);
};

/// Mean photon number of a phase-randomized coherent state.
struct CoherentMean {
  double mu = 0.0;

  CoherentMean() = default;
  explicit CoherentMean(double value);
};

/// Truncated photon-number distribution: pmf over n = 0..n_max plus the
/// probability mass not represented by the array.
class FockDistribution {
 public:
  /// Throws std::invalid_argument unless every entry is in [0, 1], the
  /// tail is in [0, 1], and sum(pmf) + tail_mass is 1 within 1e-12.
  FockDistribution(std::vector<double> pmf, double tail_mass);

  static FockDistribution vacuum();

  std::span<const double> pmf() const noexcept { return pmf_; }
  std::size_t n_max() const noexcept { return pmf_.size() - 1; }
  std::size_t size() const noexcept { return pmf_.size(); }
  double tail_mass() const noexcept { return tail_mass_; }

  /// Probability of n photons; zero beyond n_max.
  double operator[](std::size_t n) const noexcept {
    return n < pmf_.size() ? pmf_[n] : 0.0;
  }

  double mean() const noexcept;

 private:
  std::vector<double> pmf_;
  double tail_mass_;
};

/// Q(n) = n_bar^n / (1 + n_bar)^(n+1), cut at the smallest n_max whose
/// geometric tail (n_bar / (1 + n_bar))^(n_max + 1) is <= trunc_tol.
FockDistribution thermal_pmf(ThermalMean n_bar, double trunc_tol = kDefaultTruncTol);

/// Poisson pmf cut at the smallest n_max whose upper tail is <= trunc_tol.
FockDistribution poisson_pmf(CoherentMean mu, double trunc_tol = kDefaultTruncTol);

/// Distribution of the sum of two independent photon numbers. The result's
/// tail mass is ta + tb - ta*tb, bounded by the sum of the input tails.
FockDistribution convolve(const FockDistribution& a, const FockDistribution& b);

/// q * rho_s + (1 - q) * rho over the union support. q = 0 and q = 1 return
/// the respective input unchanged.
FockDistribution mix(const FockDistribution& rho, const FockDistribution& rho_s, double q);

/// A divergence over the represented support together with a bound on the
/// contribution of the unrepresented tails.
struct Divergence {
  double nats = 0.0;
  double tail_bound = 0.0;
};

/// D(rho || sigma) = sum rho(n) ln(rho(n) / sigma(n)).
///
/// Throws InfiniteDivergenceError when rho(n) > 0 where sigma(n) == 0.
/// tail_bound is the lumped-tail term |t_rho ln(t_rho / t_sigma)|, infinite
/// when rho has tail mass and sigma has none.
Divergence relative_entropy(const FockDistribution& rho, const FockDistribution& sigma);

/// D(rho || (1 - q) rho + q rho_s) without forming sigma. With
/// y(n) = q (rho_s(n) / rho(n) - 1) the first-order terms sum to zero over
/// the whole space, so the divergence is summed as rho(n) (y - log1p(y)).
/// Every term is non-negative and second order in q, which keeps full
/// relative precision for q ~ 1e-8 where D ~ 1e-17. tail_bound covers the
/// mass of either pmf beyond the support of rho.
Divergence relative_entropy_mixture(const FockDistribution& rho,
                                    const FockDistribution& rho_s, double q);

}  // namespace covert
