#include "covert/security.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "covert/error.hpp"

namespace covert {

CovertnessBudget::CovertnessBudget(double value) : epsilon(value) {
  if (!(value > 0.0 && value < 0.5)) {
    throw std::invalid_argument("detection bias target must lie in (0, 0.5)");
  }
}

double detection_bias_bound(std::uint64_t n_pairs, double d_per_mode) {
  if (n_pairs < 1) {
    throw std::invalid_argument("need at least one mode pair");
  }
  if (!(d_per_mode >= 0.0)) {
    throw std::invalid_argument("relative entropy must be >= 0");
  }
  return std::sqrt(static_cast<double>(n_pairs) * d_per_mode / 8.0);
}

ModeStates::ModeStates(CoherentMean mu, ThermalMean noise, double trunc_tol)
    : rho_(thermal_pmf(noise, trunc_tol)),
      rho_s_(convolve(poisson_pmf(mu, trunc_tol), rho_)) {}

Divergence ModeStates::divergence(double q) const {
  return relative_entropy_mixture(rho_, rho_s_, q);
}

double ModeStates::bias_bound(std::uint64_t d_signals, std::uint64_t n_pairs) const {
  if (d_signals > n_pairs) return std::numeric_limits<double>::infinity();
  const double q = static_cast<double>(d_signals) / static_cast<double>(n_pairs);
  return detection_bias_bound(n_pairs, divergence(q).nats);
}

Divergence per_mode_divergence(CoherentMean mu, ThermalMean noise, double q) {
  return ModeStates(mu, noise).divergence(q);
}

ModePair min_pairs_for_budget(CovertnessBudget budget, std::uint64_t d_signals,
                              CoherentMean mu, ThermalMean noise, std::uint64_t ceiling) {
  if (d_signals == 0) return ModePair{1};
  const double eps = budget.epsilon;
  const ModeStates states(mu, noise);
  auto meets = [&](std::uint64_t n) { return states.bias_bound(d_signals, n) <= eps; };

  std::uint64_t lo = d_signals;
  if (meets(lo)) return ModePair{lo};
  if (lo > ceiling) {
    throw InfeasibleError("signal count exceeds the mode ceiling");
  }
  std::uint64_t hi = lo;
  while (!meets(hi)) {
    if (hi >= ceiling) {
      throw InfeasibleError("no N up to " + std::to_string(ceiling) +
                            " meets detection bias " + std::to_string(eps));
    }
    lo = hi;
    hi = hi > ceiling / 2 ? ceiling : 2 * hi;
  }
  // Invariant: meets(hi) and !meets(lo).
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (meets(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return ModePair{hi};
}

}  // namespace covert
