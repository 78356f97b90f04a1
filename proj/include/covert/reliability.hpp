#pragma once

// Click statistics of the lossy, noisy channel and the decoding error of a
// k-fold repetition code under majority vote.
//
// Conventions shared with the codec and the simulator:
//   * an exact tie between correct and wrong clicks is a decoding error;
//   * a bit with no clicks at all is a decoding error;
//   * clicks in both bins of a pair are ignored (no vote).

#include <cstdint>

#include "covert/fock.hpp"

namespace covert {

/// Transmissivity (detector efficiency included) and thermal noise at both
/// ends of the link.
struct ChannelModel {
  double tau = 1.0;
  ThermalMean noise_alice;
  ThermalMean noise_bob;

  ChannelModel() = default;
  ChannelModel(double tau, ThermalMean noise_alice, ThermalMean noise_bob);
};

struct ClickProbabilities {
  double p_correct = 0.0;  ///< click in the bin carrying the signal
  double p_wrong = 0.0;    ///< click in the noise-only bin

  double p_click() const noexcept { return p_correct + p_wrong; }

  /// p_correct / (p_correct + p_wrong); throws std::domain_error when no
  /// click is possible.
  double p_good_given_click() const;
};

/// p_C = 1 - exp(-tau mu) / (1 + tau n_B),  p_W = 1 - 1 / (1 + tau n_B).
ClickProbabilities click_probs(CoherentMean mu, const ChannelModel& channel);

/// Probability that majority vote over k repetitions decodes a bit wrongly:
///
///   delta = sum_i C(k,i) (p_C + p_W)^i (1 - p_C - p_W)^(k-i)
///             * sum_{j <= floor(i/2)} C(i,j) p_g^j (1 - p_g)^(i-j)
///
/// The outer sum runs over a window around its mode that is cut once the
/// geometric remainder falls below 1e-17 of the total; the inner sum is
/// carried along by a recurrence in i, so the cost grows like sqrt(k).
double bit_error_prob(std::uint64_t k, const ClickProbabilities& cp);

/// 1 - (1 - delta)^b, evaluated as -expm1(b log1p(-delta)).
double message_error_prob(double delta, std::uint64_t b);

/// Smallest k with message_error_prob(bit_error_prob(k), b) <= target.
/// Throws InfeasibleError when p_g <= 1/2 or no click is possible.
std::uint64_t min_repetitions(double target_error, std::uint64_t b,
                              const ClickProbabilities& cp,
                              std::uint64_t max_k = 100'000'000);

}  // namespace covert
