#pragma once

// Monte-Carlo simulation of the covert link (Bob's side) and of an
// eavesdropper monitoring the channel at Alice's output.
//
// Both simulations are sparse: transmission costs O(d') and monitoring or
// distinguishing costs O(1) per interval or trial, never O(N), because the
// aggregate counts are drawn directly from their binomial laws.

#include <cstdint>
#include <optional>
#include <vector>

#include "covert/codec.hpp"
#include "covert/planner.hpp"

namespace covert {

struct TranscriptStats {
  std::uint64_t d_prime = 0;
  std::uint64_t signal_bin_clicks = 0;  ///< clicks in the bin carrying the pulse
  std::uint64_t wrong_bin_clicks = 0;   ///< clicks in the other bin of the pair
  std::uint64_t double_clicks = 0;
  std::uint64_t clicked_pulses = 0;     ///< pairs with a click in either bin
  std::uint64_t votes = 0;              ///< single clicks on message positions
  std::uint64_t wrong_votes = 0;
  std::uint64_t bit_errors = 0;

  double signal_click_freq = 0.0;  ///< estimates p_C
  double noise_click_freq = 0.0;   ///< per-bin noise click rate, estimates p_W
  double pulse_click_freq = 0.0;   ///< click in either bin per pulse
  double clicks_per_bit = 0.0;
  double error_rate = 0.0;         ///< wrong_votes / votes
  double bit_error_rate = 0.0;

  bool operator==(const TranscriptStats&) const = default;
};

struct Transcript {
  ProtocolParams protocol;
  PositionPlan plan;
  std::vector<ClickOutcome> outcomes;  ///< one per plan position
  DecodeResult decoded;
  Bits truth;                          ///< message bits carried by the plan
  TranscriptStats stats;
};

/// Message bits recovered from the plan's bit assignment.
Bits message_bits(const PositionPlan& plan);

/// Recomputes the transcript statistics from the outcomes alone.
TranscriptStats compute_stats(const PositionPlan& plan, std::span<const ClickOutcome> outcomes,
                              const DecodeResult& decoded);

/// Draws, per signal position, an independent click in the signal bin with
/// probability p_C and in the other bin with probability p_W, then decodes by
/// majority vote (double clicks cast no vote).
Transcript simulate_transmission(const ProtocolParams& p, const PositionPlan& plan,
                                 std::uint64_t seed);

struct MonitorTrace {
  double interval_s = 0.0;
  bool communicating = false;
  std::uint64_t bins_per_interval = 0;
  std::vector<std::uint64_t> counts;
};

/// Per-interval click counts seen by an eavesdropper with a unit-efficiency
/// threshold detector at Alice's output. Noise bins click with probability
/// n_E / (1 + n_E); a bin carrying a pulse clicks with 1 - exp(-mu) / (1 + n_E).
/// eve_noise defaults to the noise at Alice's output.
MonitorTrace simulate_monitoring(const ProtocolParams& p, bool communicating, double duration_s,
                                 double interval_s, std::uint64_t seed,
                                 std::optional<double> eve_noise = std::nullopt);

struct DistinguisherOptions {
  std::optional<double> eve_noise;  ///< defaults to the noise at Alice's output
  /// Budget the empirical bias is checked against; defaults to the bound
  /// recomputed for the given parameters.
  std::optional<double> reference_epsilon;
  unsigned threads = 0;
};

struct DetectorEstimate {
  double p_false_alarm = 0.0;
  double p_missed = 0.0;
  double p_error = 0.5;
  double std_error = 0.0;
  std::uint64_t h0_trials = 0;
  std::uint64_t h1_trials = 0;
};

struct DistinguisherResult {
  std::uint64_t trials = 0;
  DetectorEstimate threshold_test;  ///< total-count threshold, tuned on held-out trials
  DetectorEstimate llr_test;        ///< per-bin likelihood ratio over the whole record
  double empirical_pe = 0.5;
  double std_error = 0.0;
  double ci_low = 0.0;   ///< 95% interval on empirical_pe
  double ci_high = 0.0;
  double empirical_bias = 0.0;
  double bound_epsilon = 0.0;   ///< bound recomputed for the simulated parameters
  double budget_epsilon = 0.0;  ///< what the bias is checked against
  bool passed = false;          ///< empirical_bias <= budget + 3 standard errors
};

/// Monte-Carlo estimate of the eavesdropper's best error probability within
/// two detectors. Trials alternate between the two hypotheses; trial t uses
/// an engine seeded by derive_seed(seed, stream, t), so threaded and serial
/// runs agree exactly. Throws std::invalid_argument for fewer than 100 trials.
DistinguisherResult run_distinguisher(const ProtocolParams& p, std::uint64_t trials,
                                      std::uint64_t seed, const DistinguisherOptions& opts = {});

/// Shrinks n_pairs and d by a common factor, keeping q and mu, and recomputes
/// every derived quantity (the bias bound scales with sqrt(factor)).
ProtocolParams rescale_plan(const ProtocolParams& p, double factor);

/// Returns a copy with mu scaled and every mu-dependent quantity recomputed
/// while n_pairs, d and k stay fixed.
ProtocolParams with_intensity(const ProtocolParams& p, double mu);

}  // namespace covert
