#pragma once

// Protocol parameter optimization.
//
// For each candidate signal intensity mu the planner derives the repetition
// count needed for the decoding error target, then the smallest number of
// mode pairs meeting the detection bias target, and keeps the mu that
// minimizes the number of pairs (ties go to the smaller mu).

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covert/reliability.hpp"
#include "covert/security.hpp"

namespace covert {

/// Logarithmic search grid over mu, optionally followed by a golden-section
/// refinement between the neighbours of the best grid point.
struct MuGrid {
  double lo = 1e-4;
  double hi = 1.0;
  std::size_t points = 400;
  bool refine = true;

  std::vector<double> values() const;
};

struct PlanRequest {
  std::uint64_t b = 0;  ///< message bits
  CovertnessBudget epsilon;
  double target_error = 0.01;
  ChannelModel channel;
  double rep_rate_hz = 0.0;  ///< time bins per second
  MuGrid mu_grid;
  std::uint64_t pair_ceiling = kDefaultPairCeiling;

  /// Throws std::invalid_argument on any out-of-range field.
  void validate() const;
};

struct ProtocolParams {
  std::uint64_t b = 0;
  std::uint64_t d = 0;  ///< planned covert signals, k * b
  std::uint64_t k = 0;  ///< repetitions per bit
  double q = 0.0;       ///< per-pair send probability, d / n_pairs
  std::uint64_t n_pairs = 1;
  double mu = 0.0;
  double predicted_epsilon = 0.0;
  double predicted_error = 0.0;
  double running_time_s = 0.0;  ///< bins_total / rep_rate

  ChannelModel channel;
  double rep_rate_hz = 0.0;
  double p_correct = 0.0;
  double p_wrong = 0.0;
  double bit_error = 0.0;
  double divergence = 0.0;  ///< per-mode D in nats

  std::uint64_t bins_total() const noexcept { return kBinsPerMode * n_pairs; }
  ClickProbabilities clicks() const noexcept { return {p_correct, p_wrong}; }
};

struct GridEvaluation {
  double mu = 0.0;
  std::optional<ProtocolParams> params;  ///< empty when infeasible
  std::string reason;                    ///< why the point is infeasible
};

struct PlanResult {
  ProtocolParams params;
  std::vector<GridEvaluation> grid;      ///< one entry per grid value, in order
  std::vector<GridEvaluation> refinement;
};

/// Full parameter set for a fixed mu. Throws InfeasibleError when either
/// target cannot be met.
ProtocolParams plan_for_mu(const PlanRequest& req, double mu);

/// Throws InfeasibleError when no grid point meets both targets.
PlanResult plan(const PlanRequest& req, unsigned threads = 0);

struct ValidationCheck {
  std::string name;
  double value = 0.0;
  double limit = 0.0;
  double margin = 0.0;  ///< limit - value for upper limits; positive means slack
  bool passed = false;
};

struct ValidationReport {
  std::vector<ValidationCheck> checks;
  bool passed() const noexcept;
};

/// Recomputes the bias bound and the message error from scratch and checks
/// them, plus the internal bookkeeping, against the request.
ValidationReport validate_plan(const ProtocolParams& p, const PlanRequest& req);

struct NoiseLevel {
  double alice = 0.0;
  double bob = 0.0;
};

struct NoiseSweepPoint {
  NoiseLevel noise;
  std::optional<ProtocolParams> params;
  std::string reason;
};

/// Plans the same request at several noise levels.
std::vector<NoiseSweepPoint> sweep_noise(const PlanRequest& base,
                                         std::span<const NoiseLevel> levels,
                                         unsigned threads = 0);

}  // namespace covert
