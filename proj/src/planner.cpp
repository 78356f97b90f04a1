#include "covert/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "covert/error.hpp"
#include "covert/parallel.hpp"

namespace covert {
namespace {

constexpr int kRefineIterations = 40;

GridEvaluation evaluate(const PlanRequest& req, double mu) {
  GridEvaluation ev;
  ev.mu = mu;
  try {
    ev.params = plan_for_mu(req, mu);
  } catch (const InfeasibleError& e) {
    ev.reason = e.what();
  }
  return ev;
}

// Strictly better: fewer pairs, or equal pairs at a smaller mu.
bool better(const GridEvaluation& a, const GridEvaluation& b) {
  if (!a.params) return false;
  if (!b.params) return true;
  if (a.params->n_pairs != b.params->n_pairs) return a.params->n_pairs < b.params->n_pairs;
  return a.mu < b.mu;
}

double objective(const GridEvaluation& ev) {
  return ev.params ? static_cast<double>(ev.params->n_pairs)
                   : std::numeric_limits<double>::infinity();
}

}  // namespace

std::vector<double> MuGrid::values() const {
  if (!(lo > 0.0 && hi >= lo) || points == 0) {
    throw std::invalid_argument("mu grid needs 0 < lo <= hi and at least one point");
  }
  std::vector<double> out(points);
  if (points == 1) {
    out[0] = lo;
    return out;
  }
  const double a = std::log(lo);
  const double step = (std::log(hi) - a) / static_cast<double>(points - 1);
  for (std::size_t i = 0; i < points; ++i) {
    out[i] = std::exp(a + step * static_cast<double>(i));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

void PlanRequest::validate() const {
  if (b < 1) throw std::invalid_argument("message must have at least one bit");
  if (!(epsilon.epsilon > 0.0 && epsilon.epsilon < 0.5)) {
    throw std::invalid_argument("detection bias target must lie in (0, 0.5)");
  }
  if (!(target_error > 0.0 && target_error < 1.0)) {
    throw std::invalid_argument("decoding error target must lie in (0, 1)");
  }
  if (!(rep_rate_hz > 0.0) || !std::isfinite(rep_rate_hz)) {
    throw std::invalid_argument("repetition rate must be positive");
  }
  (void)mu_grid.values();
}

ProtocolParams plan_for_mu(const PlanRequest& req, double mu) {
  ProtocolParams p;
  p.b = req.b;
  p.mu = mu;
  p.channel = req.channel;
  p.rep_rate_hz = req.rep_rate_hz;

  const ClickProbabilities cp = click_probs(CoherentMean(mu), req.channel);
  if (cp.p_click() > 1.0) {
    throw InfeasibleError("p_C + p_W exceeds 1, outside the repetition-code model");
  }
  p.p_correct = cp.p_correct;
  p.p_wrong = cp.p_wrong;
  p.k = min_repetitions(req.target_error, req.b, cp);
  p.d = p.k * req.b;
  p.bit_error = bit_error_prob(p.k, cp);
  p.predicted_error = message_error_prob(p.bit_error, req.b);

  const ModePair pairs = min_pairs_for_budget(req.epsilon, p.d, CoherentMean(mu),
                                              req.channel.noise_alice, req.pair_ceiling);
  p.n_pairs = pairs.n_pairs;
  p.q = static_cast<double>(p.d) / static_cast<double>(p.n_pairs);
  const ModeStates states(CoherentMean(mu), req.channel.noise_alice);
  p.divergence = states.divergence(p.q).nats;
  p.predicted_epsilon = detection_bias_bound(p.n_pairs, p.divergence);
  p.running_time_s = static_cast<double>(p.bins_total()) / req.rep_rate_hz;
  return p;
}

PlanResult plan(const PlanRequest& req, unsigned threads) {
  req.validate();
  const std::vector<double> mus = req.mu_grid.values();

  PlanResult result;
  result.grid.resize(mus.size());
  parallel_for(
      mus.size(), [&](std::size_t i) { result.grid[i] = evaluate(req, mus[i]); }, threads);

  std::size_t best = mus.size();
  for (std::size_t i = 0; i < mus.size(); ++i) {
    if (best == mus.size() ? result.grid[i].params.has_value()
                           : better(result.grid[i], result.grid[best])) {
      best = i;
    }
  }
  if (best == mus.size()) {
    // Report each distinct binding constraint with how many points it stopped.
    std::map<std::string, std::size_t> reasons;
    for (const auto& ev : result.grid) ++reasons[ev.reason];
    std::string why = "no mu in the grid meets both targets:";
    for (const auto& [reason, count] : reasons) {
      why += " [" + reason + "] at " + std::to_string(count) + " point(s);";
    }
    throw InfeasibleError(why);
  }
  GridEvaluation champion = result.grid[best];

  if (req.mu_grid.refine && mus.size() > 2) {
    // Golden-section search in log(mu) between the neighbours of the best
    // grid point. The objective is integer-valued, so only the best point
    // ever evaluated is kept.
    double a = std::log(mus[best == 0 ? 0 : best - 1]);
    double b = std::log(mus[std::min(best + 1, mus.size() - 1)]);
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    auto probe = [&](double x) {
      GridEvaluation ev = evaluate(req, std::exp(x));
      result.refinement.push_back(ev);
      if (better(ev, champion)) champion = ev;
      return objective(ev);
    };
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = probe(c);
    double fd = probe(d);
    for (int it = 0; it < kRefineIterations && (b - a) > 1e-9; ++it) {
      if (fc <= fd) {
        b = d;
        d = c;
        fd = fc;
        c = b - inv_phi * (b - a);
        fc = probe(c);
      } else {
        a = c;
        c = d;
        fc = fd;
        d = a + inv_phi * (b - a);
        fd = probe(d);
      }
    }
  }
  result.params = *champion.params;
  return result;
}

bool ValidationReport::passed() const noexcept {
  return std::all_of(checks.begin(), checks.end(),
                     [](const ValidationCheck& c) { return c.passed; });
}

ValidationReport validate_plan(const ProtocolParams& p, const PlanRequest& req) {
  ValidationReport report;
  auto upper = [&](std::string name, double value, double limit) {
    report.checks.push_back({std::move(name), value, limit, limit - value, value <= limit});
  };
  auto exact = [&](std::string name, double value, double expected, double rel_tol) {
    const double diff = std::fabs(value - expected);
    const double tol = rel_tol * std::max(std::fabs(expected), 1.0);
    report.checks.push_back({std::move(name), value, expected, tol - diff, diff <= tol});
  };

  const bool shape_ok = p.n_pairs >= 1 && p.b == req.b && p.k >= 1;
  report.checks.push_back({"structure", shape_ok ? 1.0 : 0.0, 1.0, 0.0, shape_ok});
  if (!shape_ok) return report;

  const ModeStates states(CoherentMean(p.mu), req.channel.noise_alice);
  upper("detection_bias", states.bias_bound(p.d, p.n_pairs), req.epsilon.epsilon);

  const ClickProbabilities cp = click_probs(CoherentMean(p.mu), req.channel);
  upper("decoding_error", message_error_prob(bit_error_prob(p.k, cp), p.b), req.target_error);

  exact("signals_equal_k_times_b", static_cast<double>(p.d),
        static_cast<double>(p.k) * static_cast<double>(p.b), 0.0);
  const double q = static_cast<double>(p.d) / static_cast<double>(p.n_pairs);
  upper("send_probability", q, 1.0);
  exact("send_probability_consistent", p.q, q, 1e-12);
  exact("running_time", p.running_time_s,
        static_cast<double>(p.bins_total()) / req.rep_rate_hz, 1e-12);
  return report;
}

std::vector<NoiseSweepPoint> sweep_noise(const PlanRequest& base,
                                         std::span<const NoiseLevel> levels,
                                         unsigned threads) {
  std::vector<NoiseSweepPoint> out(levels.size());
  for (std::size_t i = 0; i < levels.size(); ++i) {
    out[i].noise = levels[i];
    PlanRequest req = base;
    req.channel = ChannelModel(base.channel.tau, ThermalMean(levels[i].alice),
                               ThermalMean(levels[i].bob));
    try {
      out[i].params = plan(req, threads).params;
    } catch (const InfeasibleError& e) {
      out[i].reason = e.what();
    }
  }
  return out;
}

}  // namespace covert
