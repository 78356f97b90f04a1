#include "covert/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "covert/parallel.hpp"
#include "covert/random.hpp"

namespace covert {
namespace {

constexpr std::uint64_t kStreamClicks = 0x636c6b;       // "clk"
constexpr std::uint64_t kStreamMonitorSig = 0x6d7367;   // "msg"
constexpr std::uint64_t kStreamMonitorNoise = 0x6d6e7a; // "mnz"
constexpr std::uint64_t kStreamMonitorPulse = 0x6d706c; // "mpl"
constexpr std::uint64_t kStreamTrial = 0x74726c;        // "trl"

struct EveModel {
  double p_noise = 0.0;   // click probability of a noise-only bin
  double p_signal = 0.0;  // click probability of a bin carrying a pulse
};

EveModel eve_model(const ProtocolParams& p, std::optional<double> eve_noise) {
  const double n = eve_noise.value_or(p.channel.noise_alice.n_bar);
  if (!(n >= 0.0)) throw std::invalid_argument("eavesdropper noise must be >= 0");
  EveModel m;
  m.p_noise = n / (1.0 + n);
  m.p_signal = -std::expm1(-p.mu - std::log1p(n));
  return m;
}

double safe_ratio(std::uint64_t num, std::uint64_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

DetectorEstimate score(std::uint64_t fa, std::uint64_t n0, std::uint64_t md, std::uint64_t n1) {
  DetectorEstimate e;
  e.h0_trials = n0;
  e.h1_trials = n1;
  e.p_false_alarm = safe_ratio(fa, n0);
  e.p_missed = safe_ratio(md, n1);
  e.p_error = 0.5 * (e.p_false_alarm + e.p_missed);
  const double var = (n0 ? e.p_false_alarm * (1.0 - e.p_false_alarm) / static_cast<double>(n0) : 0.0) +
                     (n1 ? e.p_missed * (1.0 - e.p_missed) / static_cast<double>(n1) : 0.0);
  // A rate of exactly 0 or 1 still carries about one trial of uncertainty.
  const double floor = 0.5 / static_cast<double>(std::max<std::uint64_t>(1, std::min(n0, n1)));
  e.std_error = std::max(0.5 * std::sqrt(var), floor);
  return e;
}

void refresh_derived(ProtocolParams& p) {
  const ModeStates states(CoherentMean(p.mu), p.channel.noise_alice);
  p.q = static_cast<double>(p.d) / static_cast<double>(p.n_pairs);
  p.divergence = states.divergence(p.q).nats;
  p.predicted_epsilon = detection_bias_bound(p.n_pairs, p.divergence);
  const ClickProbabilities cp = click_probs(CoherentMean(p.mu), p.channel);
  p.p_correct = cp.p_correct;
  p.p_wrong = cp.p_wrong;
  if (cp.p_click() <= 1.0) {
    p.bit_error = bit_error_prob(p.k, cp);
    p.predicted_error = message_error_prob(p.bit_error, p.b);
  } else {
    p.bit_error = std::numeric_limits<double>::quiet_NaN();
    p.predicted_error = std::numeric_limits<double>::quiet_NaN();
  }
  p.running_time_s = static_cast<double>(p.bins_total()) / p.rep_rate_hz;
}

}  // namespace

Bits message_bits(const PositionPlan& plan) {
  Bits bits(plan.b, 0);
  std::vector<bool> seen(plan.b, false);
  for (std::size_t i = 0; i < plan.positions.size(); ++i) {
    const auto bit = plan.bit_index[i];
    if (bit == kDummyBit || seen[bit]) continue;
    bits[bit] = plan.values[i];
    seen[bit] = true;
  }
  return bits;
}

TranscriptStats compute_stats(const PositionPlan& plan, std::span<const ClickOutcome> outcomes,
                              const DecodeResult& decoded) {
  if (outcomes.size() != plan.positions.size()) {
    throw std::invalid_argument("outcomes do not match the position plan");
  }
  TranscriptStats s;
  s.d_prime = plan.d_prime();
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const ClickOutcome o = outcomes[i];
    const bool zero = o == ClickOutcome::kZeroBin || o == ClickOutcome::kBoth;
    const bool one = o == ClickOutcome::kOneBin || o == ClickOutcome::kBoth;
    const bool signal_bin = plan.values[i] ? one : zero;
    const bool other_bin = plan.values[i] ? zero : one;
    s.signal_bin_clicks += signal_bin;
    s.wrong_bin_clicks += other_bin;
    s.double_clicks += o == ClickOutcome::kBoth;
    s.clicked_pulses += o != ClickOutcome::kNone;
    if (plan.bit_index[i] != kDummyBit && signal_bin != other_bin) {
      ++s.votes;
      s.wrong_votes += other_bin;
    }
  }
  s.bit_errors = count_bit_errors(decoded, message_bits(plan));
  s.signal_click_freq = safe_ratio(s.signal_bin_clicks, s.d_prime);
  s.noise_click_freq = safe_ratio(s.wrong_bin_clicks, s.d_prime);
  s.pulse_click_freq = safe_ratio(s.clicked_pulses, s.d_prime);
  s.clicks_per_bit = safe_ratio(s.votes, plan.b);
  s.error_rate = safe_ratio(s.wrong_votes, s.votes);
  s.bit_error_rate = safe_ratio(s.bit_errors, plan.b);
  return s;
}

Transcript simulate_transmission(const ProtocolParams& p, const PositionPlan& plan,
                                 std::uint64_t seed) {
  if (plan.b != p.b) {
    throw std::invalid_argument("position plan and protocol disagree on the message length");
  }
  Transcript t;
  t.protocol = p;
  t.plan = plan;
  t.outcomes.resize(plan.d_prime());
  Engine eng = make_engine(derive_seed(seed, kStreamClicks));
  for (std::size_t i = 0; i < t.outcomes.size(); ++i) {
    const bool signal = bernoulli(eng, p.p_correct);
    const bool other = bernoulli(eng, p.p_wrong);
    const bool zero = plan.values[i] ? other : signal;
    const bool one = plan.values[i] ? signal : other;
    t.outcomes[i] = zero && one ? ClickOutcome::kBoth
                    : zero      ? ClickOutcome::kZeroBin
                    : one       ? ClickOutcome::kOneBin
                                : ClickOutcome::kNone;
  }
  t.decoded = majority_decode(plan, t.outcomes);
  t.truth = message_bits(plan);
  t.stats = compute_stats(plan, t.outcomes, t.decoded);
  return t;
}

MonitorTrace simulate_monitoring(const ProtocolParams& p, bool communicating, double duration_s,
                                 double interval_s, std::uint64_t seed,
                                 std::optional<double> eve_noise) {
  if (!(interval_s > 0.0)) throw std::invalid_argument("monitoring interval must be positive");
  const double intervals = std::floor(duration_s / interval_s);
  if (!(intervals >= 10.0)) {
    throw std::invalid_argument("monitoring duration must cover at least 10 intervals");
  }
  const EveModel eve = eve_model(p, eve_noise);
  MonitorTrace trace;
  trace.interval_s = interval_s;
  trace.communicating = communicating;
  trace.bins_per_interval = static_cast<std::uint64_t>(std::llround(p.rep_rate_hz * interval_s));
  const std::uint64_t pairs = trace.bins_per_interval / kBinsPerMode;
  trace.counts.resize(static_cast<std::size_t>(intervals));
  for (std::size_t i = 0; i < trace.counts.size(); ++i) {
    Engine pulse_eng = make_engine(derive_seed(seed, kStreamMonitorPulse, i));
    Engine noise_eng = make_engine(derive_seed(seed, kStreamMonitorNoise, i));
    Engine sig_eng = make_engine(derive_seed(seed, kStreamMonitorSig, i));
    const std::uint64_t pulses = communicating ? sample_binomial(pulse_eng, pairs, p.q) : 0;
    trace.counts[i] = sample_binomial(noise_eng, trace.bins_per_interval - pulses, eve.p_noise) +
                      sample_binomial(sig_eng, pulses, eve.p_signal);
  }
  return trace;
}

DistinguisherResult run_distinguisher(const ProtocolParams& p, std::uint64_t trials,
                                      std::uint64_t seed, const DistinguisherOptions& opts) {
  if (trials < 100) throw std::invalid_argument("the distinguisher needs at least 100 trials");
  const EveModel eve = eve_model(p, opts.eve_noise);
  const std::uint64_t bins = p.bins_total();

  // Trial t tests hypothesis t % 2 (1 = communicating).
  std::vector<std::uint64_t> counts(trials);
  parallel_for(
      trials,
      [&](std::size_t t) {
        Engine eng = make_engine(derive_seed(seed, kStreamTrial, t));
        const std::uint64_t pulses = (t % 2) ? sample_binomial(eng, p.n_pairs, p.q) : 0;
        counts[t] = sample_binomial(eng, bins - pulses, eve.p_noise) +
                    sample_binomial(eng, pulses, eve.p_signal);
      },
      opts.threads);

  DistinguisherResult r;
  r.trials = trials;

  // (a) Count threshold: decide "communicating" when K > T. T is tuned on
  // trial pairs with even (t / 2) and scored on the rest.
  {
    std::vector<std::pair<std::uint64_t, int>> train;
    for (std::uint64_t t = 0; t < trials; ++t) {
      if ((t / 2) % 2 == 0) train.emplace_back(counts[t], static_cast<int>(t % 2));
    }
    std::sort(train.begin(), train.end());
    std::uint64_t n0 = 0, n1 = 0;
    for (const auto& [k, h] : train) (h ? n1 : n0)++;
    // Start with T below every sample: everything is flagged.
    std::uint64_t fa = n0, md = 0;
    double best_pe = 0.5 * (safe_ratio(fa, n0) + safe_ratio(md, n1));
    std::uint64_t best_threshold = 0;
    bool below_all = true;
    for (std::size_t i = 0; i < train.size();) {
      const std::uint64_t value = train[i].first;
      for (; i < train.size() && train[i].first == value; ++i) {
        if (train[i].second) ++md; else --fa;
      }
      const double pe = 0.5 * (safe_ratio(fa, n0) + safe_ratio(md, n1));
      if (pe < best_pe) {
        best_pe = pe;
        best_threshold = value;
        below_all = false;
      }
    }
    std::uint64_t tfa = 0, tmd = 0, t0 = 0, t1 = 0;
    for (std::uint64_t t = 0; t < trials; ++t) {
      if ((t / 2) % 2 == 0) continue;
      const bool flagged = below_all || counts[t] > best_threshold;
      if (t % 2) {
        ++t1;
        tmd += !flagged;
      } else {
        ++t0;
        tfa += flagged;
      }
    }
    r.threshold_test = score(tfa, t0, tmd, t1);
  }

  // (b) Likelihood ratio of the per-bin product model: each bin clicks with
  // p0 without communication and p1 = p0 + (q / 2)(p_signal - p0) with it.
  {
    const double p0 = eve.p_noise;
    const double excess = 0.5 * p.q * (eve.p_signal - p0);
    std::uint64_t fa = 0, md = 0, n0 = 0, n1 = 0;
    const bool informative = excess > 0.0 && p0 > 0.0 && p0 < 1.0;
    long double cut = 0.0L;
    if (informative) {
      const long double up = std::log1p(static_cast<long double>(excess) / p0);
      const long double down = std::log1p(-static_cast<long double>(excess) / (1.0L - p0));
      cut = -static_cast<long double>(bins) * down / (up - down);
    }
    for (std::uint64_t t = 0; t < trials; ++t) {
      bool flagged = false;
      if (informative) {
        flagged = static_cast<long double>(counts[t]) > cut;
      } else if (p0 == 0.0 && excess > 0.0) {
        flagged = counts[t] > 0;
      }
      if (t % 2) {
        ++n1;
        md += !flagged;
      } else {
        ++n0;
        fa += flagged;
      }
    }
    r.llr_test = score(fa, n0, md, n1);
  }

  const DetectorEstimate& best =
      r.llr_test.p_error <= r.threshold_test.p_error ? r.llr_test : r.threshold_test;
  r.empirical_pe = best.p_error;
  r.std_error = best.std_error;
  r.ci_low = r.empirical_pe - 1.96 * r.std_error;
  r.ci_high = r.empirical_pe + 1.96 * r.std_error;
  r.empirical_bias = 0.5 - r.empirical_pe;
  const ModeStates states(CoherentMean(p.mu), p.channel.noise_alice);
  r.bound_epsilon = states.bias_bound(p.d, p.n_pairs);
  r.budget_epsilon = opts.reference_epsilon.value_or(r.bound_epsilon);
  r.passed = r.empirical_bias <= r.budget_epsilon + 3.0 * r.std_error;
  return r;
}

ProtocolParams rescale_plan(const ProtocolParams& p, double factor) {
  if (!(factor > 0.0 && factor <= 1.0)) {
    throw std::invalid_argument("rescale factor must lie in (0, 1]");
  }
  if (factor == 1.0) return p;
  ProtocolParams out = p;
  out.d = std::max<std::uint64_t>(p.b, static_cast<std::uint64_t>(std::llround(
                                            static_cast<double>(p.d) * factor)));
  out.k = std::max<std::uint64_t>(1, out.d / p.b);
  out.d = out.k * p.b;
  out.n_pairs = std::max<std::uint64_t>(
      out.d, static_cast<std::uint64_t>(std::llround(static_cast<double>(out.d) / p.q)));
  refresh_derived(out);
  return out;
}

ProtocolParams with_intensity(const ProtocolParams& p, double mu) {
  ProtocolParams out = p;
  out.mu = CoherentMean(mu).mu;
  refresh_derived(out);
  return out;
}

}  // namespace covert
