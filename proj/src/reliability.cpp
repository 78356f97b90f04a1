#include "covert/reliability.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "covert/error.hpp"
#include "numeric.hpp"

namespace covert {
namespace {

constexpr double kRelCutoff = 1e-17;

// P(Binomial(n, g) <= h) for 0 < g < 1, summed outward from the largest
// admissible term.
double binomial_cdf(std::uint64_t n, std::uint64_t h, double g) {
  if (h >= n) return 1.0;
  const double odds = g / (1.0 - g);
  auto mode = static_cast<std::uint64_t>(std::floor(static_cast<double>(n + 1) * g));
  mode = std::min(mode, n);
  const std::uint64_t start = std::min(h, mode);
  const double first = std::exp(detail::log_binomial_pmf(n, start, g));

  detail::NeumaierSum acc;
  acc.add(first);
  // Downward: term(j-1) = term(j) * j / (n - j + 1) / odds.
  double term = first;
  for (std::uint64_t j = start; j > 0; --j) {
    const double r = static_cast<double>(j) / static_cast<double>(n - j + 1) / odds;
    term *= r;
    acc.add(term);
    if (term == 0.0) break;
    const double r_next = static_cast<double>(j - 1) / static_cast<double>(n - j + 2) / odds;
    if (r_next < 1.0 && term * r_next / (1.0 - r_next) < kRelCutoff * acc.value()) break;
  }
  // Upward to h, only when the mode lies below h.
  term = first;
  for (std::uint64_t j = start; j < h; ++j) {
    const double r = static_cast<double>(n - j) / static_cast<double>(j + 1) * odds;
    term *= r;
    acc.add(term);
    if (term == 0.0) break;
    const double r_next = static_cast<double>(n - j - 1) / static_cast<double>(j + 2) * odds;
    if (r_next < 1.0 && term * r_next / (1.0 - r_next) < kRelCutoff * acc.value()) break;
  }
  return std::min(acc.value(), 1.0);
}

// Probability that i clicks, each correct with probability g, fail the
// strict-majority test.
double majority_wrong(std::uint64_t i, double g) {
  if (i == 0) return 1.0;
  if (g >= 1.0) return 0.0;
  if (g <= 0.0) return 1.0;
  return binomial_cdf(i, i / 2, g);
}

// Failure probability F(i) = P(Binomial(i, g) <= i / 2) stepped from i to
// i - 1 together with A(i) = P(Binomial(i, g) = ceil(i / 2)):
//   i even: A(i-1) = A(i) / (2 (1 - g)),          F(i-1) = F(i) - (1 - g) A(i-1)
//   i odd:  A(i-1) = A(i) (m + 1) / ((2m + 1) g),  F(i-1) = F(i) + g A(i-1)
// F grows downward, so rounding errors shrink relative to it. Exact values
// are recomputed periodically and whenever A has underflowed.
class MajorityWalk {
 public:
  MajorityWalk(double g, std::uint64_t i) : g_(g), exact_(g <= 0.0 || g >= 1.0) { reset(i); }

  void reset(std::uint64_t i) {
    i_ = i;
    steps_ = 0;
    f_ = majority_wrong(i, g_);
    a_ = exact_ ? 0.0 : std::exp(detail::log_binomial_pmf(i, (i + 1) / 2, g_));
  }

  double fail() const noexcept { return f_; }

  void step_down() {
    if (exact_ || a_ == 0.0 || ++steps_ == kResync) {
      reset(i_ - 1);
      return;
    }
    if (i_ % 2 == 0) {
      a_ /= 2.0 * (1.0 - g_);
      f_ -= (1.0 - g_) * a_;
    } else {
      const auto m = static_cast<double>((i_ - 1) / 2);
      a_ *= (m + 1.0) / ((2.0 * m + 1.0) * g_);
      f_ += g_ * a_;
    }
    f_ = std::clamp(f_, 0.0, 1.0);
    --i_;
  }

 private:
  static constexpr unsigned kResync = 2048;
  double g_;
  bool exact_;
  std::uint64_t i_ = 0;
  unsigned steps_ = 0;
  double f_ = 1.0;
  double a_ = 0.0;
};

}  // namespace

ChannelModel::ChannelModel(double tau_, ThermalMean noise_alice_, ThermalMean noise_bob_)
    : tau(tau_), noise_alice(noise_alice_), noise_bob(noise_bob_) {
  if (!(tau_ >= 0.0 && tau_ <= 1.0)) {
    throw std::invalid_argument("transmissivity must lie in [0, 1]");
  }
}

double ClickProbabilities::p_good_given_click() const {
  const double total = p_click();
  if (!(total > 0.0)) {
    throw std::domain_error("p_g undefined: no click is possible");
  }
  return p_correct / total;
}

ClickProbabilities click_probs(CoherentMean mu, const ChannelModel& channel) {
  const double tn = channel.tau * channel.noise_bob.n_bar;
  ClickProbabilities cp;
  cp.p_correct = -std::expm1(-channel.tau * mu.mu - std::log1p(tn));
  cp.p_wrong = tn / (1.0 + tn);
  return cp;
}

double bit_error_prob(std::uint64_t k, const ClickProbabilities& cp) {
  if (k < 1) {
    throw std::invalid_argument("repetition count must be >= 1");
  }
  if (!(cp.p_correct >= 0.0 && cp.p_wrong >= 0.0 && cp.p_click() <= 1.0 + 1e-15)) {
    throw std::invalid_argument("click probabilities out of range");
  }
  const double p = std::min(cp.p_click(), 1.0);
  if (p == 0.0) return 1.0;
  const double g = cp.p_correct / cp.p_click();
  if (p == 1.0) return majority_wrong(k, g);

  const double odds = p / (1.0 - p);
  auto mode = static_cast<std::uint64_t>(std::floor(static_cast<double>(k + 1) * p));
  mode = std::min(mode, k);
  const double peak = std::exp(detail::log_binomial_pmf(k, mode, p));
  const double f_mode = majority_wrong(mode, g);
  detail::NeumaierSum acc;

  // Upper end of the outer sum. For g > 1/2 the failure probability is
  // non-increasing within each parity class, so beyond the mode it never
  // exceeds the larger of its values at mode and mode + 1.
  std::uint64_t top = mode;
  if (mode < k) {
    const double f_cap = g > 0.5 ? std::max(f_mode, majority_wrong(mode + 1, g)) : 1.0;
    const double floor = kRelCutoff * peak * f_mode;
    double pmf = peak;
    while (top < k) {
      pmf *= static_cast<double>(k - top) / static_cast<double>(top + 1) * odds;
      ++top;
      const double r = static_cast<double>(k - top) / static_cast<double>(top + 1) * odds;
      if (pmf == 0.0 || f_cap == 0.0) break;
      if (r < 1.0 && f_cap * pmf / (1.0 - r) < floor) break;
    }
  }

  // Walk down from the top: the outer pmf by its ratio, the inner failure
  // probability by a recurrence that is stable in this direction.
  MajorityWalk walk(g, top);
  double pmf = std::exp(detail::log_binomial_pmf(k, top, p));
  for (std::uint64_t i = top; i > mode; --i) {
    acc.add(pmf * walk.fail());
    pmf *= static_cast<double>(i) / static_cast<double>(k - i + 1) / odds;
    walk.step_down();
  }
  pmf = peak;
  walk.reset(mode);
  for (std::uint64_t i = mode;; --i) {
    acc.add(pmf * walk.fail());
    if (i == 0) break;
    pmf *= static_cast<double>(i) / static_cast<double>(k - i + 1) / odds;
    walk.step_down();
    if (pmf == 0.0) break;
    const double r = static_cast<double>(i - 1) / static_cast<double>(k - i + 2) / odds;
    if (r < 1.0 && pmf / (1.0 - r) < kRelCutoff * acc.value()) break;
  }
  return std::clamp(acc.value(), 0.0, 1.0);
}

double message_error_prob(double delta, std::uint64_t b) {
  if (!(delta >= 0.0 && delta <= 1.0)) {
    throw std::invalid_argument("bit error probability must lie in [0, 1]");
  }
  if (b < 1) {
    throw std::invalid_argument("message needs at least one bit");
  }
  if (delta == 1.0) return 1.0;
  return -std::expm1(static_cast<double>(b) * std::log1p(-delta));
}

std::uint64_t min_repetitions(double target_error, std::uint64_t b,
                              const ClickProbabilities& cp, std::uint64_t max_k) {
  if (!(target_error > 0.0 && target_error < 1.0)) {
    throw std::invalid_argument("decoding error target must lie in (0, 1)");
  }
  if (!(cp.p_click() > 0.0) || !(cp.p_good_given_click() > 0.5)) {
    throw InfeasibleError("majority vote cannot converge: p_g <= 1/2");
  }
  auto meets = [&](std::uint64_t k) {
    return message_error_prob(bit_error_prob(k, cp), b) <= target_error;
  };
  std::uint64_t lo = 0;
  std::uint64_t hi = 1;
  while (!meets(hi)) {
    if (hi >= max_k) {
      throw InfeasibleError("no repetition count up to the limit meets the error target");
    }
    lo = hi;
    hi = std::min(2 * hi, max_k);
  }
  while (hi - lo > 1) {
    const std::uint64_t mid = lo + (hi - lo) / 2;
    if (meets(mid)) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  // Even k can be worse than k - 1 when erasures are rare (ties count as
  // errors), so make sure the next smaller count really fails.
  while (hi > 1 && meets(hi - 1)) --hi;
  return hi;
}

}  // namespace covert
