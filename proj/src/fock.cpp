#include "covert/fock.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "covert/error.hpp"
#include "numeric.hpp"

namespace covert {
namespace {

constexpr double kNormTol = 1e-12;
constexpr std::size_t kMaxEntries = 100'000'000;

void check_trunc_tol(double trunc_tol) {
  if (!(trunc_tol > 0.0 && trunc_tol < 1.0)) {
    throw std::invalid_argument("truncation tolerance must lie in (0, 1)");
  }
}

// y - log1p(y), accurate for small |y| where it is ~ y^2 / 2.
double log1p_excess(double y) {
  if (std::fabs(y) >= 0.05) return y - std::log1p(y);
  double term = -y;
  double sum = 0.0;
  for (int j = 2; j < 40; ++j) {
    term *= -y;
    const double add = term / j;
    sum += add;
    if (std::fabs(add) <= 1e-18 * std::fabs(sum)) break;
  }
  return sum;
}

}  // namespace

ThermalMean::ThermalMean(double value) : n_bar(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("thermal mean photon number must be finite and >= 0");
  }
}

CoherentMean::CoherentMean(double value) : mu(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("coherent mean photon number must be finite and >= 0");
  }
}

FockDistribution::FockDistribution(std::vector<double> pmf, double tail_mass)
    : pmf_(std::move(pmf)), tail_mass_(tail_mass) {
  if (pmf_.empty()) {
    throw std::invalid_argument("Fock distribution needs at least the vacuum entry");
  }
  if (!(tail_mass_ >= 0.0 && tail_mass_ <= 1.0)) {
    throw std::invalid_argument("tail mass outside [0, 1]");
  }
  detail::NeumaierSum total;
  for (std::size_t n = 0; n < pmf_.size(); ++n) {
    const double p = pmf_[n];
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("pmf entry " + std::to_string(n) + " outside [0, 1]");
    }
    total.add(p);
  }
  total.add(tail_mass_);
  if (std::fabs(total.value() - 1.0) > kNormTol) {
    throw std::invalid_argument("pmf plus tail mass does not sum to 1");
  }
}

FockDistribution FockDistribution::vacuum() { return FockDistribution({1.0}, 0.0); }

double FockDistribution::mean() const noexcept {
  detail::NeumaierSum acc;
  for (std::size_t n = 1; n < pmf_.size(); ++n) {
    acc.add(static_cast<double>(n) * pmf_[n]);
  }
  return acc.value();
}

FockDistribution thermal_pmf(ThermalMean n_bar, double trunc_tol) {
  check_trunc_tol(trunc_tol);
  const double nb = n_bar.n_bar;
  if (nb == 0.0) {
    return FockDistribution::vacuum();
  }
  // Ratio r = nb / (1 + nb); tail above n_max is r^(n_max + 1).
  const double log_r = std::log(nb) - std::log1p(nb);
  const double log_tol = std::log(trunc_tol);
  double cut = std::ceil(log_tol / log_r);
  if (cut < 1.0) cut = 1.0;
  auto count = static_cast<std::size_t>(cut);  // n_max + 1
  // Guard against rounding in the ceil: shrink while the smaller cutoff
  // still meets the tolerance, grow while this one does not.
  while (count > 1 && static_cast<double>(count - 1) * log_r <= log_tol) --count;
  while (static_cast<double>(count) * log_r > log_tol) ++count;
  if (count > kMaxEntries) {
    throw std::invalid_argument("thermal mean too large for dense truncation");
  }

  std::vector<double> pmf(count);
  const double r = std::exp(log_r);
  pmf[0] = 1.0 / (1.0 + nb);
  for (std::size_t n = 1; n < count; ++n) {
    pmf[n] = pmf[n - 1] * r;
  }
  const double tail = std::exp(static_cast<double>(count) * log_r);
  return FockDistribution(std::move(pmf), tail);
}

FockDistribution poisson_pmf(CoherentMean mu, double trunc_tol) {
  check_trunc_tol(trunc_tol);
  const double m = mu.mu;
  if (m == 0.0) {
    return FockDistribution::vacuum();
  }
  // Anchor at the mode in log space, then walk outwards with the ratio
  // recurrences so no factorial or power is ever formed.
  const auto mode = static_cast<std::size_t>(std::floor(m));
  const double log_mode = -m + static_cast<double>(mode) * std::log(m) -
                          std::lgamma(static_cast<double>(mode) + 1.0);
  std::vector<double> terms(mode + 1);
  terms[mode] = std::exp(log_mode);
  for (std::size_t n = mode; n > 0; --n) {
    terms[n - 1] = terms[n] * static_cast<double>(n) / m;
  }
  // Extend far enough that whatever lies beyond is negligible against the
  // tolerance; the remainder past the last term is below last * ratio / (1 - ratio).
  const double negligible = trunc_tol * 1e-6;
  for (std::size_t n = mode;; ++n) {
    const double next = terms[n] * m / static_cast<double>(n + 1);
    terms.push_back(next);
    const double ratio = m / static_cast<double>(n + 2);
    if (ratio < 0.5 && (next < negligible || next == 0.0)) break;
    if (terms.size() > kMaxEntries) {
      throw std::invalid_argument("coherent mean too large for dense truncation");
    }
  }

  // Upper tails summed from the far end, smallest terms first.
  std::vector<double> tail(terms.size(), 0.0);
  double acc = 0.0;
  for (std::size_t n = terms.size(); n-- > 0;) {
    tail[n] = acc;  // mass strictly above n
    acc += terms[n];
  }
  std::size_t n_max = 0;
  while (tail[n_max] > trunc_tol) ++n_max;
  terms.resize(n_max + 1);
  return FockDistribution(std::move(terms), tail[n_max]);
}

FockDistribution convolve(const FockDistribution& a, const FockDistribution& b) {
  const auto pa = a.pmf();
  const auto pb = b.pmf();
  std::vector<double> out(pa.size() + pb.size() - 1, 0.0);
  for (std::size_t n = 0; n < out.size(); ++n) {
    const std::size_t lo = n >= pb.size() ? n - pb.size() + 1 : 0;
    const std::size_t hi = std::min(n, pa.size() - 1);
    detail::NeumaierSum acc;
    for (std::size_t r = lo; r <= hi; ++r) {
      acc.add(pa[r] * pb[n - r]);
    }
    out[n] = acc.value();
  }
  while (out.size() > 1 && out.back() == 0.0) out.pop_back();
  const double ta = a.tail_mass();
  const double tb = b.tail_mass();
  return FockDistribution(std::move(out), ta + tb - ta * tb);
}

FockDistribution mix(const FockDistribution& rho, const FockDistribution& rho_s, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("mixing probability must lie in [0, 1]");
  }
  if (q == 0.0) return rho;
  if (q == 1.0) return rho_s;
  const std::size_t len = std::max(rho.size(), rho_s.size());
  std::vector<double> out(len);
  for (std::size_t n = 0; n < len; ++n) {
    out[n] = q * rho_s[n] + (1.0 - q) * rho[n];
  }
  return FockDistribution(std::move(out), q * rho_s.tail_mass() + (1.0 - q) * rho.tail_mass());
}

Divergence relative_entropy(const FockDistribution& rho, const FockDistribution& sigma) {
  detail::NeumaierSum acc;
  const auto p = rho.pmf();
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] == 0.0) continue;
    const double s = sigma[n];
    if (s == 0.0) {
      throw InfiniteDivergenceError("rho has mass at n = " + std::to_string(n) +
                                    " where sigma has none");
    }
    acc.add(p[n] * std::log(p[n] / s));
  }
  Divergence out;
  out.nats = acc.value();
  const double tr = rho.tail_mass();
  const double ts = sigma.tail_mass();
  if (tr == 0.0) {
    out.tail_bound = 0.0;
  } else if (ts == 0.0) {
    out.tail_bound = HUGE_VAL;
  } else {
    out.tail_bound = std::fabs(tr * std::log(tr / ts));
  }
  return out;
}

Divergence relative_entropy_mixture(const FockDistribution& rho,
                                    const FockDistribution& rho_s, double q) {
  if (!(q >= 0.0 && q <= 1.0)) {
    throw std::invalid_argument("mixing probability must lie in [0, 1]");
  }
  Divergence out;
  if (q == 0.0) return out;
  detail::NeumaierSum acc;
  const auto p = rho.pmf();
  for (std::size_t n = 0; n < p.size(); ++n) {
    if (p[n] == 0.0) continue;
    const double y = q * (rho_s[n] / p[n] - 1.0);
    if (y <= -1.0) {
      throw InfiniteDivergenceError("rho has mass at n = " + std::to_string(n) +
                                    " where the mixture has none");
    }
    acc.add(p[n] * log1p_excess(y));
  }
  out.nats = acc.value();

  detail::NeumaierSum beyond;
  beyond.add(rho_s.tail_mass());
  for (std::size_t n = p.size(); n < rho_s.size(); ++n) beyond.add(rho_s[n]);
  const double tr = rho.tail_mass();
  if (q == 1.0) {
    out.tail_bound = tr > 0.0 ? HUGE_VAL : beyond.value();
  } else {
    out.tail_bound = tr * log1p_excess(-q) + q * beyond.value();
  }
  return out;
}

}  // namespace covert
