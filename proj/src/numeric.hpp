#pragma once

// Internal numeric helpers shared by the library translation units.

#include <cmath>
#include <cstdint>

namespace covert::detail {

/// Neumaier compensated summation.
class NeumaierSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::fabs(sum_) >= std::fabs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// ln C(n, k) via log-gamma.
inline double log_choose(std::uint64_t n, std::uint64_t k) noexcept {
  const auto nd = static_cast<double>(n);
  const auto kd = static_cast<double>(k);
  return std::lgamma(nd + 1.0) - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0);
}

/// ln of the Binomial(n, p) pmf at k, for 0 < p < 1.
inline double log_binomial_pmf(std::uint64_t n, std::uint64_t k, double p) noexcept {
  const auto kd = static_cast<double>(k);
  const auto rest = static_cast<double>(n - k);
  return log_choose(n, k) + kd * std::log(p) + rest * std::log1p(-p);
}

}  // namespace covert::detail
