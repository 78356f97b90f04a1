#include "covert/random.hpp"

#include <stdexcept>

namespace covert {
namespace {
__extension__ using u128 = unsigned __int128;
}  // namespace

std::uint64_t uniform_below(Engine& eng, std::uint64_t bound) {
  if (bound == 0) {
    throw std::invalid_argument("uniform_below needs a positive bound");
  }
  u128 m = static_cast<u128>(eng()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<u128>(eng()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t sample_binomial(Engine& eng, std::uint64_t n, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("binomial probability must lie in [0, 1]");
  }
  if (n == 0 || p == 0.0) return 0;
  if (p == 1.0) return n;
  if (n >= 10'000'000ULL && p <= 1e-4) {
    std::poisson_distribution<std::uint64_t> poisson(static_cast<double>(n) * p);
    const std::uint64_t draw = poisson(eng);
    return draw > n ? n : draw;
  }
  std::binomial_distribution<std::uint64_t> binom(n, p);
  return binom(eng);
}

}  // namespace covert
