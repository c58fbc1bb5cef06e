#include "tiq/random.hpp"

#include <cmath>

namespace tiq {

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(master ^ 0x5449514453454544ULL);
  for (std::uint64_t tag : path) h = mix64(h ^ mix64(tag + 0x632be59bd9b4e019ULL));
  return h;
}

double RandomStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

double RandomStream::normal(double mean, double stddev) {
  return mean + stddev * normal_(engine_);
}

std::uint64_t RandomStream::poisson(double rate) {
  if (!(rate > 0.0)) return 0;
  if (rate > 1e6) {
    const double x = std::round(normal(rate, std::sqrt(rate)));
    return x < 0.0 ? 0 : static_cast<std::uint64_t>(x);
  }
  return static_cast<std::uint64_t>(std::poisson_distribution<long long>(rate)(engine_));
}

std::uint64_t RandomStream::index(std::uint64_t n) {
  return std::uniform_int_distribution<std::uint64_t>(0, n - 1)(engine_);
}

}  // namespace tiq
