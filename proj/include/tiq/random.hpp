#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace tiq {

/// splitmix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Folds a path of tags into a master seed. Distinct paths give
/// statistically independent seeds; the same path always gives the same seed.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) noexcept;

/// Stream tags used when deriving substreams. Values are part of the
/// reproducibility contract and must not be renumbered.
namespace stream_tag {
inline constexpr std::uint64_t sample = 1;
inline constexpr std::uint64_t init = 2;
inline constexpr std::uint64_t batches = 3;
inline constexpr std::uint64_t internal_noise = 4;
inline constexpr std::uint64_t extractor = 5;
inline constexpr std::uint64_t depth = 6;
inline constexpr std::uint64_t observer = 7;
inline constexpr std::uint64_t width = 8;
}  // namespace stream_tag

/// A seeded pseudo-random stream. Copying a stream copies its state.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : seed_(seed), engine_(mix64(seed)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  RandomStream substream(std::uint64_t tag) const { return RandomStream(derive_seed(seed_, {tag})); }

  double uniform(double lo, double hi);
  double normal(double mean, double stddev);
  /// Exact Poisson draw for rates up to 1e6, normal approximation above.
  std::uint64_t poisson(double rate);
  /// Uniform integer in [0, n).
  std::uint64_t index(std::uint64_t n);

  std::mt19937_64& engine() noexcept { return engine_; }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tiq
