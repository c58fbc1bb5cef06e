#include <doctest.h>

#include <cmath>
#include <set>

#include "tiq/random.hpp"

using namespace tiq;

TEST_CASE("derive_seed is a pure function of master and path") {
  CHECK(derive_seed(7, {1, 2, 3}) == derive_seed(7, {1, 2, 3}));
  CHECK(derive_seed(7, {1, 2, 3}) != derive_seed(7, {1, 3, 2}));
  CHECK(derive_seed(7, {1, 2}) != derive_seed(8, {1, 2}));
  CHECK(derive_seed(7, {1}) != derive_seed(7, {1, 0}));
}

TEST_CASE("sample seeds do not collide over a large index range") {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 100000; ++i) seen.insert(derive_seed(1, {stream_tag::sample, 0, i}));
  CHECK(seen.size() == 100000);
}

TEST_CASE("streams replay identically from the same seed") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    CHECK(a.uniform(0, 1) == b.uniform(0, 1));
    CHECK(a.normal(0, 1) == b.normal(0, 1));
    CHECK(a.poisson(3.5) == b.poisson(3.5));
  }
  CHECK(a.substream(3).uniform(0, 1) == b.substream(3).uniform(0, 1));
}

TEST_CASE("poisson moments") {
  RandomStream rng(5);
  for (double rate : {0.5, 12.0, 400.0, 2e6}) {
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = static_cast<double>(rng.poisson(rate));
      s += x;
      s2 += x * x;
    }
    const double mean = s / n, var = s2 / n - mean * mean;
    // mean within 5 standard errors, variance within 3%
    CHECK(std::abs(mean - rate) < 5 * std::sqrt(rate / n));
    CHECK(var == doctest::Approx(rate).epsilon(0.03));
  }
  CHECK(rng.poisson(0.0) == 0);
  CHECK(rng.poisson(-1.0) == 0);
}

TEST_CASE("index stays in range") {
  RandomStream rng(9);
  for (int i = 0; i < 10000; ++i) CHECK(rng.index(7) < 7);
}
