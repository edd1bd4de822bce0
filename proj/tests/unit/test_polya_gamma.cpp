#include <cmath>

#include "doctest.h"
#include "avc/errors.hpp"
#include "avc/polya_gamma.hpp"

using namespace avc;

TEST_CASE("closed-form moments") {
  CHECK(polya_gamma_mean(1.0, 0.0) == doctest::Approx(0.25));
  CHECK(polya_gamma_mean(2.0, 3.0) == doctest::Approx(0.30169).epsilon(1e-4));
  CHECK(polya_gamma_variance(1.0, 0.0) == doctest::Approx(1.0 / 24.0));
  // Continuity through c = 0.
  CHECK(polya_gamma_mean(3.0, 1e-7) == doctest::Approx(0.75));
  CHECK(polya_gamma_variance(3.0, 1e-5) == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(polya_gamma_mean(2.0, -3.0) == doctest::Approx(polya_gamma_mean(2.0, 3.0)));
}

TEST_CASE("draw means") {
  RandomStream rng(2024, 0);
  const int N = 1000000;
  double s0 = 0.0, s1 = 0.0;
  for (int i = 0; i < N; ++i) {
    s0 += sample_polya_gamma(1, 0.0, rng);
    s1 += sample_polya_gamma(2, 3.0, rng);
  }
  CHECK(std::abs(s0 / N - 0.25) < 0.001);
  CHECK(std::abs(s1 / N - 0.30169) < 0.002);
}

TEST_CASE("draws are positive and arguments validated") {
  RandomStream rng(1, 1);
  for (int i = 0; i < 10000; ++i) REQUIRE(sample_polya_gamma(5, -1.7, rng) > 0.0);
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_polya_gamma(80, 0.4, rng) > 0.0);
  for (int i = 0; i < 1000; ++i) REQUIRE(sample_polya_gamma(1, 40.0, rng) > 0.0);
  CHECK_THROWS_AS(sample_polya_gamma(0, 1.0, rng), InvalidParameter);
  CHECK_THROWS_AS(sample_polya_gamma(-2, 1.0, rng), InvalidParameter);
}

TEST_CASE("normal approximation matches the moments above the threshold") {
  RandomStream rng(77, 0);
  const int N = 200000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < N; ++i) {
    const double w = sample_polya_gamma(60, 1.5, rng);
    s += w;
    s2 += w * w;
  }
  const double mean = s / N;
  CHECK(mean == doctest::Approx(polya_gamma_mean(60, 1.5)).epsilon(0.002));
  CHECK(s2 / N - mean * mean == doctest::Approx(polya_gamma_variance(60, 1.5)).epsilon(0.02));
}
