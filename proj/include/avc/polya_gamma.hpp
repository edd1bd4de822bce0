#pragma once

#include "avc/random.hpp"

namespace avc {

/// Shape counts at or above this use the moment-matched normal approximation.
inline constexpr int kPolyaGammaNormalThreshold = 30;

/// E[PG(b, c)] = b/(2c) tanh(c/2), b/4 at c = 0.
double polya_gamma_mean(double b, double c);

/// Var[PG(b, c)] = b (sinh c - c) / (4 c^3 cosh^2(c/2)), b/24 at c = 0.
double polya_gamma_variance(double b, double c);

/// Exact PG(1, c) draw (Devroye-style alternating-series rejection sampler).
double sample_polya_gamma_one(double c, RandomStream& rng);

/// PG(b, c) for integer b >= 1: a sum of b exact PG(1, c) draws below
/// `normal_threshold`, a positive moment-matched normal draw at or above it.
double sample_polya_gamma(long b, double c, RandomStream& rng,
                          long normal_threshold = kPolyaGammaNormalThreshold);

}  // namespace avc
