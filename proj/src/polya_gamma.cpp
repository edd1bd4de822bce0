#include "avc/polya_gamma.hpp"

#include <cmath>
#include <numbers>

#include "avc/errors.hpp"

namespace avc {

namespace {

using std::numbers::pi;

constexpr double kTruncation = 0.64;  // switch point between the two series

// n-th coefficient of the alternating series for the Jacobi J*(1) density.
double series_coefficient(int n, double x) {
  const double k = n + 0.5;
  if (x > kTruncation) {
    return pi * k * std::exp(-0.5 * k * k * pi * pi * x);
  }
  return pi * k * std::pow(2.0 / (pi * x), 1.5) * std::exp(-2.0 * k * k / x);
}

// P(X < t) for X ~ InverseGaussian(mean 1/z, shape 1), computed in log space
// so that exp(2z) cannot overflow.
double inverse_gaussian_cdf(double t, double z) {
  const double root = std::sqrt(1.0 / t);
  const double b = root * (t * z - 1.0);
  const double a = -root * (t * z + 1.0);
  return std_normal_cdf(b) + std::exp(2.0 * z + log_std_normal_cdf(a));
}

// InverseGaussian(1/z, 1) restricted to (0, t).
double truncated_inverse_gaussian(double z, RandomStream& rng) {
  const double mean = z > 0.0 ? 1.0 / z : std::numeric_limits<double>::infinity();
  double x = kTruncation + 1.0;
  if (mean > kTruncation) {
    // Proposal from a 1/chi^2 variate truncated to (0, t).
    double alpha = 0.0;
    while (rng.uniform() > alpha) {
      double e1;
      double e2;
      do {
        e1 = rng.exponential();
        e2 = rng.exponential();
      } while (e1 * e1 > 2.0 * e2 / kTruncation);
      const double denom = 1.0 + kTruncation * e1;
      x = kTruncation / (denom * denom);
      alpha = std::exp(-0.5 * z * z * x);
    }
    return x;
  }
  while (x > kTruncation) {
    const double y0 = rng.normal();
    const double y = y0 * y0;
    const double my = mean * y;
    x = mean + 0.5 * mean * my - 0.5 * mean * std::sqrt(4.0 * my + my * my);
    if (rng.uniform() > mean / (mean + x)) x = mean * mean / x;
  }
  return x;
}

}  // namespace

double polya_gamma_mean(double b, double c) {
  const double a = std::abs(c);
  if (a < 1e-4) return 0.25 * b * (1.0 - a * a / 12.0);
  return b / (2.0 * a) * std::tanh(0.5 * a);
}

double polya_gamma_variance(double b, double c) {
  const double a = std::abs(c);
  if (a < 1e-3) {
    // Series of (sinh a - a) / (4 a^3 cosh^2(a/2)).
    return b * (1.0 / 24.0 - a * a / 120.0);
  }
  // sinh(a) / cosh^2(a/2) = 2 tanh(a/2); this form does not overflow.
  const double ch = std::cosh(0.5 * a);
  return b * (2.0 * std::tanh(0.5 * a) - a / (ch * ch)) / (4.0 * a * a * a);
}

double sample_polya_gamma_one(double c, RandomStream& rng) {
  // J*(1, z) with z = |c|/2 and PG(1, c) = J*(1, z) / 4.
  const double z = 0.5 * std::abs(c);
  const double k = pi * pi / 8.0 + 0.5 * z * z;
  const double p = pi / (2.0 * k) * std::exp(-k * kTruncation);
  const double q = 2.0 * std::exp(-z) * inverse_gaussian_cdf(kTruncation, z);
  const double left = p / (p + q);

  for (;;) {
    double x;
    if (rng.uniform() < left) {
      x = kTruncation + rng.exponential() / k;
    } else {
      x = truncated_inverse_gaussian(z, rng);
    }
    double s = series_coefficient(0, x);
    const double y = rng.uniform() * s;
    for (int n = 1;; ++n) {
      if (n % 2 == 1) {
        s -= series_coefficient(n, x);
        if (y <= s) return 0.25 * x;
      } else {
        s += series_coefficient(n, x);
        if (y > s) break;
      }
    }
  }
}

double sample_polya_gamma(long b, double c, RandomStream& rng, long normal_threshold) {
  if (b <= 0) {
    throw InvalidParameter("polya-gamma: shape b must be a positive integer, got " +
                           std::to_string(b));
  }
  if (!std::isfinite(c)) throw InvalidParameter("polya-gamma: tilt c must be finite");
  if (b >= normal_threshold) {
    const double m = polya_gamma_mean(static_cast<double>(b), c);
    const double sd = std::sqrt(polya_gamma_variance(static_cast<double>(b), c));
    // Positive support; the lower truncation is many sd away for b >= 30.
    return sample_truncated_normal({m, sd, 0.0}, rng);
  }
  double sum = 0.0;
  for (long i = 0; i < b; ++i) sum += sample_polya_gamma_one(c, rng);
  return sum;
}

}  // namespace avc
