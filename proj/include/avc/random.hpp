#pragma once

// Seeded random streams and the distribution kernels used by the sampler.
//
// Every sampler here is a pure function of its parameters and the stream it
// is handed. Streams are identified by (seed, stream_id); the same pair and
// call sequence replays the same draws on any conforming platform because
// only std::mt19937_64 (fully specified by the standard) and our own
// transforms are used. The <random> distribution classes are avoided since
// their algorithms are implementation-defined.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace avc {

class RandomStream {
 public:
  RandomStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  /// Raw 64 random bits.
  std::uint64_t bits() { return engine_(); }

  /// Uniform on the open interval (0, 1).
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
  }

  double normal();
  double exponential();

  friend std::ostream& operator<<(std::ostream& os, const RandomStream& rs);
  friend std::istream& operator>>(std::istream& is, RandomStream& rs);
  friend bool operator==(const RandomStream& a, const RandomStream& b) {
    return a.seed_ == b.seed_ && a.stream_id_ == b.stream_id_ &&
           a.engine_ == b.engine_;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Normal distribution functions. Absolute error below 1e-15 on [-8, 8].

/// Standard normal CDF.
template <typename Scalar>
Scalar std_normal_cdf(Scalar z) {
  using std::erfc;
  return Scalar(0.5) * erfc(-z * Scalar(0.70710678118654752440));
}

/// Standard normal upper tail, 1 - Phi(z), without cancellation.
template <typename Scalar>
Scalar std_normal_sf(Scalar z) {
  using std::erfc;
  return Scalar(0.5) * erfc(z * Scalar(0.70710678118654752440));
}

/// log Phi(z), accurate far into the lower tail.
double log_std_normal_cdf(double z);

/// log(Phi(b) - Phi(a)) for a < b in standard units; -inf when the interval
/// carries no representable mass.
double log_std_normal_interval(double a, double b);

/// Standard normal quantile (Wichura AS241, ~1e-16 relative).
double std_normal_quantile(double u);

double normal_cdf(double x, double mean, double sd);
double normal_inv_cdf(double u, double mean, double sd);

// ---------------------------------------------------------------------------
// Samplers.

struct TruncatedNormalSpec {
  double mean = 0.0;
  double sd = 1.0;
  double lower = -std::numeric_limits<double>::infinity();
};

/// Draw from Normal(mean, sd^2) restricted to [lower, inf). Inverse CDF when
/// the retained mass is at least 1e-6, exponential-proposal rejection in the
/// deep tail.
double sample_truncated_normal(const TruncatedNormalSpec& spec,
                               RandomStream& rng);

/// Normal(mean, sd^2) restricted to (-inf, upper].
double sample_truncated_normal_above(double mean, double sd, double upper,
                                     RandomStream& rng);

/// Gamma with shape/rate parameterization (mean shape/rate).
double sample_gamma(double shape, double rate, RandomStream& rng);
double sample_beta(double a, double b, RandomStream& rng);
bool sample_bernoulli(double p, RandomStream& rng);

/// Number of failures before the first success, success probability p.
long sample_geometric(double p, RandomStream& rng);

long sample_binomial(long trials, double p, RandomStream& rng);

/// Index drawn with probability proportional to weights[i] (0-based).
std::size_t sample_categorical(std::span<const double> weights,
                               RandomStream& rng);

/// Categorical draw from unnormalized log weights; -inf entries are skipped.
std::size_t sample_categorical_log(std::span<const double> log_weights,
                                   RandomStream& rng);

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& covariance,
                           RandomStream& rng);

/// Draw from the Gaussian with the given precision matrix and mean
/// precision^{-1} * shift, via a Cholesky factor of the precision.
Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift,
                                     RandomStream& rng);

}  // namespace avc
