#include "avc/random.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>

#include "avc/errors.hpp"

namespace avc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mt19937_64 seeded_engine(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32),
                    0x41564331u};
  return std::mt19937_64(seq);
}

template <std::size_t N>
double horner(const double (&c)[N], double x) {
  double acc = c[N - 1];
  for (std::size_t i = N - 1; i-- > 0;) acc = acc * x + c[i];
  return acc;
}

// Robert (1995) exponential proposal for Normal(0,1) restricted to [alpha, inf).
double tail_normal(double alpha, RandomStream& rng) {
  const double rate = 0.5 * (alpha + std::sqrt(alpha * alpha + 4.0));
  for (;;) {
    const double z = alpha + rng.exponential() / rate;
    const double d = z - rate;
    if (std::log(rng.uniform()) <= -0.5 * d * d) return z;
  }
}

// log of a Gamma(shape, 1) variate; stays finite for tiny shapes.
double log_gamma_variate(double shape, RandomStream& rng) {
  if (shape < 1.0) {
    return log_gamma_variate(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x;
    double v;
    do {
      x = rng.normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return std::log(d) + std::log(v);
    }
  }
}

}  // namespace

RandomStream::RandomStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id), engine_(seeded_engine(seed, stream_id)) {}

double RandomStream::normal() { return std_normal_quantile(uniform()); }

double RandomStream::exponential() { return -std::log(uniform()); }

std::ostream& operator<<(std::ostream& os, const RandomStream& rs) {
  os << rs.seed_ << ' ' << rs.stream_id_ << ' ' << rs.engine_;
  return os;
}

std::istream& operator>>(std::istream& is, RandomStream& rs) {
  is >> rs.seed_ >> rs.stream_id_ >> rs.engine_;
  return is;
}

// ---------------------------------------------------------------------------

double log_std_normal_cdf(double z) {
  if (z > 0.0) return std::log1p(-std_normal_sf(z));
  if (z > -30.0) return std::log(std_normal_cdf(z));
  // Asymptotic Mills-ratio series; relative error far below 1e-16 here.
  const double z2 = z * z;
  const double inv = 1.0 / z2;
  const double series =
      1.0 - inv * (1.0 - 3.0 * inv * (1.0 - 5.0 * inv * (1.0 - 7.0 * inv)));
  return -0.5 * z2 - std::log(-z) - 0.5 * std::log(2.0 * std::numbers::pi) +
         std::log(series);
}

double log_std_normal_interval(double a, double b) {
  if (!(a < b)) return -kInf;
  if (b <= 0.0) {
    const double lb = log_std_normal_cdf(b);
    const double la = log_std_normal_cdf(a);
    if (lb == -kInf) return -kInf;
    const double ratio = std::exp(la - lb);
    if (ratio >= 1.0) return -kInf;
    return lb + std::log1p(-ratio);
  }
  if (a >= 0.0) return log_std_normal_interval(-b, -a);
  return std::log(1.0 - std_normal_cdf(a) - std_normal_sf(b));
}

double std_normal_quantile(double u) {
  static constexpr double a[] = {
      3.3871328727963666080e0,  1.3314166789178437745e+2,
      1.9715909503065514427e+3, 1.3731693765509461125e+4,
      4.5921953931549871457e+4, 6.7265770927008700853e+4,
      3.3430575583588128105e+4, 2.5090809287301226727e+3};
  static constexpr double b[] = {
      1.0,                      4.2313330701600911252e+1,
      6.8718700749205790830e+2, 5.3941960214247511077e+3,
      2.1213794301586595867e+4, 3.9307895800092710610e+4,
      2.8729085735721942674e+4, 5.2264952788528545610e+3};
  static constexpr double c[] = {
      1.42343711074968357734e0, 4.63033784615654529590e0,
      5.76949722146069140550e0, 3.64784832476320460504e0,
      1.27045825245236838258e0, 2.41780725177450611770e-1,
      2.27238449892691845833e-2, 7.74545014278341407640e-4};
  static constexpr double d[] = {
      1.0,                      2.05319162663775882187e0,
      1.67638483018380384940e0, 6.89767334985100004550e-1,
      1.48103976427480074590e-1, 1.51986665636164571966e-2,
      5.47593808499534494600e-4, 1.05075007164441684324e-9};
  static constexpr double e[] = {
      6.65790464350110377720e0, 5.46378491116411436990e0,
      1.78482653991729133580e0, 2.96560571828504891230e-1,
      2.65321895265761230930e-2, 1.24266094738807843860e-3,
      2.71155556874348757815e-5, 2.01033439929228813265e-7};
  static constexpr double f[] = {
      1.0,                      5.99832206555887937690e-1,
      1.36929880922735805310e-1, 1.48753612908506148525e-2,
      7.86869131145613259100e-4, 1.84631831751005468180e-5,
      1.42151175831644588870e-7, 2.04426310338993978564e-15};

  if (!(u > 0.0 && u < 1.0)) {
    throw InvalidParameter("normal quantile: probability must lie in (0,1), got " +
                           std::to_string(u));
  }
  const double q = u - 0.5;
  if (std::abs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q * horner(a, r) / horner(b, r);
  }
  double r = q < 0.0 ? u : 1.0 - u;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = horner(c, r) / horner(d, r);
  } else {
    r -= 5.0;
    val = horner(e, r) / horner(f, r);
  }
  return q < 0.0 ? -val : val;
}

double normal_cdf(double x, double mean, double sd) {
  if (!(sd > 0.0)) throw InvalidParameter("normal_cdf: sd must be positive");
  return std_normal_cdf((x - mean) / sd);
}

double normal_inv_cdf(double u, double mean, double sd) {
  if (!(sd > 0.0)) throw InvalidParameter("normal_inv_cdf: sd must be positive");
  return mean + sd * std_normal_quantile(u);
}

// ---------------------------------------------------------------------------

double sample_truncated_normal(const TruncatedNormalSpec& spec, RandomStream& rng) {
  if (!(spec.sd > 0.0) || !std::isfinite(spec.mean)) {
    throw InvalidParameter("truncated normal: sd must be positive and mean finite");
  }
  if (spec.lower == -kInf) return spec.mean + spec.sd * rng.normal();
  const double alpha = (spec.lower - spec.mean) / spec.sd;
  const double mass = std_normal_sf(alpha);
  double z;
  if (mass >= 1e-6) {
    // Invert in the upper tail: Q(z) = v  <=>  z = -Phi^{-1}(v).
    const double v = rng.uniform() * mass;
    z = std::max(-std_normal_quantile(v), alpha);
  } else {
    z = tail_normal(alpha, rng);
  }
  return std::max(spec.mean + spec.sd * z, spec.lower);
}

double sample_truncated_normal_above(double mean, double sd, double upper,
                                     RandomStream& rng) {
  return -sample_truncated_normal({-mean, sd, -upper}, rng);
}

double sample_gamma(double shape, double rate, RandomStream& rng) {
  if (!(shape > 0.0) || !(rate > 0.0)) {
    throw InvalidParameter("gamma: shape and rate must be positive");
  }
  return std::exp(log_gamma_variate(shape, rng)) / rate;
}

double sample_beta(double a, double b, RandomStream& rng) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw InvalidParameter("beta: both shape parameters must be positive");
  }
  const double lx = log_gamma_variate(a, rng);
  const double ly = log_gamma_variate(b, rng);
  // x / (x + y) in log space.
  return 1.0 / (1.0 + std::exp(ly - lx));
}

bool sample_bernoulli(double p, RandomStream& rng) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("bernoulli: p outside [0,1]");
  return rng.uniform() < p;
}

long sample_geometric(double p, RandomStream& rng) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidParameter("geometric: p outside (0,1]");
  if (p == 1.0) return 0;
  return static_cast<long>(std::floor(std::log(rng.uniform()) / std::log1p(-p)));
}

long sample_binomial(long trials, double p, RandomStream& rng) {
  if (trials < 0) throw InvalidParameter("binomial: negative trial count");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidParameter("binomial: p outside [0,1]");
  long successes = 0;
  // Order-statistic splitting keeps the work logarithmic in the trial count.
  while (trials > 64 && p > 0.0 && p < 1.0) {
    const long i = trials / 2 + 1;
    const double x = sample_beta(static_cast<double>(i),
                                 static_cast<double>(trials + 1 - i), rng);
    if (x >= p) {
      trials = i - 1;
      p /= x;
    } else {
      successes += i;
      trials -= i;
      p = (p - x) / (1.0 - x);
    }
  }
  if (p <= 0.0) return successes;
  if (p >= 1.0) return successes + trials;
  for (long j = 0; j < trials; ++j) successes += rng.uniform() < p ? 1 : 0;
  return successes;
}

std::size_t sample_categorical(std::span<const double> weights, RandomStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw InvalidParameter("categorical: weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw InvalidParameter("categorical: weights sum to zero");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

std::size_t sample_categorical_log(std::span<const double> log_weights,
                                   RandomStream& rng) {
  double top = -kInf;
  for (double lw : log_weights) top = std::max(top, lw);
  if (top == -kInf || std::isnan(top)) {
    throw InvalidParameter("categorical: no category has positive weight");
  }
  // Small fixed-size buffer; callers pass at most a handful of clusters.
  Eigen::VectorXd w(static_cast<Eigen::Index>(log_weights.size()));
  for (std::size_t i = 0; i < log_weights.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] = std::exp(log_weights[i] - top);
  }
  return sample_categorical(std::span<const double>(w.data(), log_weights.size()), rng);
}

namespace {

std::string condition_report(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
  std::ostringstream os;
  if (eig.info() != Eigen::Success) {
    os << "eigen-decomposition failed";
    return os.str();
  }
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  os << "min eigenvalue " << lo << ", max eigenvalue " << hi
     << ", condition number " << (lo > 0.0 ? hi / lo : kInf);
  return os.str();
}

Eigen::VectorXd standard_normals(Eigen::Index dim, RandomStream& rng) {
  Eigen::VectorXd z(dim);
  for (Eigen::Index i = 0; i < dim; ++i) z[i] = rng.normal();
  return z;
}

}  // namespace

Eigen::VectorXd sample_mvn(const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& covariance, RandomStream& rng) {
  if (covariance.rows() != covariance.cols() || covariance.rows() != mean.size()) {
    throw InvalidParameter("mvn: mean/covariance dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() != Eigen::Success) {
    throw NumericError("mvn: covariance is not positive definite (" +
                       condition_report(covariance) + ")");
  }
  return mean + llt.matrixL() * standard_normals(mean.size(), rng);
}

Eigen::VectorXd sample_mvn_canonical(const Eigen::MatrixXd& precision,
                                     const Eigen::VectorXd& shift, RandomStream& rng) {
  if (precision.rows() != precision.cols() || precision.rows() != shift.size()) {
    throw InvalidParameter("mvn: precision/shift dimension mismatch");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) {
    throw NumericError("mvn: precision matrix is not positive definite (" +
                       condition_report(precision) + ")");
  }
  Eigen::VectorXd mean = llt.solve(shift);
  Eigen::VectorXd noise =
      llt.matrixU().solve(standard_normals(shift.size(), rng));
  return mean + noise;
}

}  // namespace avc
