#pragma once

// Latent crossing counts under a truncated Dirichlet-process mixture.
//
// Each segment-month carries a count n of animal road crossings. Its prior is
// a stick-breaking mixture over C clusters; cluster l has a normal kernel
// (mean mu_l, variance sigma2_l) truncated below at -1/2 and discretized so
// that n = k covers the latent interval (k - 1/2, k + 1/2]. One sweep of the
// block runs, in order: cluster assignment, stick weights, continuization of
// n into n*, cluster parameter update, and a Metropolis-Hastings move on n.

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "avc/random.hpp"

namespace avc {

struct DpHyperparameters {
  int clusters = 3;
  double precision = 1.0;  // DP concentration
  double mu0 = 0.0;
  double d0 = 2.0;  // Gamma shape of the base precision
  double e0 = 10.0;  // Gamma rate of the base precision
};

/// How cluster (mu, sigma2) pairs are redrawn.
enum class ClusterUpdate {
  /// Normal-Gamma draw on a likelihood completed with the rejected draws of
  /// the -1/2 truncation, followed by an independence MH correction for the
  /// truncation of mu. Leaves the exact conditional invariant.
  augmented,
  /// The plain Normal-Gamma conjugate draw, ignoring both truncations.
  conjugate,
};

struct DpState {
  Eigen::VectorXd mean;      // mu*_l >= -1/2
  Eigen::VectorXd variance;  // sigma*^2_l > 0
  Eigen::VectorXd sticks;    // V_l, V_C = 1
  Eigen::VectorXd weights;   // w_l, sums to 1

  int clusters() const { return static_cast<int>(mean.size()); }
  double sd(int l) const { return std::sqrt(variance[l]); }
};

struct ExposureState {
  Eigen::VectorXi crossings;  // n per cell
  Eigen::VectorXd latent;     // n* per cell
  Eigen::VectorXi cluster;    // 0-based assignment per cell
};

/// Count represented by a latent value: the integer n with n* in (n-1/2, n+1/2].
inline long nearest_crossings(double latent) {
  return static_cast<long>(std::ceil(latent - 0.5));
}

/// Discretized truncated-normal kernel probability of count n.
double kernel_pmf(long n, double mu, double sigma);
double log_kernel_pmf(long n, double mu, double sigma);

/// Stick-breaking weights from sticks V (last stick taken as 1). The final
/// weight is the complement of the others so the left-to-right sum is 1.
Eigen::VectorXd stick_weights(const Eigen::VectorXd& sticks);

/// Per-sweep lookup of log kernel values and of the mixture pmf over
/// 0..cap, used both for cluster assignment and as the MH proposal.
class MixtureTable {
 public:
  MixtureTable(const DpState& dp, long cap);

  long cap() const { return cap_; }
  double log_kernel(int cluster, long n) const;
  double mixture_pmf(long n) const;
  /// Draw n from the mixture restricted to 0..cap.
  long sample(RandomStream& rng) const;
  double log_factorial(long n) const;

 private:
  const DpState* dp_;
  long cap_;
  Eigen::MatrixXd log_kernel_;  // (cap+1) x C
  Eigen::VectorXd log_weight_;
  std::vector<double> cdf_;
  std::vector<double> log_factorial_;
};

/// Proposal truncation point: max(floor_cap, 10 * max_count, ceil(mu + 10 sd)
/// over clusters), so the omitted mixture tail stays below 1e-9.
long proposal_cap(const DpState& dp, long floor_cap, long max_count);

/// Draw every cell's cluster from w_l p(n | mu_l, sigma2_l), normalized in
/// log space.
void assign_clusters(ExposureState& exposure, const DpState& dp,
                     const MixtureTable& table, RandomStream& rng);

Eigen::VectorXi cluster_occupancy(const Eigen::VectorXi& cluster, int clusters);

/// V_l ~ Beta(1 + n_l, precision + sum_{i>l} n_i) for l < C, V_C = 1.
void update_stick_weights(DpState& dp, const Eigen::VectorXi& occupancy,
                          double precision, RandomStream& rng);

/// Draw n* from the cell's kernel restricted to (n - 1/2, n + 1/2) by the
/// inverse-CDF construction. Falls back to n* = n when the interval has no
/// representable probability.
double sample_latent_continuous(long n, double mu, double sigma, RandomStream& rng);

void continuize(ExposureState& exposure, const DpState& dp, RandomStream& rng);

/// Sufficient statistics of a set of latent values.
struct ClusterStatistics {
  long count = 0;
  double sum = 0.0;
  double centered_ss = 0.0;   // sum (x - mean)^2
  double centered_sum = 0.0;  // sum (x - mean), zero up to rounding

  double mean() const { return count > 0 ? sum / static_cast<double>(count) : 0.0; }
  void merge(const ClusterStatistics& other);
  static ClusterStatistics of(const std::vector<double>& values);
};

/// Normal-Gamma posterior of (mu, 1/sigma2) given statistics of n* values:
/// 1/sigma2 ~ Gamma(shape, rate) and mu | sigma2 ~ Normal(location,
/// sigma2 / scale) before the mu >= -1/2 restriction.
struct NormalGammaPosterior {
  double shape = 0.0;
  double rate = 0.0;
  double location = 0.0;
  double scale = 1.0;  // 1 + count
};

/// `unsquared_rate` reproduces a misprinted rate term (sum of unsquared
/// deviations); used only to check that the joint-distribution test can see it.
NormalGammaPosterior cluster_posterior(const ClusterStatistics& stats,
                                       const DpHyperparameters& hyper,
                                       bool unsquared_rate = false);

/// Draw (mu, sigma2) from the base distribution: 1/sigma2 ~ Gamma(d0, e0),
/// mu ~ Normal(mu0, sigma2) restricted to mu >= -1/2.
void draw_cluster_from_base(DpState& dp, int l, const DpHyperparameters& hyper,
                            RandomStream& rng);

struct ClusterUpdateOptions {
  ClusterUpdate method = ClusterUpdate::augmented;
  bool unsquared_rate = false;
};

/// Returns the number of accepted MH corrections (augmented method only).
int update_cluster_params(DpState& dp, const ExposureState& exposure,
                          const DpHyperparameters& hyper,
                          const ClusterUpdateOptions& options, RandomStream& rng);

/// Independence MH move on one cell's count. The proposal is the mixture pmf
/// (truncated at the table cap); the acceptance ratio is the ratio of
/// Binomial(k | n, p) likelihoods. log_one_minus_p = log(1 - p).
struct CrossingMove {
  long crossings;
  bool accepted;
};
CrossingMove mh_update_crossings(long observed, long current, double log_one_minus_p,
                                 const MixtureTable& table, RandomStream& rng);

/// Initial exposure: z uniform, n = max(k, draw from the prior mixture),
/// n* drawn inside n's interval under the assigned cluster.
ExposureState initial_exposure(const Eigen::VectorXi& counts, const DpState& dp,
                               const MixtureTable& table, RandomStream& rng);

/// Initial DP state: sticks from Beta(1, precision), clusters from the base.
DpState initial_dp_state(const DpHyperparameters& hyper, RandomStream& rng);

}  // namespace avc
