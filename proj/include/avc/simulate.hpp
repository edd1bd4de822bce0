#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "avc/dataset.hpp"
#include "avc/random.hpp"

namespace avc {

/// Marginal distribution of one synthetic covariate.
struct CovariateDistribution {
  enum class Kind { constant, normal, uniform, bernoulli, gamma };
  Kind kind = Kind::normal;
  double a = 0.0;  // constant value / mean / lower / p / shape
  double b = 1.0;  // sd / upper / rate

  /// Parse "normal:0:1", "uniform:40:75", "bernoulli:0.3", "gamma:2:1",
  /// "constant:1".
  static CovariateDistribution parse(const std::string& text);
  double draw(RandomStream& rng) const;
};

/// Everything needed to forward-simulate the hierarchy.
struct GenerationSpec {
  int segments = 100;
  int months = 12;
  std::vector<std::string> segment_covariates;
  std::vector<CovariateDistribution> segment_distributions;
  std::vector<std::string> time_covariates;
  std::vector<CovariateDistribution> time_distributions;

  Eigen::VectorXd beta;   // P
  Eigen::VectorXd alpha;  // T
  Eigen::MatrixXd gamma;  // T x Q
  Eigen::VectorXd q;      // T

  Eigen::VectorXd cluster_mean;  // C
  Eigen::VectorXd cluster_sd;    // C
  /// C weights shared by all months, or T x C for month-specific exposure.
  Eigen::MatrixXd cluster_weights;

  void validate() const;
};

struct GroundTruth {
  Eigen::VectorXd beta;
  Eigen::VectorXd alpha;
  Eigen::MatrixXd gamma;
  Eigen::VectorXd q;
  Eigen::VectorXd cluster_mean;
  Eigen::VectorXd cluster_sd;
  Eigen::MatrixXd cluster_weights;
  Eigen::VectorXi crossings;  // n per cell
  Eigen::VectorXd latent;     // n* per cell
  Eigen::VectorXi cluster;    // per cell
  Eigen::VectorXi indicator;  // per cell
  Eigen::VectorXd probability;  // p per cell
};

/// The parameter-recovery design: five centered segment covariates (length,
/// log_adt, speed_limit, urban, median_barrier) whose effects spread the
/// collision probability over most of (0, 1), one time-varying covariate
/// (snow), month effects that are low in months 6-8 and high in 10-12, q = 1/2,
/// and three exposure clusters shared by all months. With probabilities this
/// spread out the binomial thinning pins down the exposure level; when every p
/// is small, n and p trade off along a near-flat ridge.
GenerationSpec recovery_spec(int segments = 500, int months = 12);

/// Draw covariates, then for every cell: cluster, n* from the truncated
/// kernel, n = nearest integer, I ~ Bernoulli(q_t), psi, p, k ~ Binomial(n, p).
std::pair<Dataset, GroundTruth> simulate_dataset(const GenerationSpec& spec,
                                                 RandomStream& rng);

/// Same generative draw of latents and counts on a fixed design.
std::pair<Dataset, GroundTruth> simulate_on_design(const GenerationSpec& spec,
                                                   const Dataset& design, RandomStream& rng);

}  // namespace avc
