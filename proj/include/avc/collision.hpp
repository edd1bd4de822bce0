#pragma once

// Collision-probability block: Polya-Gamma augmentation and the conditional
// updates of the logistic regression parameters.
//
//   psi_{s,t} = alpha_t I_{s,t} + beta' x_s + gamma_t' y_{s,t},   p = logistic(psi)
//
// Given crossings n and augmentation variables omega ~ PG(n, psi), the
// binomial likelihood is proportional to exp(kappa psi - omega psi^2 / 2) with
// kappa = k - n/2, so beta and each month's [alpha_t, gamma_t] have Gaussian
// conditionals. Cells with n = 0 carry omega = kappa = 0 and drop out.

#include <cmath>

#include <Eigen/Dense>

#include "avc/dataset.hpp"
#include "avc/random.hpp"

namespace avc {

struct RegressionPrior {
  double beta_variance = 100.0;  // diagonal of B0
  double time_variance = 100.0;  // diagonal of D0
  double q_a = 1.0;              // Beta prior on q_t
  double q_b = 1.0;
};

/// How the indicators I are redrawn in the collision block.
enum class IndicatorUpdate {
  /// From the Polya-Gamma augmented likelihood given omega.
  augmented,
  /// From the binomial likelihood, omega integrated out.
  marginal,
};

struct RegressionState {
  Eigen::VectorXd beta;       // P
  Eigen::VectorXd alpha;      // T, month-specific constant effect
  Eigen::MatrixXd gamma;      // T x Q
  Eigen::VectorXd q;          // T, indicator probabilities
  Eigen::VectorXi indicator;  // per cell
  Eigen::VectorXd omega;      // per cell
  Eigen::VectorXd kappa;      // per cell
};

/// Logistic collision probability, symmetric to rounding: p(-x) = 1 - p(x).
template <typename Scalar>
Scalar collision_prob(Scalar psi) {
  using std::exp;
  if (psi >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-psi));
  const Scalar e = exp(psi);
  return e / (Scalar(1) + e);
}

/// log(1 - p) = -log(1 + e^psi), finite for every finite psi.
inline double log_one_minus_collision_prob(double psi) {
  return psi > 0.0 ? -psi - std::log1p(std::exp(-psi)) : -std::log1p(std::exp(psi));
}

/// Zero-initialized state sized for the dataset (q = 1/2, I = 0).
RegressionState make_regression_state(const Dataset& data);

/// psi for every cell under the current parameters.
Eigen::VectorXd linear_predictors(const RegressionState& state, const Dataset& data);

/// kappa = k - n/2 per cell.
void refresh_kappa(RegressionState& state, const Eigen::VectorXi& crossings,
                   const Eigen::VectorXi& counts);

/// omega ~ PG(n, psi) where n > 0, omega = 0 elsewhere.
void augment_polya_gamma(RegressionState& state, const Eigen::VectorXi& crossings,
                         const Eigen::VectorXd& psi, RandomStream& rng,
                         long normal_threshold);

/// Gaussian full conditional in canonical form: precision and
/// shift = precision * mean.
struct GaussianConditional {
  Eigen::MatrixXd precision;
  Eigen::VectorXd shift;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
};

/// beta | rest. `prior_precision` is the diagonal of B0^{-1} (may be zero).
GaussianConditional beta_conditional(const RegressionState& state,
                                     const Eigen::VectorXi& crossings, const Dataset& data,
                                     const Eigen::VectorXd& prior_precision);

/// [alpha_t, gamma_t] | rest for 0-based month t, regressors z = [I, y'].
GaussianConditional time_conditional(const RegressionState& state,
                                     const Eigen::VectorXi& crossings, const Dataset& data,
                                     int month, const Eigen::VectorXd& prior_precision);

void update_beta(RegressionState& state, const Eigen::VectorXi& crossings,
                 const Dataset& data, const RegressionPrior& prior, RandomStream& rng);

void update_time_varying(RegressionState& state, const Eigen::VectorXi& crossings,
                         const Dataset& data, int month, const RegressionPrior& prior,
                         RandomStream& rng);

/// P(I = 1 | rest) given the augmented likelihood at psi without the alpha
/// term (psi0) and with it (psi0 + alpha). Evaluated in log space.
double indicator_probability(double kappa, double omega, double psi0, double alpha,
                             double q);

void update_indicators(RegressionState& state, const Dataset& data, RandomStream& rng);

/// P(I = 1 | rest) with omega integrated out: the exact binomial likelihood
/// ratio, written through kappa = k - n/2 as
/// kappa (psi1 - psi0) - n [log cosh(psi1/2) - log cosh(psi0/2)].
double indicator_probability_marginal(double kappa, long crossings, double psi0, double alpha,
                                      double q);

/// Indicator draw that does not condition on omega. Valid inside the sweep
/// because omega is redrawn before its next use.
void update_indicators_marginal(RegressionState& state, const Eigen::VectorXi& crossings,
                                const Dataset& data, RandomStream& rng);

/// Random-walk Metropolis on (alpha_t, logit q_t) with every indicator of the
/// month summed out. Each of `steps` rounds proposes alpha alone, logit q
/// alone, then both along the alpha-up/q-down ridge. The indicators must be
/// redrawn afterwards (update_indicators_marginal does so). Returns the number
/// of accepted proposals.
long update_alpha_q_collapsed(RegressionState& state, const Eigen::VectorXi& crossings,
                              const Dataset& data, int month, const RegressionPrior& prior,
                              int steps, double step_size, RandomStream& rng);

/// q_t ~ Beta(a + sum I, b + sum (1 - I)) over month t's cells.
void update_q(RegressionState& state, const Dataset& data, int month,
              const RegressionPrior& prior, RandomStream& rng);

}  // namespace avc
