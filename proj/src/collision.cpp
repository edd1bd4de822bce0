#include "avc/collision.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "avc/errors.hpp"
#include "avc/polya_gamma.hpp"

namespace avc {

RegressionState make_regression_state(const Dataset& data) {
  RegressionState st;
  st.beta = Eigen::VectorXd::Zero(data.segment_dim());
  st.alpha = Eigen::VectorXd::Zero(data.months());
  st.gamma = Eigen::MatrixXd::Zero(data.months(), data.time_dim());
  st.q = Eigen::VectorXd::Constant(data.months(), 0.5);
  st.indicator = Eigen::VectorXi::Zero(data.cells());
  st.omega = Eigen::VectorXd::Zero(data.cells());
  st.kappa = Eigen::VectorXd::Zero(data.cells());
  return st;
}

Eigen::VectorXd linear_predictors(const RegressionState& state, const Dataset& data) {
  const Eigen::VectorXd xb = data.x() * state.beta;
  Eigen::VectorXd psi(data.cells());
  const auto S = data.segments();
  for (int t = 0; t < data.months(); ++t) {
    const auto block = data.y().middleRows(t * S, S);
    psi.segment(t * S, S) = xb + block * state.gamma.row(t).transpose();
    for (Eigen::Index s = 0; s < S; ++s) {
      if (state.indicator[t * S + s] != 0) psi[t * S + s] += state.alpha[t];
    }
  }
  return psi;
}

void refresh_kappa(RegressionState& state, const Eigen::VectorXi& crossings,
                   const Eigen::VectorXi& counts) {
  state.kappa = counts.cast<double>() - 0.5 * crossings.cast<double>();
}

void augment_polya_gamma(RegressionState& state, const Eigen::VectorXi& crossings,
                         const Eigen::VectorXd& psi, RandomStream& rng, long normal_threshold) {
  for (Eigen::Index c = 0; c < crossings.size(); ++c) {
    state.omega[c] =
        crossings[c] > 0 ? sample_polya_gamma(crossings[c], psi[c], rng, normal_threshold) : 0.0;
  }
}

Eigen::VectorXd GaussianConditional::mean() const {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericError("conditional precision is not PD");
  return llt.solve(shift);
}

Eigen::MatrixXd GaussianConditional::covariance() const {
  Eigen::LLT<Eigen::MatrixXd> llt(precision);
  if (llt.info() != Eigen::Success) throw NumericError("conditional precision is not PD");
  return llt.solve(Eigen::MatrixXd::Identity(precision.rows(), precision.cols()));
}

GaussianConditional beta_conditional(const RegressionState& state,
                                     const Eigen::VectorXi& crossings, const Dataset& data,
                                     const Eigen::VectorXd& prior_precision) {
  const auto S = data.segments();
  const auto P = data.segment_dim();
  if (prior_precision.size() != P) throw InvalidParameter("beta prior dimension mismatch");
  // Per-segment totals over months: sum omega and sum (kappa - omega * offset).
  Eigen::VectorXd weight = Eigen::VectorXd::Zero(S);
  Eigen::VectorXd response = Eigen::VectorXd::Zero(S);
  for (int t = 0; t < data.months(); ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto c = t * S + s;
      if (crossings[c] == 0) continue;
      double offset = data.y().row(c).dot(state.gamma.row(t));
      if (state.indicator[c] != 0) offset += state.alpha[t];
      weight[s] += state.omega[c];
      response[s] += state.kappa[c] - state.omega[c] * offset;
    }
  }
  GaussianConditional g;
  g.precision = data.x().transpose() * weight.asDiagonal() * data.x();
  g.precision.diagonal() += prior_precision;
  g.shift = data.x().transpose() * response;
  return g;
}

GaussianConditional time_conditional(const RegressionState& state,
                                     const Eigen::VectorXi& crossings, const Dataset& data,
                                     int month, const Eigen::VectorXd& prior_precision) {
  const auto S = data.segments();
  const auto D = 1 + data.time_dim();
  if (prior_precision.size() != D) throw InvalidParameter("time prior dimension mismatch");
  GaussianConditional g;
  g.precision = Eigen::MatrixXd::Zero(D, D);
  g.shift = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd z(D);
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto c = month * S + s;
    if (crossings[c] == 0) continue;
    z[0] = state.indicator[c] != 0 ? 1.0 : 0.0;
    z.tail(D - 1) = data.y().row(c).transpose();
    const double w = state.omega[c];
    g.precision.selfadjointView<Eigen::Lower>().rankUpdate(z, w);
    g.shift += z * (state.kappa[c] - w * data.x().row(s).dot(state.beta));
  }
  g.precision.triangularView<Eigen::StrictlyUpper>() = g.precision.transpose();
  g.precision.diagonal() += prior_precision;
  return g;
}

void update_beta(RegressionState& state, const Eigen::VectorXi& crossings, const Dataset& data,
                 const RegressionPrior& prior, RandomStream& rng) {
  const auto g = beta_conditional(
      state, crossings, data,
      Eigen::VectorXd::Constant(data.segment_dim(), 1.0 / prior.beta_variance));
  try {
    state.beta = sample_mvn_canonical(g.precision, g.shift, rng);
  } catch (const NumericError& e) {
    throw NumericError(std::string("beta update: ") + e.what());
  }
}

void update_time_varying(RegressionState& state, const Eigen::VectorXi& crossings,
                         const Dataset& data, int month, const RegressionPrior& prior,
                         RandomStream& rng) {
  const auto g = time_conditional(
      state, crossings, data, month,
      Eigen::VectorXd::Constant(1 + data.time_dim(), 1.0 / prior.time_variance));
  Eigen::VectorXd draw;
  try {
    draw = sample_mvn_canonical(g.precision, g.shift, rng);
  } catch (const NumericError& e) {
    throw NumericError("month " + std::to_string(month + 1) + " update: " + e.what());
  }
  state.alpha[month] = draw[0];
  state.gamma.row(month) = draw.tail(data.time_dim()).transpose();
}

double indicator_probability(double kappa, double omega, double psi0, double alpha, double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  const double psi1 = psi0 + alpha;
  const double log_ratio =
      (kappa * psi1 - 0.5 * omega * psi1 * psi1) - (kappa * psi0 - 0.5 * omega * psi0 * psi0);
  // q e^r / ((1 - q) + q e^r) as a logistic of the log odds.
  return collision_prob(log_ratio + std::log(q) - std::log1p(-q));
}

void update_indicators(RegressionState& state, const Dataset& data, RandomStream& rng) {
  const auto S = data.segments();
  const Eigen::VectorXd xb = data.x() * state.beta;
  for (int t = 0; t < data.months(); ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto c = t * S + s;
      const double psi0 = xb[s] + data.y().row(c).dot(state.gamma.row(t));
      const double p =
          indicator_probability(state.kappa[c], state.omega[c], psi0, state.alpha[t], state.q[t]);
      state.indicator[c] = rng.uniform() < p ? 1 : 0;
    }
  }
}

namespace {

// log cosh(x), stable for large |x|.
double log_cosh(double x) {
  const double a = std::abs(x);
  return a + std::log1p(std::exp(-2.0 * a)) - std::log(2.0);
}

}  // namespace

double indicator_probability_marginal(double kappa, long crossings, double psi0, double alpha,
                                      double q) {
  if (q <= 0.0) return 0.0;
  if (q >= 1.0) return 1.0;
  const double psi1 = psi0 + alpha;
  const double n = static_cast<double>(crossings);
  const double log_ratio =
      kappa * alpha - n * (log_cosh(0.5 * psi1) - log_cosh(0.5 * psi0));
  return collision_prob(log_ratio + std::log(q) - std::log1p(-q));
}

void update_indicators_marginal(RegressionState& state, const Eigen::VectorXi& crossings,
                                const Dataset& data, RandomStream& rng) {
  const auto S = data.segments();
  const Eigen::VectorXd xb = data.x() * state.beta;
  for (int t = 0; t < data.months(); ++t) {
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto c = t * S + s;
      const double psi0 = xb[s] + data.y().row(c).dot(state.gamma.row(t));
      const double p = indicator_probability_marginal(state.kappa[c], crossings[c], psi0,
                                                      state.alpha[t], state.q[t]);
      state.indicator[c] = rng.uniform() < p ? 1 : 0;
    }
  }
}

long update_alpha_q_collapsed(RegressionState& state, const Eigen::VectorXi& crossings,
                              const Dataset& data, int month, const RegressionPrior& prior,
                              int steps, double step_size, RandomStream& rng) {
  const auto S = data.segments();
  const auto first = month * S;
  // Only cells with exposure respond to alpha; the rest contribute log 1.
  std::vector<double> psi0;
  std::vector<double> kappa;
  std::vector<double> n;
  std::vector<double> base;  // log cosh(psi0 / 2), fixed during the move
  const Eigen::VectorXd xb = data.x() * state.beta;
  for (Eigen::Index s = 0; s < S; ++s) {
    const auto c = first + s;
    if (crossings[c] == 0) continue;
    psi0.push_back(xb[s] + data.y().row(c).dot(state.gamma.row(month)));
    kappa.push_back(state.kappa[c]);
    n.push_back(static_cast<double>(crossings[c]));
    base.push_back(log_cosh(0.5 * psi0.back()));
  }
  auto log_target = [&](double alpha, double logit_q) {
    const double log_q = -std::log1p(std::exp(-logit_q));
    const double log_1mq = -std::log1p(std::exp(logit_q));
    double total = -0.5 * alpha * alpha / prior.time_variance + prior.q_a * log_q +
                   prior.q_b * log_1mq;
    for (std::size_t i = 0; i < psi0.size(); ++i) {
      const double r = kappa[i] * alpha -
                       n[i] * (log_cosh(0.5 * (psi0[i] + alpha)) - base[i]);
      // log(q e^r + 1 - q) without overflow
      const double a = log_q + r;
      const double hi = std::max(a, log_1mq);
      total += hi + std::log1p(std::exp(std::min(a, log_1mq) - hi));
    }
    return total;
  };
  double alpha = state.alpha[month];
  double lq = std::log(state.q[month]) - std::log1p(-state.q[month]);
  double current = log_target(alpha, lq);
  long accepted = 0;
  for (int i = 0; i < 3 * steps; ++i) {
    double a2 = alpha;
    double l2 = lq;
    switch (i % 3) {
      case 0: a2 += step_size * rng.normal(); break;
      case 1: l2 += step_size * rng.normal(); break;
      default: {
        const double u = step_size * rng.normal();
        a2 += u;
        l2 -= u;
      }
    }
    const double proposed = log_target(a2, l2);
    if (std::log(rng.uniform()) < proposed - current) {
      alpha = a2;
      lq = l2;
      current = proposed;
      ++accepted;
    }
  }
  state.alpha[month] = alpha;
  state.q[month] = std::clamp(collision_prob(lq), std::numeric_limits<double>::min(),
                              1.0 - 0x1.0p-53);
  return accepted;
}

void update_q(RegressionState& state, const Dataset& data, int month,
              const RegressionPrior& prior, RandomStream& rng) {
  const auto S = data.segments();
  const long on = state.indicator.segment(month * S, S).sum();
  const double draw = sample_beta(prior.q_a + static_cast<double>(on),
                                  prior.q_b + static_cast<double>(S - on), rng);
  // Keep q strictly inside (0, 1) when a Beta draw rounds to an endpoint.
  state.q[month] = std::clamp(draw, std::numeric_limits<double>::min(), 1.0 - 0x1.0p-53);
}

}  // namespace avc
