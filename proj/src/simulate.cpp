#include "avc/simulate.hpp"

#include <cstdio>
#include <sstream>

#include "avc/collision.hpp"
#include "avc/errors.hpp"
#include "avc/exposure.hpp"

namespace avc {

CovariateDistribution CovariateDistribution::parse(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  if (parts.empty()) throw ConfigError("empty covariate distribution");
  auto number = [&](std::size_t i) {
    if (i >= parts.size()) throw ConfigError("covariate distribution '" + text + "' is missing a parameter");
    try {
      return std::stod(parts[i]);
    } catch (const std::exception&) {
      throw ConfigError("covariate distribution '" + text + "' has a non-numeric parameter");
    }
  };
  CovariateDistribution d;
  const auto& kind = parts[0];
  if (kind == "constant") {
    d.kind = Kind::constant;
    d.a = number(1);
  } else if (kind == "normal") {
    d.kind = Kind::normal;
    d.a = number(1);
    d.b = number(2);
    if (!(d.b > 0.0)) throw ConfigError("normal covariate needs sd > 0");
  } else if (kind == "uniform") {
    d.kind = Kind::uniform;
    d.a = number(1);
    d.b = number(2);
    if (!(d.b > d.a)) throw ConfigError("uniform covariate needs upper > lower");
  } else if (kind == "bernoulli") {
    d.kind = Kind::bernoulli;
    d.a = number(1);
    if (!(d.a >= 0.0 && d.a <= 1.0)) throw ConfigError("bernoulli covariate needs p in [0,1]");
  } else if (kind == "gamma") {
    d.kind = Kind::gamma;
    d.a = number(1);
    d.b = number(2);
    if (!(d.a > 0.0 && d.b > 0.0)) throw ConfigError("gamma covariate needs shape, rate > 0");
  } else {
    throw ConfigError("unknown covariate distribution '" + kind + "'");
  }
  return d;
}

double CovariateDistribution::draw(RandomStream& rng) const {
  switch (kind) {
    case Kind::constant:
      return a;
    case Kind::normal:
      return a + b * rng.normal();
    case Kind::uniform:
      return a + (b - a) * rng.uniform();
    case Kind::bernoulli:
      return rng.uniform() < a ? 1.0 : 0.0;
    case Kind::gamma:
      return sample_gamma(a, b, rng);
  }
  return 0.0;
}

void GenerationSpec::validate() const {
  if (segments < 1) throw ConfigError("generation: segments must be >= 1");
  if (months < 1) throw ConfigError("generation: months must be >= 1");
  const auto P = static_cast<Eigen::Index>(segment_covariates.size());
  const auto Q = static_cast<Eigen::Index>(time_covariates.size());
  if (P == 0) throw ConfigError("generation: at least one segment covariate is required");
  if (segment_distributions.size() != segment_covariates.size()) {
    throw ConfigError("generation: one distribution per segment covariate is required");
  }
  if (time_distributions.size() != time_covariates.size()) {
    throw ConfigError("generation: one distribution per time covariate is required");
  }
  if (beta.size() != P) throw ConfigError("generation: beta has the wrong length");
  if (alpha.size() != months) throw ConfigError("generation: alpha needs one value per month");
  if (gamma.rows() != months || gamma.cols() != Q) {
    throw ConfigError("generation: gamma must be months x time covariates");
  }
  if (q.size() != months) throw ConfigError("generation: q needs one value per month");
  for (Eigen::Index t = 0; t < q.size(); ++t) {
    if (!(q[t] >= 0.0 && q[t] <= 1.0)) throw ConfigError("generation: q outside [0,1]");
  }
  const auto C = cluster_mean.size();
  if (C == 0 || cluster_sd.size() != C) {
    throw ConfigError("generation: cluster means and sds must be nonempty and equal length");
  }
  if ((cluster_sd.array() <= 0.0).any()) throw ConfigError("generation: cluster sd must be > 0");
  if ((cluster_mean.array() < -0.5).any()) throw ConfigError("generation: cluster mean < -0.5");
  if (cluster_weights.cols() != C || (cluster_weights.rows() != 1 && cluster_weights.rows() != months)) {
    throw ConfigError("generation: cluster weights must be 1 x C or months x C");
  }
  if ((cluster_weights.array() < 0.0).any()) throw ConfigError("generation: negative weight");
}

GenerationSpec recovery_spec(int segments, int months) {
  GenerationSpec g;
  g.segments = segments;
  g.months = months;
  g.segment_covariates = {"length", "log_adt", "speed_limit", "urban", "median_barrier"};
  for (const char* d : {"uniform:-1:1", "normal:0:1", "normal:0:8", "bernoulli:0.3",
                        "bernoulli:0.2"}) {
    g.segment_distributions.push_back(CovariateDistribution::parse(d));
  }
  g.beta = (Eigen::VectorXd(5) << 1.0, -1.5, 0.1, -1.0, -0.8).finished();
  g.time_covariates = {"snow"};
  g.time_distributions = {CovariateDistribution::parse("normal:0:1")};
  g.gamma = Eigen::MatrixXd::Constant(months, 1, 0.2);
  const double seasonal[12] = {1, 1, 1, 1, 1, -1.5, -1.5, -1.5, 1, 2, 2, 2};
  g.alpha.resize(months);
  for (int t = 0; t < months; ++t) g.alpha[t] = seasonal[t % 12];
  g.q = Eigen::VectorXd::Constant(months, 0.5);
  g.cluster_mean = Eigen::Vector3d(3.0, 8.0, 15.0);
  g.cluster_sd = Eigen::Vector3d(2.0, 4.0, 6.0);
  g.cluster_weights = Eigen::RowVector3d(0.5, 0.3, 0.2);
  return g;
}

std::pair<Dataset, GroundTruth> simulate_dataset(const GenerationSpec& spec, RandomStream& rng) {
  spec.validate();
  const Eigen::Index S = spec.segments;
  const int T = spec.months;
  const auto P = static_cast<Eigen::Index>(spec.segment_covariates.size());
  const auto Q = static_cast<Eigen::Index>(spec.time_covariates.size());

  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(S));
  for (Eigen::Index s = 0; s < S; ++s) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "seg%05ld", static_cast<long>(s + 1));
    ids.emplace_back(buf);
  }
  Eigen::MatrixXd x(S, P);
  for (Eigen::Index s = 0; s < S; ++s) {
    for (Eigen::Index j = 0; j < P; ++j) {
      x(s, j) = spec.segment_distributions[static_cast<std::size_t>(j)].draw(rng);
    }
  }
  Eigen::MatrixXd y(S * T, Q);
  for (Eigen::Index c = 0; c < S * T; ++c) {
    for (Eigen::Index j = 0; j < Q; ++j) {
      y(c, j) = spec.time_distributions[static_cast<std::size_t>(j)].draw(rng);
    }
  }
  Dataset design(std::move(ids), spec.segment_covariates, std::move(x), spec.time_covariates,
                 std::move(y), Eigen::VectorXi::Zero(S * T), T);
  return simulate_on_design(spec, design, rng);
}

std::pair<Dataset, GroundTruth> simulate_on_design(const GenerationSpec& spec,
                                                   const Dataset& design, RandomStream& rng) {
  const auto S = design.segments();
  const int T = design.months();
  if (design.segment_dim() != spec.beta.size() || design.time_dim() != spec.gamma.cols() ||
      T != spec.alpha.size()) {
    throw ConfigError("generation: parameters do not match the design dimensions");
  }
  GroundTruth truth;
  truth.beta = spec.beta;
  truth.alpha = spec.alpha;
  truth.gamma = spec.gamma;
  truth.q = spec.q;
  truth.cluster_mean = spec.cluster_mean;
  truth.cluster_sd = spec.cluster_sd;
  truth.cluster_weights = spec.cluster_weights;
  truth.crossings.resize(S * T);
  truth.latent.resize(S * T);
  truth.cluster.resize(S * T);
  truth.indicator.resize(S * T);
  truth.probability.resize(S * T);

  Eigen::VectorXi k(S * T);
  const Eigen::VectorXd xb = design.x() * spec.beta;
  for (int t = 0; t < T; ++t) {
    const Eigen::VectorXd w = spec.cluster_weights.row(spec.cluster_weights.rows() == 1 ? 0 : t);
    for (Eigen::Index s = 0; s < S; ++s) {
      const auto c = design.cell(s, t);
      const auto l = static_cast<Eigen::Index>(
          sample_categorical(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), rng));
      const double latent =
          sample_truncated_normal({spec.cluster_mean[l], spec.cluster_sd[l], -0.5}, rng);
      // Values exactly at -1/2 belong to no count interval; nudge inside.
      const double kept = latent > -0.5 ? latent : std::nextafter(-0.5, 0.0);
      const long n = nearest_crossings(kept);
      const bool on = sample_bernoulli(spec.q[t], rng);
      double psi = xb[s] + design.y().row(c).dot(spec.gamma.row(t));
      if (on) psi += spec.alpha[t];
      const double p = collision_prob(psi);
      truth.cluster[c] = static_cast<int>(l);
      truth.latent[c] = kept;
      truth.crossings[c] = static_cast<int>(n);
      truth.indicator[c] = on ? 1 : 0;
      truth.probability[c] = p;
      k[c] = static_cast<int>(sample_binomial(n, p, rng));
    }
  }
  return {design.with_counts(std::move(k)), std::move(truth)};
}

}  // namespace avc
