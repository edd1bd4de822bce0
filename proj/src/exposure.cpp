#include "avc/exposure.hpp"

#include <algorithm>
#include <limits>

#include "avc/errors.hpp"

namespace avc {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr int kMaxClusters = 64;

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw InvalidParameter("kernel: sigma must be positive and finite");
  }
}

}  // namespace

double log_kernel_pmf(long n, double mu, double sigma) {
  check_sigma(sigma);
  if (n < 0) return kNegInf;
  const double lo = (static_cast<double>(n) - 0.5 - mu) / sigma;
  const double hi = (static_cast<double>(n) + 0.5 - mu) / sigma;
  // Normalizer 1 - Phi(-1/2 | mu, sigma) = Phi((mu + 1/2) / sigma).
  return log_std_normal_interval(lo, hi) - log_std_normal_cdf((mu + 0.5) / sigma);
}

double kernel_pmf(long n, double mu, double sigma) {
  return std::exp(log_kernel_pmf(n, mu, sigma));
}

Eigen::VectorXd stick_weights(const Eigen::VectorXd& sticks) {
  const auto C = sticks.size();
  Eigen::VectorXd w(C);
  if (C == 0) return w;
  double remaining = 1.0;
  double assigned = 0.0;
  for (Eigen::Index l = 0; l + 1 < C; ++l) {
    w[l] = sticks[l] * remaining;
    remaining *= 1.0 - sticks[l];
    assigned += w[l];
  }
  w[C - 1] = 1.0 - assigned;
  return w;
}

// ---------------------------------------------------------------------------

MixtureTable::MixtureTable(const DpState& dp, long cap)
    : dp_(&dp), cap_(cap), log_kernel_(cap + 1, dp.clusters()), log_weight_(dp.clusters()) {
  const int C = dp.clusters();
  for (int l = 0; l < C; ++l) {
    log_weight_[l] = dp.weights[l] > 0.0 ? std::log(dp.weights[l]) : kNegInf;
    const double sd = dp.sd(l);
    for (long n = 0; n <= cap; ++n) log_kernel_(n, l) = log_kernel_pmf(n, dp.mean[l], sd);
  }
  cdf_.resize(static_cast<std::size_t>(cap + 1));
  double acc = 0.0;
  for (long n = 0; n <= cap; ++n) {
    acc += mixture_pmf(n);
    cdf_[static_cast<std::size_t>(n)] = acc;
  }
  if (!(acc > 0.0)) throw NumericError("mixture table: no probability mass on 0..cap");
  log_factorial_.resize(static_cast<std::size_t>(cap + 1));
  for (long n = 0; n <= cap; ++n) {
    log_factorial_[static_cast<std::size_t>(n)] = std::lgamma(static_cast<double>(n) + 1.0);
  }
}

double MixtureTable::log_kernel(int cluster, long n) const {
  if (n >= 0 && n <= cap_) return log_kernel_(n, cluster);
  return log_kernel_pmf(n, dp_->mean[cluster], dp_->sd(cluster));
}

double MixtureTable::mixture_pmf(long n) const {
  double p = 0.0;
  for (int l = 0; l < log_weight_.size(); ++l) {
    if (log_weight_[l] == kNegInf) continue;
    p += std::exp(log_weight_[l] + log_kernel(l, n));
  }
  return p;
}

long MixtureTable::sample(RandomStream& rng) const {
  const double target = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), target);
  if (it == cdf_.end()) --it;
  return static_cast<long>(it - cdf_.begin());
}

double MixtureTable::log_factorial(long n) const {
  if (n >= 0 && n <= cap_) return log_factorial_[static_cast<std::size_t>(n)];
  return std::lgamma(static_cast<double>(n) + 1.0);
}

long proposal_cap(const DpState& dp, long floor_cap, long max_count) {
  double reach = 0.0;
  for (int l = 0; l < dp.clusters(); ++l) reach = std::max(reach, dp.mean[l] + 10.0 * dp.sd(l));
  constexpr double kHardLimit = 1e6;
  const long from_clusters = static_cast<long>(std::ceil(std::min(reach, kHardLimit)));
  return std::max({floor_cap, 10 * max_count, from_clusters});
}

// ---------------------------------------------------------------------------

void assign_clusters(ExposureState& exposure, const DpState& dp, const MixtureTable& table,
                     RandomStream& rng) {
  const int C = dp.clusters();
  if (C > kMaxClusters) throw InvalidParameter("assign_clusters: too many clusters");
  double log_w[kMaxClusters];
  for (int l = 0; l < C; ++l) log_w[l] = dp.weights[l] > 0.0 ? std::log(dp.weights[l]) : kNegInf;
  double prob[kMaxClusters];
  for (Eigen::Index c = 0; c < exposure.crossings.size(); ++c) {
    const long n = exposure.crossings[c];
    if (C == 1) {
      exposure.cluster[c] = 0;
      continue;
    }
    double top = kNegInf;
    for (int l = 0; l < C; ++l) {
      prob[l] = log_w[l] == kNegInf ? kNegInf : log_w[l] + table.log_kernel(l, n);
      top = std::max(top, prob[l]);
    }
    if (top == kNegInf) {
      // Every kernel underflows for this n; fall back to the weights alone.
      for (int l = 0; l < C; ++l) prob[l] = log_w[l];
      top = *std::max_element(prob, prob + C);
    }
    double total = 0.0;
    for (int l = 0; l < C; ++l) {
      prob[l] = std::exp(prob[l] - top);
      total += prob[l];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int chosen = C - 1;
    for (int l = 0; l < C; ++l) {
      acc += prob[l];
      if (u < acc && prob[l] > 0.0) {
        chosen = l;
        break;
      }
    }
    while (prob[chosen] == 0.0 && chosen > 0) --chosen;
    exposure.cluster[c] = chosen;
  }
}

Eigen::VectorXi cluster_occupancy(const Eigen::VectorXi& cluster, int clusters) {
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(clusters);
  for (Eigen::Index c = 0; c < cluster.size(); ++c) ++counts[cluster[c]];
  return counts;
}

void update_stick_weights(DpState& dp, const Eigen::VectorXi& occupancy, double precision,
                          RandomStream& rng) {
  const int C = dp.clusters();
  if (occupancy.size() != C) {
    throw InvalidParameter("update_stick_weights: occupancy size does not match cluster count");
  }
  long tail = 0;
  for (int l = 0; l < C; ++l) tail += occupancy[l];
  dp.sticks.resize(C);
  for (int l = 0; l < C; ++l) {
    tail -= occupancy[l];
    if (l == C - 1) {
      dp.sticks[l] = 1.0;
    } else {
      dp.sticks[l] = sample_beta(1.0 + occupancy[l], precision + static_cast<double>(tail), rng);
    }
  }
  dp.weights = stick_weights(dp.sticks);
}

double sample_latent_continuous(long n, double mu, double sigma, RandomStream& rng) {
  check_sigma(sigma);
  if (n < 0) throw InvalidParameter("sample_latent_continuous: negative count");
  const double lo = static_cast<double>(n) - 0.5;
  const double hi = static_cast<double>(n) + 0.5;
  const double a = (lo - mu) / sigma;
  const double b = (hi - mu) / sigma;
  double z;
  if (a > 0.0) {
    // Upper side: work with survival probabilities to keep precision.
    const double qa = std_normal_sf(a);
    const double qb = std_normal_sf(b);
    if (!(qa > qb)) return static_cast<double>(n);
    const double v = qb + rng.uniform() * (qa - qb);
    z = -std_normal_quantile(v);
  } else {
    const double pa = std_normal_cdf(a);
    const double pb = std_normal_cdf(b);
    if (!(pb > pa)) return static_cast<double>(n);
    const double u = pa + rng.uniform() * (pb - pa);
    z = std_normal_quantile(u);
  }
  const double latent = mu + sigma * z;
  if (!(latent > lo) || latent >= hi) return static_cast<double>(n);
  return latent;
}

void continuize(ExposureState& exposure, const DpState& dp, RandomStream& rng) {
  for (Eigen::Index c = 0; c < exposure.crossings.size(); ++c) {
    const int l = exposure.cluster[c];
    exposure.latent[c] =
        sample_latent_continuous(exposure.crossings[c], dp.mean[l], dp.sd(l), rng);
  }
}

// ---------------------------------------------------------------------------

void ClusterStatistics::merge(const ClusterStatistics& other) {
  if (other.count == 0) return;
  if (count == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count);
  const double nb = static_cast<double>(other.count);
  const double delta = other.mean() - mean();
  centered_ss += other.centered_ss + delta * delta * na * nb / (na + nb);
  count += other.count;
  sum += other.sum;
  centered_sum = 0.0;
}

ClusterStatistics ClusterStatistics::of(const std::vector<double>& values) {
  ClusterStatistics st;
  st.count = static_cast<long>(values.size());
  if (st.count == 0) return st;
  for (double v : values) st.sum += v;
  const double m = st.mean();
  for (double v : values) {
    st.centered_ss += (v - m) * (v - m);
    st.centered_sum += v - m;
  }
  return st;
}

NormalGammaPosterior cluster_posterior(const ClusterStatistics& stats,
                                       const DpHyperparameters& hyper, bool unsquared_rate) {
  const double n = static_cast<double>(stats.count);
  const double eta = stats.mean();
  NormalGammaPosterior post;
  post.shape = hyper.d0 + 0.5 * n;
  const double shrink = n / (1.0 + n) * (eta - hyper.mu0) * (eta - hyper.mu0);
  if (unsquared_rate) {
    // Printed form: the shrinkage term sits inside the per-member sum and the
    // deviations are not squared.
    post.rate = hyper.e0 + 0.5 * (stats.centered_sum + n * shrink);
    post.rate = std::max(post.rate, 1e-8);
  } else {
    post.rate = hyper.e0 + 0.5 * (stats.centered_ss + shrink);
  }
  post.location = (hyper.mu0 + stats.sum) / (1.0 + n);
  post.scale = 1.0 + n;
  return post;
}

void draw_cluster_from_base(DpState& dp, int l, const DpHyperparameters& hyper,
                            RandomStream& rng) {
  const double precision = sample_gamma(hyper.d0, hyper.e0, rng);
  dp.variance[l] = 1.0 / precision;
  dp.mean[l] = sample_truncated_normal({hyper.mu0, std::sqrt(dp.variance[l]), -0.5}, rng);
}

int update_cluster_params(DpState& dp, const ExposureState& exposure,
                          const DpHyperparameters& hyper, const ClusterUpdateOptions& options,
                          RandomStream& rng) {
  const int C = dp.clusters();
  std::vector<std::vector<double>> members(static_cast<std::size_t>(C));
  for (Eigen::Index c = 0; c < exposure.latent.size(); ++c) {
    members[static_cast<std::size_t>(exposure.cluster[c])].push_back(exposure.latent[c]);
  }
  int accepted = 0;
  for (int l = 0; l < C; ++l) {
    const auto& values = members[static_cast<std::size_t>(l)];
    if (values.empty()) {
      draw_cluster_from_base(dp, l, hyper, rng);
      ++accepted;
      continue;
    }
    ClusterStatistics stats = ClusterStatistics::of(values);

    if (options.method == ClusterUpdate::conjugate) {
      const auto post = cluster_posterior(stats, hyper, options.unsquared_rate);
      dp.variance[l] = 1.0 / sample_gamma(post.shape, post.rate, rng);
      dp.mean[l] = sample_truncated_normal(
          {post.location, std::sqrt(dp.variance[l] / post.scale), -0.5}, rng);
      ++accepted;
      continue;
    }

    // Complete the truncated likelihood: each member's draw is preceded by a
    // geometric number of draws that fell below -1/2; the prior draw of mu
    // likewise.
    const double mu = dp.mean[l];
    const double sd = dp.sd(l);
    const double keep = std_normal_cdf((mu + 0.5) / sd);
    long failures = 0;
    for (std::size_t i = 0; i < values.size(); ++i) failures += sample_geometric(keep, rng);
    std::vector<double> rejected;
    rejected.reserve(static_cast<std::size_t>(failures));
    for (long i = 0; i < failures; ++i) {
      rejected.push_back(sample_truncated_normal_above(mu, sd, -0.5, rng));
    }
    stats.merge(ClusterStatistics::of(rejected));
    if (options.unsquared_rate) {
      stats.centered_sum = 0.0;
      const double m = stats.mean();
      for (double v : values) stats.centered_sum += v - m;
      for (double v : rejected) stats.centered_sum += v - m;
    }

    const double prior_keep = std_normal_cdf((hyper.mu0 + 0.5) / sd);
    const long prior_failures = sample_geometric(prior_keep, rng);
    double prior_ss = 0.0;
    for (long i = 0; i < prior_failures; ++i) {
      const double v = sample_truncated_normal_above(hyper.mu0, sd, -0.5, rng) - hyper.mu0;
      prior_ss += v * v;
    }

    auto post = cluster_posterior(stats, hyper, options.unsquared_rate);
    post.shape += 0.5 * static_cast<double>(prior_failures);
    post.rate += 0.5 * prior_ss;

    const double proposed_precision = sample_gamma(post.shape, post.rate, rng);
    const double current_precision = 1.0 / dp.variance[l];
    // Target / proposal is Phi((location + 1/2) sqrt(precision * scale)).
    const double log_ratio =
        log_std_normal_cdf((post.location + 0.5) * std::sqrt(proposed_precision * post.scale)) -
        log_std_normal_cdf((post.location + 0.5) * std::sqrt(current_precision * post.scale));
    if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) {
      dp.variance[l] = 1.0 / proposed_precision;
      dp.mean[l] = sample_truncated_normal(
          {post.location, std::sqrt(dp.variance[l] / post.scale), -0.5}, rng);
      ++accepted;
    }
  }
  return accepted;
}

// ---------------------------------------------------------------------------

CrossingMove mh_update_crossings(long observed, long current, double log_one_minus_p,
                                 const MixtureTable& table, RandomStream& rng) {
  const long proposed = table.sample(rng);
  if (proposed < observed) return {current, false};
  if (proposed == current) return {current, true};
  auto log_lik = [&](long n) {
    // log C(n, k) + (n - k) log(1 - p); the k log p term cancels.
    double v = table.log_factorial(n) - table.log_factorial(n - observed);
    if (n > observed) v += static_cast<double>(n - observed) * log_one_minus_p;
    return v;
  };
  const double log_ratio = log_lik(proposed) - log_lik(current);
  if (log_ratio >= 0.0 || std::log(rng.uniform()) < log_ratio) return {proposed, true};
  return {current, false};
}

ExposureState initial_exposure(const Eigen::VectorXi& counts, const DpState& dp,
                               const MixtureTable& table, RandomStream& rng) {
  const auto cells = counts.size();
  ExposureState ex;
  ex.crossings.resize(cells);
  ex.latent.resize(cells);
  ex.cluster.resize(cells);
  const int C = dp.clusters();
  for (Eigen::Index c = 0; c < cells; ++c) {
    ex.cluster[c] = static_cast<int>(rng.bits() % static_cast<std::uint64_t>(C));
    ex.crossings[c] = static_cast<int>(std::max<long>(counts[c], table.sample(rng)));
    const int l = ex.cluster[c];
    ex.latent[c] = sample_latent_continuous(ex.crossings[c], dp.mean[l], dp.sd(l), rng);
  }
  return ex;
}

DpState initial_dp_state(const DpHyperparameters& hyper, RandomStream& rng) {
  if (hyper.clusters < 1) throw ConfigError("DP: at least one cluster is required");
  if (!(hyper.precision > 0.0) || !(hyper.d0 > 0.0) || !(hyper.e0 > 0.0)) {
    throw ConfigError("DP: precision, d0 and e0 must be positive");
  }
  if (!(hyper.mu0 >= -0.5)) throw ConfigError("DP: mu0 must be >= -0.5");
  const int C = hyper.clusters;
  DpState dp;
  dp.mean.resize(C);
  dp.variance.resize(C);
  dp.sticks.resize(C);
  for (int l = 0; l < C; ++l) {
    dp.sticks[l] = l + 1 == C ? 1.0 : sample_beta(1.0, hyper.precision, rng);
    draw_cluster_from_base(dp, l, hyper, rng);
  }
  dp.weights = stick_weights(dp.sticks);
  return dp;
}

}  // namespace avc
