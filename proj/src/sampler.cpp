#include "avc/sampler.hpp"

#include <charconv>
#include <fstream>
#include <future>
#include <sstream>
#include <thread>

#include "avc/errors.hpp"

namespace avc {

void RunConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) throw ConfigError("burn_in must lie in [0, iterations)");
  if (thin < 1) throw ConfigError("thin must be >= 1");
  if (chains < 1) throw ConfigError("chains must be >= 1");
  if (cell_thin < 1) throw ConfigError("cell_thin must be >= 1");
  if (dp.clusters < 1) throw ConfigError("clusters must be >= 1");
  if (!(dp.precision > 0.0) || !(dp.d0 > 0.0) || !(dp.e0 > 0.0)) {
    throw ConfigError("DP precision, d0 and e0 must be positive");
  }
  if (!(prior.beta_variance > 0.0) || !(prior.time_variance > 0.0)) {
    throw ConfigError("prior variances must be positive");
  }
  if (!(prior.q_a > 0.0) || !(prior.q_b > 0.0)) throw ConfigError("q prior must be positive");
  if (pg_normal_threshold < 1) throw ConfigError("pg_normal_threshold must be >= 1");
  if (proposal_floor < 1) throw ConfigError("proposal_floor must be >= 1");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (checkpoint_every > 0 && checkpoint_path.empty()) {
    throw ConfigError("checkpoint_every requires a checkpoint path");
  }
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (alpha_q_steps < 0) throw ConfigError("alpha_q_steps must be >= 0");
  if (!(alpha_q_step_size > 0.0)) throw ConfigError("alpha_q_step_size must be positive");
  // The collapsed move changes alpha after omega was drawn, so the indicators
  // that follow must not condition on omega.
  if (alpha_q_steps > 0 && indicator_update != IndicatorUpdate::marginal) {
    throw ConfigError("alpha_q_steps requires the marginal indicator update");
  }
}

namespace {

Eigen::VectorXd design_scale(const Dataset& data, bool standardize) {
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(data.segment_dim());
  if (!standardize || data.segments() < 2) return scale;
  for (Eigen::Index j = 0; j < data.segment_dim(); ++j) {
    const auto col = data.x().col(j);
    const double mean = col.mean();
    const double var = (col.array() - mean).square().sum() / static_cast<double>(col.size() - 1);
    if (var > 0.0) scale[j] = std::sqrt(var);
  }
  return scale;
}

Dataset scaled_dataset(const Dataset& data, const Eigen::VectorXd& scale) {
  if ((scale.array() == 1.0).all()) return data;
  Eigen::MatrixXd x = data.x() * scale.cwiseInverse().asDiagonal();
  return data.with_design(std::move(x));
}

}  // namespace

GibbsSampler::GibbsSampler(const Dataset& data, const RunConfig& config, int chain_id,
                           bool initialize)
    : config_(config), chain_id_(chain_id) {
  config_.validate();
  scale_ = design_scale(data, config_.standardize);
  data_ = scaled_dataset(data, scale_);
  max_count_ = data_.cells() > 0 ? data_.counts().maxCoeff() : 0;
  state_.rng = RandomStream(config_.seed, static_cast<std::uint64_t>(chain_id));
  state_.stats.chain = chain_id;
  if (!initialize) return;

  auto& st = state_;
  st.dp = initial_dp_state(config_.dp, st.rng);
  {
    const MixtureTable table(st.dp, proposal_cap(st.dp, config_.proposal_floor, max_count_));
    st.exposure = initial_exposure(data_.counts(), st.dp, table, st.rng);
  }
  st.regression = make_regression_state(data_);
  for (Eigen::Index c = 0; c < data_.cells(); ++c) {
    st.regression.indicator[c] = st.rng.uniform() < 0.5 ? 1 : 0;
  }
  refresh_kappa(st.regression, st.exposure.crossings, data_.counts());
}

GibbsSampler::GibbsSampler(const Dataset& data, const RunConfig& config, int chain_id)
    : GibbsSampler(data, config, chain_id, true) {}

void GibbsSampler::set_counts(const Eigen::VectorXi& counts) {
  data_ = data_.with_counts(counts);
  max_count_ = counts.size() > 0 ? counts.maxCoeff() : 0;
  refresh_kappa(state_.regression, state_.exposure.crossings, data_.counts());
}

template <typename F>
void GibbsSampler::guarded(const char* block, F&& f) {
  try {
    f();
  } catch (const NumericError& e) {
    throw NumericError("chain " + std::to_string(chain_id_) + ", sweep " +
                       std::to_string(state_.iteration) + ", " + block + ": " + e.what());
  } catch (const InvalidParameter& e) {
    throw NumericError("chain " + std::to_string(chain_id_) + ", sweep " +
                       std::to_string(state_.iteration) + ", " + block + ": " + e.what());
  }
}

void GibbsSampler::sweep() {
  auto& st = state_;
  auto& rng = st.rng;
  const auto& k = data_.counts();
  ++st.iteration;

  // Step 1: exposure block.
  guarded("cluster assignment", [&] {
    const MixtureTable table(st.dp, proposal_cap(st.dp, config_.proposal_floor, max_count_));
    assign_clusters(st.exposure, st.dp, table, rng);
  });
  guarded("stick weights", [&] {
    update_stick_weights(st.dp, cluster_occupancy(st.exposure.cluster, st.dp.clusters()),
                         config_.dp.precision, rng);
  });
  guarded("continuization", [&] { continuize(st.exposure, st.dp, rng); });
  guarded("cluster parameters", [&] {
    ClusterUpdateOptions opts{config_.cluster_update, faults_.unsquared_cluster_rate};
    st.stats.cluster_accepted += update_cluster_params(st.dp, st.exposure, config_.dp, opts, rng);
    st.stats.cluster_proposed += st.dp.clusters();
  });

  Eigen::VectorXd psi = linear_predictors(st.regression, data_);
  guarded("crossing MH", [&] {
    const MixtureTable table(st.dp, proposal_cap(st.dp, config_.proposal_floor, max_count_));
    for (Eigen::Index c = 0; c < data_.cells(); ++c) {
      const auto move = mh_update_crossings(k[c], st.exposure.crossings[c],
                                            log_one_minus_collision_prob(psi[c]), table, rng);
      if (move.crossings != st.exposure.crossings[c]) {
        // Keep n* consistent with the new count; 1c redraws it next sweep anyway.
        const int l = st.exposure.cluster[c];
        st.exposure.latent[c] =
            sample_latent_continuous(move.crossings, st.dp.mean[l], st.dp.sd(l), rng);
        st.exposure.crossings[c] = static_cast<int>(move.crossings);
      }
      st.stats.crossing_accepted += move.accepted ? 1 : 0;
      ++st.stats.crossing_proposed;
    }
  });
  if (!faults_.skip_kappa_refresh) refresh_kappa(st.regression, st.exposure.crossings, k);

  // Step 2: collision block.
  guarded("Polya-Gamma augmentation", [&] {
    augment_polya_gamma(st.regression, st.exposure.crossings, psi, rng,
                        config_.pg_normal_threshold);
  });
  guarded("beta", [&] {
    update_beta(st.regression, st.exposure.crossings, data_, config_.prior, rng);
  });
  guarded("time-varying effects", [&] {
    for (int t = 0; t < data_.months(); ++t) {
      update_time_varying(st.regression, st.exposure.crossings, data_, t, config_.prior, rng);
    }
  });
  if (config_.alpha_q_steps > 0) {
    guarded("collapsed month effects", [&] {
      for (int t = 0; t < data_.months(); ++t) {
        update_alpha_q_collapsed(st.regression, st.exposure.crossings, data_, t, config_.prior,
                                 config_.alpha_q_steps, config_.alpha_q_step_size, rng);
      }
    });
  }
  guarded("indicators", [&] {
    if (config_.indicator_update == IndicatorUpdate::marginal) {
      update_indicators_marginal(st.regression, st.exposure.crossings, data_, rng);
    } else {
      update_indicators(st.regression, data_, rng);
    }
  });
  guarded("indicator probabilities", [&] {
    for (int t = 0; t < data_.months(); ++t) update_q(st.regression, data_, t, config_.prior, rng);
  });

  if (!st.regression.beta.allFinite() || !st.regression.alpha.allFinite() ||
      !st.regression.gamma.allFinite()) {
    throw NumericError("chain " + std::to_string(chain_id_) + ", sweep " +
                       std::to_string(st.iteration) + ": non-finite regression parameters");
  }
  if (const auto problems = check_invariants(); !problems.empty()) {
    throw NumericError("chain " + std::to_string(chain_id_) + ", sweep " +
                       std::to_string(st.iteration) + ": state invariant violated: " + problems);
  }
}

Eigen::VectorXd GibbsSampler::probabilities() const {
  const Eigen::VectorXd psi = linear_predictors(state_.regression, data_);
  return psi.unaryExpr([](double v) { return collision_prob(v); });
}

std::vector<double> GibbsSampler::global_values() const {
  const auto& reg = state_.regression;
  const auto S = data_.segments();
  const int T = data_.months();
  std::vector<double> v;
  v.reserve(static_cast<std::size_t>(data_.segment_dim() + T * (3 + data_.time_dim()) + 2));
  for (Eigen::Index j = 0; j < data_.segment_dim(); ++j) v.push_back(reg.beta[j] / scale_[j]);
  for (int t = 0; t < T; ++t) v.push_back(reg.alpha[t]);
  for (int t = 0; t < T; ++t) {
    for (Eigen::Index j = 0; j < data_.time_dim(); ++j) v.push_back(reg.gamma(t, j));
  }
  for (int t = 0; t < T; ++t) v.push_back(reg.q[t]);
  const Eigen::VectorXd p = probabilities();
  const auto& n = state_.exposure.crossings;
  for (int t = 0; t < T; ++t) {
    double total = 0.0;
    for (Eigen::Index s = 0; s < S; ++s) total += n[t * S + s] * p[t * S + s];
    v.push_back(total);
  }
  v.push_back(static_cast<double>((n.array() > 0).count()));
  v.push_back(static_cast<double>(reg.indicator.sum()));
  return v;
}

std::string GibbsSampler::check_invariants() const {
  const auto& st = state_;
  std::ostringstream err;
  const auto& w = st.dp.weights;
  double sum = 0.0;
  for (Eigen::Index l = 0; l < w.size(); ++l) sum += w[l];
  if (sum != 1.0) err << "weights sum to " << sum << "; ";
  if ((st.dp.variance.array() <= 0.0).any()) err << "non-positive cluster variance; ";
  if ((st.dp.mean.array() < -0.5).any()) err << "cluster mean below -1/2; ";
  const auto& k = data_.counts();
  for (Eigen::Index c = 0; c < k.size(); ++c) {
    if (st.exposure.crossings[c] < k[c]) {
      err << "n < k at cell " << c << "; ";
      break;
    }
  }
  for (Eigen::Index c = 0; c < k.size(); ++c) {
    if (nearest_crossings(st.exposure.latent[c]) != st.exposure.crossings[c]) {
      err << "n* does not round to n at cell " << c << "; ";
      break;
    }
  }
  if ((st.regression.q.array() <= 0.0).any() || (st.regression.q.array() >= 1.0).any()) {
    err << "q outside (0,1); ";
  }
  return err.str();
}

bool GibbsSampler::should_record() const {
  const long it = state_.iteration;
  return it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0;
}

void GibbsSampler::record(DrawStore& draws) const {
  if (draws.parameters.empty()) {
    draws.parameters = parameter_names(data_);
    draws.cell_thin = config_.store_cells ? config_.thin * config_.cell_thin : 0;
  }
  draws.records.push_back({chain_id_, state_.iteration, global_values()});
  if (config_.store_cells &&
      (state_.iteration - config_.burn_in) % (config_.thin * config_.cell_thin) == 0) {
    draws.cells.push_back({chain_id_, state_.iteration, state_.exposure.crossings, probabilities()});
  }
}

// ---------------------------------------------------------------------------
// Checkpoints: a line-oriented text snapshot.
//
//   avc-checkpoint 1
//   chain <id>
//   iteration <i>
//   dims <S> <T> <P> <Q> <C>
//   rng <seed> <stream> <engine state...>
//   stats <crossing acc> <crossing prop> <cluster acc> <cluster prop>
//   <name> <count> <values...>     one line per state array
//
// Reals are written in shortest round-trip form so a restored chain
// continues bit-identically.

namespace {

constexpr const char* kCheckpointMagic = "avc-checkpoint";
constexpr int kCheckpointVersion = 1;

template <typename Vec>
void put(std::ostream& os, const char* name, const Vec& v) {
  os << name << ' ' << v.size();
  char buf[64];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if constexpr (std::is_floating_point_v<typename Vec::Scalar>) {
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, static_cast<double>(v[i]));
      (void)ec;
      os << ' ' << std::string_view(buf, static_cast<std::size_t>(ptr - buf));
    } else {
      os << ' ' << v[i];
    }
  }
  os << '\n';
}

template <typename Vec>
void get(std::istream& is, const char* name, Vec& v, Eigen::Index expected) {
  std::string tag;
  Eigen::Index n = 0;
  if (!(is >> tag >> n) || tag != name) {
    throw DataError(std::string("checkpoint: expected '") + name + "' section");
  }
  if (n != expected) throw DataError(std::string("checkpoint: '") + name + "' has wrong length");
  v.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::string tok;
    if (!(is >> tok)) throw DataError(std::string("checkpoint: truncated '") + name + "'");
    typename Vec::Scalar value{};
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw DataError(std::string("checkpoint: bad value in '") + name + "'");
    }
    v[i] = value;
  }
}

}  // namespace

void GibbsSampler::save_checkpoint(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp);
    if (!os) throw DataError("cannot write checkpoint " + tmp);
    const auto& st = state_;
    os << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
    os << "chain " << chain_id_ << '\n';
    os << "iteration " << st.iteration << '\n';
    os << "dims " << data_.segments() << ' ' << data_.months() << ' ' << data_.segment_dim()
       << ' ' << data_.time_dim() << ' ' << st.dp.clusters() << '\n';
    os << "rng " << st.rng << '\n';
    os << "stats " << st.stats.crossing_accepted << ' ' << st.stats.crossing_proposed << ' '
       << st.stats.cluster_accepted << ' ' << st.stats.cluster_proposed << '\n';
    put(os, "dp.mean", st.dp.mean);
    put(os, "dp.variance", st.dp.variance);
    put(os, "dp.sticks", st.dp.sticks);
    put(os, "dp.weights", st.dp.weights);
    put(os, "exposure.crossings", st.exposure.crossings);
    put(os, "exposure.latent", st.exposure.latent);
    put(os, "exposure.cluster", st.exposure.cluster);
    put(os, "regression.beta", st.regression.beta);
    put(os, "regression.alpha", st.regression.alpha);
    const Eigen::VectorXd gamma = st.regression.gamma.reshaped();
    put(os, "regression.gamma", gamma);
    put(os, "regression.q", st.regression.q);
    put(os, "regression.indicator", st.regression.indicator);
    put(os, "regression.omega", st.regression.omega);
    put(os, "regression.kappa", st.regression.kappa);
    os << "end\n";
    if (!os) throw DataError("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

GibbsSampler GibbsSampler::from_checkpoint(const Dataset& data, const RunConfig& config,
                                           const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw DataError("cannot open checkpoint " + path.string());
  std::string magic;
  int version = 0;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) {
    throw DataError(path.string() + ": not a checkpoint file");
  }
  if (version != kCheckpointVersion) {
    throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  std::string tag;
  int chain = 0;
  long iteration = 0;
  if (!(is >> tag >> chain) || tag != "chain") throw DataError("checkpoint: missing chain");
  if (!(is >> tag >> iteration) || tag != "iteration") {
    throw DataError("checkpoint: missing iteration");
  }
  GibbsSampler sampler(data, config, chain, false);
  const auto& d = sampler.data_;
  Eigen::Index S = 0, T = 0, P = 0, Q = 0, C = 0;
  if (!(is >> tag >> S >> T >> P >> Q >> C) || tag != "dims") {
    throw DataError("checkpoint: missing dims");
  }
  if (S != d.segments() || T != d.months() || P != d.segment_dim() || Q != d.time_dim() ||
      C != config.dp.clusters) {
    throw DataError("checkpoint: dimensions do not match the dataset/config");
  }
  auto& st = sampler.state_;
  st.iteration = iteration;
  if (!(is >> tag) || tag != "rng" || !(is >> st.rng)) throw DataError("checkpoint: bad rng");
  if (!(is >> tag >> st.stats.crossing_accepted >> st.stats.crossing_proposed >>
        st.stats.cluster_accepted >> st.stats.cluster_proposed) ||
      tag != "stats") {
    throw DataError("checkpoint: bad stats");
  }
  st.stats.chain = chain;
  const auto cells = d.cells();
  get(is, "dp.mean", st.dp.mean, C);
  get(is, "dp.variance", st.dp.variance, C);
  get(is, "dp.sticks", st.dp.sticks, C);
  get(is, "dp.weights", st.dp.weights, C);
  get(is, "exposure.crossings", st.exposure.crossings, cells);
  get(is, "exposure.latent", st.exposure.latent, cells);
  get(is, "exposure.cluster", st.exposure.cluster, cells);
  get(is, "regression.beta", st.regression.beta, P);
  get(is, "regression.alpha", st.regression.alpha, T);
  Eigen::VectorXd gamma;
  get(is, "regression.gamma", gamma, T * Q);
  st.regression.gamma = gamma.reshaped(T, Q);
  get(is, "regression.q", st.regression.q, T);
  get(is, "regression.indicator", st.regression.indicator, cells);
  get(is, "regression.omega", st.regression.omega, cells);
  get(is, "regression.kappa", st.regression.kappa, cells);
  if (!(is >> tag) || tag != "end") throw DataError("checkpoint: missing end marker");
  return sampler;
}

// ---------------------------------------------------------------------------

std::filesystem::path chain_checkpoint_path(const std::filesystem::path& base, int chain_id) {
  return base.string() + ".chain" + std::to_string(chain_id);
}

namespace {

std::filesystem::path fragment_path(const std::filesystem::path& checkpoint, const char* what) {
  return checkpoint.string() + "." + what + ".csv";
}

// Draws recorded so far are flushed next to the checkpoint before the state
// itself, so a resumed chain can reproduce the complete record.
void save_progress(const GibbsSampler& sampler, const DrawStore& draws, const RunConfig& config) {
  const auto path = chain_checkpoint_path(config.checkpoint_path, sampler.chain_id());
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  write_draws_csv(draws, fragment_path(path, "draws"));
  if (config.store_cells) write_cells_csv(draws, sampler.data(), fragment_path(path, "cells"));
  sampler.save_checkpoint(path);
}

DrawStore continue_chain(GibbsSampler& sampler, const RunConfig& config, DrawStore draws) {
  draws.parameters = parameter_names(sampler.data());
  draws.cell_thin = config.store_cells ? config.thin * config.cell_thin : 0;
  while (sampler.state().iteration < config.iterations) {
    sampler.sweep();
    if (sampler.should_record()) sampler.record(draws);
    if (config.checkpoint_every > 0 && sampler.state().iteration % config.checkpoint_every == 0) {
      save_progress(sampler, draws, config);
    }
  }
  draws.chain_stats.push_back(sampler.state().stats);
  return draws;
}

}  // namespace

DrawStore run_chain(const RunConfig& config, const Dataset& data, int chain_id) {
  GibbsSampler sampler(data, config, chain_id);
  return continue_chain(sampler, config, {});
}

DrawStore resume_chain(const RunConfig& config, const Dataset& data,
                       const std::filesystem::path& checkpoint) {
  auto sampler = GibbsSampler::from_checkpoint(data, config, checkpoint);
  const long reached = sampler.state().iteration;
  DrawStore draws;
  if (const auto f = fragment_path(checkpoint, "draws"); std::filesystem::exists(f)) {
    DrawStore earlier = read_draws_csv(f);
    if (!earlier.records.empty() && earlier.parameters != parameter_names(sampler.data())) {
      throw DataError(f.string() + ": parameters do not match the dataset");
    }
    for (auto& r : earlier.records) {
      if (r.chain == sampler.chain_id() && r.iteration <= reached) draws.records.push_back(std::move(r));
    }
    if (const auto fc = fragment_path(checkpoint, "cells");
        config.store_cells && std::filesystem::exists(fc)) {
      read_cells_csv(earlier, sampler.data(), fc);
      for (auto& c : earlier.cells) {
        if (c.chain == sampler.chain_id() && c.iteration <= reached) draws.cells.push_back(std::move(c));
      }
    }
  }
  return continue_chain(sampler, config, std::move(draws));
}

DrawStore run_chains(const RunConfig& config, const Dataset& data) {
  config.validate();
  std::vector<DrawStore> parts(static_cast<std::size_t>(config.chains));
  if (config.workers <= 1 || config.chains == 1) {
    for (int c = 0; c < config.chains; ++c) parts[static_cast<std::size_t>(c)] = run_chain(config, data, c);
  } else {
    std::vector<std::future<DrawStore>> pending;
    int next = 0;
    while (next < config.chains || !pending.empty()) {
      while (next < config.chains && static_cast<int>(pending.size()) < config.workers) {
        pending.push_back(std::async(std::launch::async, run_chain, std::cref(config),
                                     std::cref(data), next));
        ++next;
      }
      // Chains finish in id order within each wave; collect the oldest first.
      auto first = std::move(pending.front());
      pending.erase(pending.begin());
      DrawStore part = first.get();
      const int id = part.chain_stats.front().chain;
      parts[static_cast<std::size_t>(id)] = std::move(part);
    }
  }
  DrawStore all;
  for (auto& p : parts) all.merge(std::move(p));
  return all;
}

}  // namespace avc
