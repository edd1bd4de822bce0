#pragma once

// Blocked Gibbs sampler for the latent-exposure binomial model.
//
// One sweep is Step 1 (exposure block: assign clusters, stick weights,
// continuize, cluster parameters, MH on crossings) followed by Step 2
// (collision block: Polya-Gamma augmentation, beta, each month's
// [alpha_t, gamma_t], indicators, q_t). A chain is a deterministic function of
// (config, dataset, seed, chain id).

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "avc/collision.hpp"
#include "avc/dataset.hpp"
#include "avc/draws.hpp"
#include "avc/exposure.hpp"
#include "avc/random.hpp"

namespace avc {

struct RunConfig {
  long iterations = 20000;
  long burn_in = 10000;
  long thin = 1;
  int chains = 4;
  std::uint64_t seed = 20160101;

  DpHyperparameters dp;
  RegressionPrior prior;
  ClusterUpdate cluster_update = ClusterUpdate::augmented;
  /// Indicator draw: conditional on omega (augmented) or with omega
  /// integrated out (marginal).
  IndicatorUpdate indicator_update = IndicatorUpdate::marginal;
  /// Rounds of the collapsed (alpha_t, q_t) Metropolis move per sweep; 0 off.
  int alpha_q_steps = 2;
  double alpha_q_step_size = 0.3;
  long pg_normal_threshold = 30;
  long proposal_floor = 50;

  bool store_cells = true;
  long cell_thin = 10;
  /// Divide each segment covariate by its sample sd inside the sampler;
  /// recorded coefficients are mapped back to the raw scale.
  bool standardize = false;

  long checkpoint_every = 0;
  std::filesystem::path checkpoint_path;
  int workers = 1;

  void validate() const;
};

/// Deliberate defects for validating the joint-distribution test.
struct SweepFaults {
  bool unsquared_cluster_rate = false;
  bool skip_kappa_refresh = false;
};

struct ChainState {
  long iteration = 0;
  DpState dp;
  ExposureState exposure;
  RegressionState regression;
  RandomStream rng{0, 0};
  ChainStats stats;
};

class GibbsSampler {
 public:
  /// Fresh chain from the documented initialization.
  GibbsSampler(const Dataset& data, const RunConfig& config, int chain_id);

  /// Chain restored from a checkpoint written by save_checkpoint.
  static GibbsSampler from_checkpoint(const Dataset& data, const RunConfig& config,
                                      const std::filesystem::path& path);

  void sweep();

  const ChainState& state() const { return state_; }
  ChainState& mutable_state() { return state_; }
  int chain_id() const { return chain_id_; }
  /// Dataset as seen by the sampler (standardized design when enabled).
  const Dataset& data() const { return data_; }
  const Eigen::VectorXd& covariate_scale() const { return scale_; }

  void set_faults(const SweepFaults& faults) { faults_ = faults; }
  /// Replace the observed counts (joint-distribution test regenerates data).
  void set_counts(const Eigen::VectorXi& counts);

  /// Collision probability per cell under the current state.
  Eigen::VectorXd probabilities() const;
  /// Recorded values in parameter_names() order, beta on the raw scale.
  std::vector<double> global_values() const;

  /// Empty string when the state satisfies every sweep invariant.
  std::string check_invariants() const;

  void record(DrawStore& draws) const;
  bool should_record() const;

  void save_checkpoint(const std::filesystem::path& path) const;

 private:
  GibbsSampler(const Dataset& data, const RunConfig& config, int chain_id, bool initialize);

  template <typename F>
  void guarded(const char* block, F&& f);

  Dataset data_;
  RunConfig config_;
  int chain_id_;
  Eigen::VectorXd scale_;
  long max_count_ = 0;
  SweepFaults faults_;
  ChainState state_;
};

/// Run one chain to completion (writing checkpoints when configured).
DrawStore run_chain(const RunConfig& config, const Dataset& data, int chain_id);

/// Continue a checkpointed chain to config.iterations. Draws flushed beside
/// the checkpoint ("<checkpoint>.draws.csv", "<checkpoint>.cells.csv") are
/// prepended, so the result equals the uninterrupted chain.
DrawStore resume_chain(const RunConfig& config, const Dataset& data,
                       const std::filesystem::path& checkpoint);

/// All chains, ids 0..chains-1, executed on config.workers threads.
DrawStore run_chains(const RunConfig& config, const Dataset& data);

/// Checkpoint file for a chain: "<base>.chain<id>".
std::filesystem::path chain_checkpoint_path(const std::filesystem::path& base, int chain_id);

}  // namespace avc
