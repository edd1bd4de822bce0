#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avc/dataset.hpp"

namespace avc {

/// One retained draw of every global parameter and scalar functional.
struct DrawRecord {
  int chain = 0;
  long iteration = 0;
  std::vector<double> values;  // aligned with DrawStore::parameters
};

/// Thinned per-cell sample of crossings and collision probability.
struct CellDraw {
  int chain = 0;
  long iteration = 0;
  Eigen::VectorXi crossings;
  Eigen::VectorXd probability;
};

struct ChainStats {
  int chain = 0;
  long crossing_accepted = 0;
  long crossing_proposed = 0;
  long cluster_accepted = 0;
  long cluster_proposed = 0;

  double crossing_acceptance() const {
    return crossing_proposed > 0
               ? static_cast<double>(crossing_accepted) / static_cast<double>(crossing_proposed)
               : 0.0;
  }
};

/// Posterior draws across chains. Records are grouped by chain with strictly
/// increasing iteration numbers inside each chain.
struct DrawStore {
  std::vector<std::string> parameters;
  std::vector<DrawRecord> records;
  std::vector<CellDraw> cells;
  std::vector<ChainStats> chain_stats;
  long cell_thin = 0;

  std::optional<std::size_t> parameter_index(const std::string& name) const;
  std::vector<int> chain_ids() const;
  /// Retained values of one parameter for one chain, in iteration order.
  std::vector<double> series(std::size_t parameter, int chain) const;
  /// Values of one parameter pooled over all chains.
  std::vector<double> pooled(std::size_t parameter) const;
  /// Record at (chain, iteration), if retained.
  const DrawRecord* find(int chain, long iteration) const;

  /// Append another chain's fragment (parameter lists must agree).
  void merge(DrawStore&& other);
};

/// Names of the recorded global quantities for a dataset, in record order:
/// beta[x], alpha0[t], gamma[t,y], q[t], expected_total[t], nonzero_crossings,
/// indicators_on. Months are 1-based.
std::vector<std::string> parameter_names(const Dataset& data);

/// Long format: chain,iteration,parameter,value.
void write_draws_csv(const DrawStore& draws, const std::filesystem::path& path);
DrawStore read_draws_csv(const std::filesystem::path& path);

/// Long format: chain,iteration,segment_id,month,n,p.
void write_cells_csv(const DrawStore& draws, const Dataset& data,
                     const std::filesystem::path& path);
/// Replaces draws.cells; cell_thin is inferred from the iteration spacing.
void read_cells_csv(DrawStore& draws, const Dataset& data, const std::filesystem::path& path);

/// Per-chain acceptance counters: chain,crossing_accepted,crossing_proposed,
/// cluster_accepted,cluster_proposed.
void write_chain_stats_csv(const std::vector<ChainStats>& stats, const std::filesystem::path& path);
std::vector<ChainStats> read_chain_stats_csv(const std::filesystem::path& path);

}  // namespace avc
