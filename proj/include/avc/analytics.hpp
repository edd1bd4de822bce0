#pragma once

// Post-processing of posterior draws: summaries, expected collisions,
// hotspot ranking, monthly totals and counterfactual design edits.

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "avc/dataset.hpp"
#include "avc/draws.hpp"

namespace avc {

struct PosteriorSummary {
  std::string parameter;
  double mean = 0.0;
  double lower = 0.0;  // 2.5% quantile
  double upper = 0.0;  // 97.5% quantile
  bool significant = false;  // zero outside [lower, upper]
};

/// Linear-interpolated empirical quantile of unsorted values, prob in [0,1].
double empirical_quantile(std::vector<double> values, double prob);

PosteriorSummary summarize_values(const std::string& name, const std::vector<double>& values);

/// One row per recorded parameter, pooled over chains.
std::vector<PosteriorSummary> summarize(const DrawStore& draws);

/// Posterior mean of n * p per cell (month-major), averaging the product
/// within each stored cell draw.
Eigen::VectorXd expected_avc(const DrawStore& draws, const Dataset& data);

struct Hotspot {
  std::string segment_id;
  int month = 0;  // 1-based
  double expected = 0.0;
};

/// Top cells by expected AVC, descending; ties by segment_id then month.
/// `month` (1-based) restricts the ranking to one month.
std::vector<Hotspot> rank_hotspots(const Eigen::VectorXd& expected, const Dataset& data,
                                   int top_k, std::optional<int> month = std::nullopt);

struct MonthlyTotal {
  int month = 0;  // 1-based
  double observed = 0.0;
  double expected = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

/// Observed monthly sums of k next to the posterior of sum n*p, taken from
/// the recorded expected_total functionals (or from cell draws when those
/// are absent).
std::vector<MonthlyTotal> monthly_totals(const DrawStore& draws, const Dataset& data);

struct ScenarioEdit {
  enum class Mode { add, replace };
  std::string covariate;
  Mode mode = Mode::add;
  double value = 0.0;
  std::vector<std::string> segments;  // empty: every segment
};

struct ScenarioResult {
  Eigen::VectorXd delta_p;         // posterior mean of p_new - p_old per cell
  Eigen::VectorXd delta_expected;  // posterior mean of n (p_new - p_old)
  Eigen::VectorXd min_delta_p;     // extremes over draws, for sign checks
  Eigen::VectorXd max_delta_p;
  long draws = 0;
  long cell_thin = 0;
};

/// Recompute p under an edited time-invariant covariate for every stored cell
/// draw, holding n fixed. psi_old is recovered as logit(p) and shifted by
/// beta_j * (x_new - x_old) using beta from the matching global record.
ScenarioResult scenario_delta(const DrawStore& draws, const Dataset& data,
                              const ScenarioEdit& edit);

}  // namespace avc
