#pragma once

// Convergence diagnostics for multi-chain MCMC output.

#include <optional>
#include <string>
#include <vector>

#include "avc/draws.hpp"

namespace avc {

/// Potential scale reduction factor. Requires at least two chains of equal
/// length >= 10. Returns nullopt when the pooled within-chain variance is zero.
std::optional<double> gelman_rubin(const std::vector<std::vector<double>>& chains);

/// Effective sample size of one series by Geyer's initial positive sequence.
/// Requires length >= 50. Returns nullopt for a constant series.
std::optional<double> effective_sample_size(const std::vector<double>& series);

/// Multi-chain ESS: sum of per-chain estimates.
std::optional<double> effective_sample_size(const std::vector<std::vector<double>>& chains);

struct ParameterDiagnostic {
  std::string name;
  std::optional<double> r_hat;
  std::optional<double> ess;
};

/// Model parameters and expected monthly totals count toward the summary
/// r_hat and ESS; the count functionals (nonzero_crossings, indicators_on)
/// are reported but not averaged.
bool is_monitored(const std::string& parameter);

struct DiagnosticReport {
  std::vector<ParameterDiagnostic> parameters;
  /// Over the monitored parameters (is_monitored) with a defined r_hat.
  std::optional<double> average_r_hat;
  std::optional<double> max_r_hat;
  std::optional<double> min_ess;
  std::vector<ChainStats> chains;
  double crossing_acceptance = 0.0;  // pooled over chains
  long draws_per_chain = 0;

  std::string to_text() const;
  std::string to_json() const;
};

/// Diagnostics for every recorded parameter. Parameters whose series are too
/// short or have fewer than two chains are reported without r_hat/ess.
DiagnosticReport diagnose(const DrawStore& draws);

}  // namespace avc
