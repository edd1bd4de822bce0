#include "avc/analytics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include "avc/collision.hpp"
#include "avc/errors.hpp"

namespace avc {

double empirical_quantile(std::vector<double> values, double prob) {
  if (values.empty()) throw DataError("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double h = prob * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

PosteriorSummary summarize_values(const std::string& name, const std::vector<double>& values) {
  if (values.empty()) throw DataError("summarize: no draws for " + name);
  PosteriorSummary s;
  s.parameter = name;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  s.lower = empirical_quantile(values, 0.025);
  s.upper = empirical_quantile(values, 0.975);
  s.significant = !(s.lower <= 0.0 && 0.0 <= s.upper);
  return s;
}

std::vector<PosteriorSummary> summarize(const DrawStore& draws) {
  if (draws.records.empty()) throw DataError("summarize: no posterior draws");
  std::vector<PosteriorSummary> out;
  out.reserve(draws.parameters.size());
  for (std::size_t p = 0; p < draws.parameters.size(); ++p) {
    out.push_back(summarize_values(draws.parameters[p], draws.pooled(p)));
  }
  return out;
}

namespace {

void require_cells(const DrawStore& draws, const Dataset& data) {
  if (draws.cells.empty()) {
    throw DataError("no per-cell draws available; rerun fit with store_cells=true");
  }
  for (const auto& cd : draws.cells) {
    if (cd.crossings.size() != data.cells() || cd.probability.size() != data.cells()) {
      throw DataError("per-cell draws do not match the dataset dimensions");
    }
  }
}

}  // namespace

Eigen::VectorXd expected_avc(const DrawStore& draws, const Dataset& data) {
  require_cells(draws, data);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(data.cells());
  for (const auto& cd : draws.cells) {
    sum.array() += cd.crossings.cast<double>().array() * cd.probability.array();
  }
  return sum / static_cast<double>(draws.cells.size());
}

std::vector<Hotspot> rank_hotspots(const Eigen::VectorXd& expected, const Dataset& data,
                                   int top_k, std::optional<int> month) {
  if (top_k <= 0) throw InvalidParameter("rank_hotspots: top_k must be positive");
  if (expected.size() != data.cells()) {
    throw InvalidParameter("rank_hotspots: expected table does not match the dataset");
  }
  if (month && (*month < 1 || *month > data.months())) {
    throw InvalidParameter("rank_hotspots: month filter out of range");
  }
  std::vector<Hotspot> all;
  for (int t = 0; t < data.months(); ++t) {
    if (month && *month != t + 1) continue;
    for (Eigen::Index s = 0; s < data.segments(); ++s) {
      all.push_back({data.segment_ids()[static_cast<std::size_t>(s)], t + 1,
                     expected[data.cell(s, t)]});
    }
  }
  auto before = [](const Hotspot& a, const Hotspot& b) {
    if (a.expected != b.expected) return a.expected > b.expected;
    if (a.segment_id != b.segment_id) return a.segment_id < b.segment_id;
    return a.month < b.month;
  };
  const auto k = std::min(all.size(), static_cast<std::size_t>(top_k));
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), before);
  all.resize(k);
  return all;
}

std::vector<MonthlyTotal> monthly_totals(const DrawStore& draws, const Dataset& data) {
  const Eigen::VectorXd observed = data.monthly_observed();
  std::vector<MonthlyTotal> out;
  for (int t = 0; t < data.months(); ++t) {
    MonthlyTotal row;
    row.month = t + 1;
    row.observed = observed[t];
    std::vector<double> values;
    if (auto idx = draws.parameter_index("expected_total[" + std::to_string(t + 1) + "]");
        idx && !draws.records.empty()) {
      values = draws.pooled(*idx);
    } else {
      require_cells(draws, data);
      for (const auto& cd : draws.cells) {
        double total = 0.0;
        for (Eigen::Index s = 0; s < data.segments(); ++s) {
          const auto c = data.cell(s, t);
          total += cd.crossings[c] * cd.probability[c];
        }
        values.push_back(total);
      }
    }
    const auto summary = summarize_values("expected_total", values);
    row.expected = summary.mean;
    row.lower = summary.lower;
    row.upper = summary.upper;
    out.push_back(row);
  }
  return out;
}

ScenarioResult scenario_delta(const DrawStore& draws, const Dataset& data,
                              const ScenarioEdit& edit) {
  const auto j = data.segment_covariate_index(edit.covariate);
  if (!j) {
    if (data.time_covariate_index(edit.covariate)) {
      throw InvalidParameter("scenario: '" + edit.covariate +
                             "' is time-varying; only segment design factors can be edited");
    }
    throw InvalidParameter("scenario: unknown covariate '" + edit.covariate + "'");
  }
  require_cells(draws, data);
  const auto beta_idx = draws.parameter_index("beta[" + edit.covariate + "]");
  if (!beta_idx) throw DataError("scenario: draws do not contain beta[" + edit.covariate + "]");

  // Per-segment change in the covariate.
  std::set<std::string> chosen(edit.segments.begin(), edit.segments.end());
  for (const auto& id : chosen) {
    if (!data.segment_index(id)) throw InvalidParameter("scenario: unknown segment '" + id + "'");
  }
  Eigen::VectorXd dx = Eigen::VectorXd::Zero(data.segments());
  for (Eigen::Index s = 0; s < data.segments(); ++s) {
    if (!chosen.empty() && !chosen.count(data.segment_ids()[static_cast<std::size_t>(s)])) continue;
    const double old = data.x()(s, *j);
    dx[s] = edit.mode == ScenarioEdit::Mode::add ? edit.value : edit.value - old;
  }

  std::map<std::pair<int, long>, const DrawRecord*> index;
  for (const auto& r : draws.records) index[{r.chain, r.iteration}] = &r;

  const auto cells = data.cells();
  ScenarioResult res;
  res.delta_p = Eigen::VectorXd::Zero(cells);
  res.delta_expected = Eigen::VectorXd::Zero(cells);
  res.min_delta_p = Eigen::VectorXd::Constant(cells, std::numeric_limits<double>::infinity());
  res.max_delta_p = Eigen::VectorXd::Constant(cells, -std::numeric_limits<double>::infinity());
  res.cell_thin = draws.cell_thin;
  for (const auto& cd : draws.cells) {
    const auto it = index.find({cd.chain, cd.iteration});
    if (it == index.end()) {
      throw DataError("scenario: no global draw for chain " + std::to_string(cd.chain) +
                      ", iteration " + std::to_string(cd.iteration));
    }
    const double beta = it->second->values[*beta_idx];
    for (Eigen::Index s = 0; s < data.segments(); ++s) {
      const double shift = beta * dx[s];
      for (int t = 0; t < data.months(); ++t) {
        const auto c = data.cell(s, t);
        const double p = cd.probability[c];
        const double psi = std::log(p) - std::log1p(-p);
        const double dp = collision_prob(psi + shift) - p;
        res.delta_p[c] += dp;
        res.delta_expected[c] += cd.crossings[c] * dp;
        res.min_delta_p[c] = std::min(res.min_delta_p[c], dp);
        res.max_delta_p[c] = std::max(res.max_delta_p[c], dp);
      }
    }
    ++res.draws;
  }
  res.delta_p /= static_cast<double>(res.draws);
  res.delta_expected /= static_cast<double>(res.draws);
  return res;
}

}  // namespace avc
