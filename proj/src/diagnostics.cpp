#include "avc/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "avc/errors.hpp"

namespace avc {

namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::optional<double> gelman_rubin(const std::vector<std::vector<double>>& chains) {
  if (chains.size() < 2) throw InvalidParameter("gelman_rubin: at least two chains are required");
  const std::size_t n = chains.front().size();
  if (n < 10) throw InvalidParameter("gelman_rubin: chains must have length >= 10");
  for (const auto& c : chains) {
    if (c.size() != n) throw InvalidParameter("gelman_rubin: chains must have equal length");
  }
  const double m = static_cast<double>(chains.size());
  const double nn = static_cast<double>(n);
  std::vector<double> means;
  double within = 0.0;
  for (const auto& c : chains) {
    const double mu = mean_of(c);
    means.push_back(mu);
    double ss = 0.0;
    for (double v : c) ss += (v - mu) * (v - mu);
    within += ss / (nn - 1.0);
  }
  within /= m;
  if (!(within > 0.0)) return std::nullopt;
  const double grand = mean_of(means);
  double between = 0.0;
  for (double mu : means) between += (mu - grand) * (mu - grand);
  between *= nn / (m - 1.0);
  const double pooled = (nn - 1.0) / nn * within + between / nn;
  return std::sqrt(pooled / within);
}

std::optional<double> effective_sample_size(const std::vector<double>& x) {
  const std::size_t n = x.size();
  if (n < 50) throw InvalidParameter("effective_sample_size: series must have length >= 50");
  const double mu = mean_of(x);
  std::vector<double> d(n);
  for (std::size_t i = 0; i < n; ++i) d[i] = x[i] - mu;
  auto autocov = [&](std::size_t lag) {
    double s = 0.0;
    for (std::size_t i = 0; i + lag < n; ++i) s += d[i] * d[i + lag];
    return s / static_cast<double>(n);
  };
  const double c0 = autocov(0);
  if (!(c0 > 0.0)) return std::nullopt;

  // Geyer: sum consecutive pairs Gamma_k = rho_{2k} + rho_{2k+1} while they
  // stay positive, enforcing monotone decrease.
  double tau = -1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; 2 * k + 1 < n; ++k) {
    double pair = (autocov(2 * k) + autocov(2 * k + 1)) / c0;
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    prev = pair;
    tau += 2.0 * pair;
  }
  tau = std::max(tau, 1.0 / std::log10(static_cast<double>(n)));
  return std::min(static_cast<double>(n), static_cast<double>(n) / tau);
}

std::optional<double> effective_sample_size(const std::vector<std::vector<double>>& chains) {
  std::optional<double> total;
  for (const auto& c : chains) {
    if (auto e = effective_sample_size(c)) total = total.value_or(0.0) + *e;
  }
  return total;
}

bool is_monitored(const std::string& parameter) {
  for (const char* prefix : {"beta[", "alpha0[", "gamma[", "q[", "expected_total["}) {
    if (parameter.starts_with(prefix)) return true;
  }
  return false;
}

DiagnosticReport diagnose(const DrawStore& draws) {
  if (draws.records.empty()) throw DataError("diagnose: no draws");
  DiagnosticReport report;
  report.chains = draws.chain_stats;
  long acc = 0, prop = 0;
  for (const auto& s : draws.chain_stats) {
    acc += s.crossing_accepted;
    prop += s.crossing_proposed;
  }
  report.crossing_acceptance = prop > 0 ? static_cast<double>(acc) / static_cast<double>(prop) : 0.0;

  const auto ids = draws.chain_ids();
  std::vector<std::vector<std::vector<double>>> per_param(draws.parameters.size());
  for (std::size_t p = 0; p < draws.parameters.size(); ++p) {
    for (int id : ids) per_param[p].push_back(draws.series(p, id));
  }
  std::size_t shortest = std::numeric_limits<std::size_t>::max();
  for (const auto& c : per_param.front()) shortest = std::min(shortest, c.size());
  report.draws_per_chain = static_cast<long>(shortest);

  double sum = 0.0;
  int counted = 0;
  for (std::size_t p = 0; p < draws.parameters.size(); ++p) {
    ParameterDiagnostic d{draws.parameters[p], std::nullopt, std::nullopt};
    auto& chains = per_param[p];
    for (auto& c : chains) c.resize(shortest);
    if (chains.size() >= 2 && shortest >= 10) d.r_hat = gelman_rubin(chains);
    if (shortest >= 50) d.ess = effective_sample_size(chains);
    const bool monitored = is_monitored(d.name);
    if (d.r_hat && monitored) {
      sum += *d.r_hat;
      ++counted;
      report.max_r_hat = std::max(report.max_r_hat.value_or(0.0), *d.r_hat);
    }
    if (d.ess && monitored) {
      report.min_ess = std::min(report.min_ess.value_or(std::numeric_limits<double>::infinity()), *d.ess);
    }
    report.parameters.push_back(std::move(d));
  }
  if (counted > 0) report.average_r_hat = sum / counted;
  return report;
}

namespace {

std::string fmt(const std::optional<double>& v, int precision = 4) {
  if (!v) return "n/a";
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(precision);
  os << *v;
  return os.str();
}

nlohmann::json opt(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string DiagnosticReport::to_text() const {
  std::ostringstream os;
  os << "draws per chain: " << draws_per_chain << "\n";
  os << "chains: " << chains.size() << "\n";
  os << "average r_hat: " << fmt(average_r_hat) << "\n";
  os << "max r_hat: " << fmt(max_r_hat) << "\n";
  os << "min ess: " << fmt(min_ess, 1) << "\n";
  os << "crossing MH acceptance: " << fmt(crossing_acceptance) << "\n";
  for (const auto& c : chains) {
    os << "  chain " << c.chain << " acceptance " << fmt(c.crossing_acceptance()) << "\n";
  }
  os << "\nparameter                          r_hat        ess\n";
  for (const auto& p : parameters) {
    std::string name = p.name;
    if (name.size() < 30) name.resize(30, ' ');
    os << name << ' ';
    const auto r = fmt(p.r_hat);
    const auto e = fmt(p.ess, 1);
    os << std::string(r.size() < 10 ? 10 - r.size() : 0, ' ') << r << ' '
       << std::string(e.size() < 10 ? 10 - e.size() : 0, ' ') << e << "\n";
  }
  return os.str();
}

std::string DiagnosticReport::to_json() const {
  nlohmann::json j;
  j["draws_per_chain"] = draws_per_chain;
  j["average_r_hat"] = opt(average_r_hat);
  j["max_r_hat"] = opt(max_r_hat);
  j["min_ess"] = opt(min_ess);
  j["crossing_acceptance"] = crossing_acceptance;
  j["chains"] = nlohmann::json::array();
  for (const auto& c : chains) {
    j["chains"].push_back({{"chain", c.chain},
                           {"crossing_accepted", c.crossing_accepted},
                           {"crossing_proposed", c.crossing_proposed},
                           {"crossing_acceptance", c.crossing_acceptance()},
                           {"cluster_accepted", c.cluster_accepted},
                           {"cluster_proposed", c.cluster_proposed}});
  }
  j["parameters"] = nlohmann::json::array();
  for (const auto& p : parameters) {
    j["parameters"].push_back({{"name", p.name}, {"r_hat", opt(p.r_hat)}, {"ess", opt(p.ess)}});
  }
  return j.dump(2);
}

}  // namespace avc
