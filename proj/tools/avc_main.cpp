// avc: command-line front end for simulating, fitting and post-processing the
// latent-exposure collision model.
//
// Exit codes: 0 success, 1 usage error, 2 data validation error,
// 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "avc/analytics.hpp"
#include "avc/dataset.hpp"
#include "avc/diagnostics.hpp"
#include "avc/draws.hpp"
#include "avc/errors.hpp"
#include "avc/sampler.hpp"
#include "avc/simulate.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw avc::DataError("cannot write " + path.string());
  return out;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Options shared by every subcommand that reads the panel.
struct DataOptions {
  std::string segments;
  std::string panel;
  int months = 12;
  std::vector<std::string> segment_covariates;
  std::vector<std::string> time_covariates;
  std::vector<std::string> flag_covariates;
  std::vector<std::string> nonnegative_covariates;

  void add(CLI::App* app) {
    app->add_option("--segments", segments, "Segments CSV (segment_id + covariates)")->required();
    app->add_option("--panel", panel, "Panel CSV (segment_id, month, avc_count, ...)")->required();
    app->add_option("--months", months, "Months in the panel")->capture_default_str();
    app->add_option("--segment-covariates,--segment_covariates", segment_covariates,
                    "Segment covariate columns (default: all)")->delimiter(',');
    app->add_option("--time-covariates,--time_covariates", time_covariates,
                    "Time-varying covariate columns (default: all)")->delimiter(',');
    app->add_option("--flag-covariates,--flag_covariates", flag_covariates,
                    "Segment covariates restricted to 0/1")->delimiter(',');
    app->add_option("--nonnegative-covariates,--nonnegative_covariates", nonnegative_covariates,
                    "Segment covariates restricted to >= 0")->delimiter(',');
  }

  avc::Dataset load() const {
    auto schema = avc::infer_schema(segments, panel, months);
    if (!segment_covariates.empty()) schema.segment_covariates = segment_covariates;
    if (!time_covariates.empty()) schema.time_covariates = time_covariates;
    schema.flag_covariates = flag_covariates;
    schema.nonnegative_covariates = nonnegative_covariates;
    return avc::load_dataset(segments, panel, schema);
  }
};

// ---------------------------------------------------------------------------
// simulate

// Defaults reproduce avc::recovery_spec: centered covariates with effects
// large enough that collision probabilities span most of (0, 1).
struct SimulateOptions {
  long segments = 200;
  int months = 12;
  std::uint64_t seed = 1;
  std::string out_dir = "sim";
  std::vector<std::string> segment_covariates = {
      "length=uniform:-1:1", "log_adt=normal:0:1", "speed_limit=normal:0:8",
      "urban=bernoulli:0.3", "median_barrier=bernoulli:0.2"};
  std::vector<double> beta = {1.0, -1.5, 0.1, -1.0, -0.8};
  std::vector<std::string> time_covariates = {"snow=normal:0:1"};
  std::vector<double> alpha = {1, 1, 1, 1, 1, -1.5, -1.5, -1.5, 1, 2, 2, 2};
  std::vector<double> gamma = {0.2};
  std::vector<double> q = {0.5};
  std::vector<double> cluster_mean = {3.0, 8.0, 15.0};
  std::vector<double> cluster_sd = {2.0, 4.0, 6.0};
  std::vector<double> cluster_weights = {0.5, 0.3, 0.2};
};

std::pair<std::string, avc::CovariateDistribution> parse_covariate(const std::string& text) {
  const auto eq = text.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw avc::ConfigError("covariate '" + text + "' must look like name=kind:params");
  }
  return {text.substr(0, eq), avc::CovariateDistribution::parse(text.substr(eq + 1))};
}

// Values recycle over months, so 12 seasonal values cover any panel length.
Eigen::VectorXd per_month(const std::vector<double>& v, int months, const char* what) {
  if (v.empty()) throw avc::ConfigError(std::string(what) + " needs at least one value");
  Eigen::VectorXd out(months);
  for (int t = 0; t < months; ++t) out[t] = v[static_cast<std::size_t>(t) % v.size()];
  return out;
}

int run_simulate(const SimulateOptions& o) {
  avc::GenerationSpec spec;
  spec.segments = o.segments;
  spec.months = o.months;
  for (const auto& c : o.segment_covariates) {
    auto [name, dist] = parse_covariate(c);
    spec.segment_covariates.push_back(name);
    spec.segment_distributions.push_back(dist);
  }
  for (const auto& c : o.time_covariates) {
    auto [name, dist] = parse_covariate(c);
    spec.time_covariates.push_back(name);
    spec.time_distributions.push_back(dist);
  }
  const auto Q = static_cast<Eigen::Index>(spec.time_covariates.size());
  spec.beta = Eigen::Map<const Eigen::VectorXd>(o.beta.data(), static_cast<Eigen::Index>(o.beta.size()));
  spec.alpha = per_month(o.alpha, o.months, "alpha");
  spec.q = per_month(o.q, o.months, "q");
  spec.gamma.resize(o.months, Q);
  if (static_cast<Eigen::Index>(o.gamma.size()) == Q) {
    for (int t = 0; t < o.months; ++t) {
      for (Eigen::Index j = 0; j < Q; ++j) spec.gamma(t, j) = o.gamma[static_cast<std::size_t>(j)];
    }
  } else if (static_cast<Eigen::Index>(o.gamma.size()) == o.months * Q) {
    for (int t = 0; t < o.months; ++t) {
      for (Eigen::Index j = 0; j < Q; ++j) spec.gamma(t, j) = o.gamma[static_cast<std::size_t>(t * Q + j)];
    }
  } else {
    throw avc::ConfigError("gamma needs one value per time covariate or months x covariates values");
  }
  const auto C = static_cast<Eigen::Index>(o.cluster_mean.size());
  spec.cluster_mean = Eigen::Map<const Eigen::VectorXd>(o.cluster_mean.data(), C);
  spec.cluster_sd = Eigen::Map<const Eigen::VectorXd>(o.cluster_sd.data(),
                                                      static_cast<Eigen::Index>(o.cluster_sd.size()));
  const auto W = static_cast<Eigen::Index>(o.cluster_weights.size());
  if (C == 0 || W % C != 0) throw avc::ConfigError("cluster_weights must have C or months x C values");
  spec.cluster_weights = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                        Eigen::RowMajor>>(o.cluster_weights.data(),
                                                                          W / C, C);

  avc::RandomStream rng(o.seed, 0);
  const auto [data, truth] = avc::simulate_dataset(spec, rng);
  const fs::path dir = o.out_dir;
  fs::create_directories(dir);
  avc::write_segments_csv(data, dir / "segments.csv");
  avc::write_panel_csv(data, dir / "panel.csv");

  json j;
  for (Eigen::Index i = 0; i < truth.beta.size(); ++i) {
    j["beta"][data.segment_covariate_names()[static_cast<std::size_t>(i)]] = truth.beta[i];
  }
  j["alpha0"] = std::vector<double>(truth.alpha.data(), truth.alpha.data() + truth.alpha.size());
  j["q"] = std::vector<double>(truth.q.data(), truth.q.data() + truth.q.size());
  for (int t = 0; t < o.months; ++t) {
    std::vector<double> row(static_cast<std::size_t>(Q));
    for (Eigen::Index k = 0; k < Q; ++k) row[static_cast<std::size_t>(k)] = truth.gamma(t, k);
    j["gamma"].push_back(row);
  }
  j["cluster_mean"] = o.cluster_mean;
  j["cluster_sd"] = o.cluster_sd;
  j["cluster_weights"] = o.cluster_weights;
  j["seed"] = o.seed;
  open_out(dir / "truth.json") << j.dump(2) << "\n";

  auto cells = open_out(dir / "truth_cells.csv");
  cells << "segment_id,month,n,p,indicator,cluster\n";
  for (Eigen::Index s = 0; s < data.segments(); ++s) {
    for (int t = 0; t < data.months(); ++t) {
      const auto c = data.cell(s, t);
      cells << data.segment_ids()[static_cast<std::size_t>(s)] << ',' << t + 1 << ','
            << truth.crossings[c] << ',' << num(truth.probability[c]) << ','
            << truth.indicator[c] << ',' << truth.cluster[c] + 1 << '\n';
    }
  }
  std::cout << "wrote " << data.segments() << " segments x " << data.months() << " months to "
            << dir.string() << " (total AVCs " << data.counts().sum() << ")\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// fit

struct FitOptions {
  DataOptions data;
  avc::RunConfig run;
  std::string cluster_update = "augmented";
  std::string indicator_update = "marginal";
  std::string out_dir = "fit";
  bool resume = false;
  std::string checkpoint;
};

void write_fit_outputs(const avc::DrawStore& draws, const avc::Dataset& data, const fs::path& dir,
                       bool cells) {
  fs::create_directories(dir);
  avc::write_draws_csv(draws, dir / "draws.csv");
  if (cells) avc::write_cells_csv(draws, data, dir / "cells.csv");
  avc::write_chain_stats_csv(draws.chain_stats, dir / "chain_stats.csv");
  const auto report = avc::diagnose(draws);
  open_out(dir / "diagnostics.txt") << report.to_text();
  open_out(dir / "diagnostics.json") << report.to_json() << "\n";
}

int run_fit(FitOptions& o) {
  if (o.cluster_update == "augmented") {
    o.run.cluster_update = avc::ClusterUpdate::augmented;
  } else if (o.cluster_update == "conjugate") {
    o.run.cluster_update = avc::ClusterUpdate::conjugate;
  } else {
    throw avc::ConfigError("cluster_update must be 'augmented' or 'conjugate'");
  }
  if (o.indicator_update == "marginal") {
    o.run.indicator_update = avc::IndicatorUpdate::marginal;
  } else if (o.indicator_update == "augmented") {
    o.run.indicator_update = avc::IndicatorUpdate::augmented;
  } else {
    throw avc::ConfigError("indicator_update must be 'marginal' or 'augmented'");
  }
  if (!o.checkpoint.empty()) o.run.checkpoint_path = o.checkpoint;
  o.run.validate();
  const auto data = o.data.load();

  avc::DrawStore draws;
  if (o.resume) {
    if (o.run.checkpoint_path.empty()) throw avc::ConfigError("--resume needs --checkpoint");
    for (int c = 0; c < o.run.chains; ++c) {
      const auto path = avc::chain_checkpoint_path(o.run.checkpoint_path, c);
      draws.merge(fs::exists(path) ? avc::resume_chain(o.run, data, path)
                                   : avc::run_chain(o.run, data, c));
    }
  } else {
    draws = avc::run_chains(o.run, data);
  }
  write_fit_outputs(draws, data, o.out_dir, o.run.store_cells);
  const auto report = avc::diagnose(draws);
  std::cout << "fit: " << o.run.chains << " chains, " << draws.records.size()
            << " retained draws; average r_hat "
            << (report.average_r_hat ? num(*report.average_r_hat) : std::string("n/a"))
            << "; crossing acceptance " << report.crossing_acceptance << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// diagnose / summarize

int run_diagnose(const std::string& draws_path, const std::string& stats_path,
                 const std::string& out) {
  auto draws = avc::read_draws_csv(draws_path);
  if (!stats_path.empty()) draws.chain_stats = avc::read_chain_stats_csv(stats_path);
  const auto report = avc::diagnose(draws);
  std::cout << report.to_text();
  if (!out.empty()) open_out(out) << report.to_json() << "\n";
  return kOk;
}

int run_summarize(const std::string& draws_path, const std::string& out) {
  const auto draws = avc::read_draws_csv(draws_path);
  const auto rows = avc::summarize(draws);
  std::ostringstream os;
  os << "parameter,mean,q025,q975,significant\n";
  for (const auto& r : rows) {
    os << r.parameter << ',' << num(r.mean) << ',' << num(r.lower) << ',' << num(r.upper) << ','
       << (r.significant ? "true" : "false") << '\n';
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    open_out(out) << os.str();
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// hotspots / monthly / scenario

int run_hotspots(const DataOptions& d, const std::string& cells_path, int top_k,
                 std::optional<int> month, const std::string& out,
                 const std::string& expected_out) {
  const auto data = d.load();
  avc::DrawStore draws;
  avc::read_cells_csv(draws, data, cells_path);
  const auto expected = avc::expected_avc(draws, data);
  const auto ranked = avc::rank_hotspots(expected, data, top_k, month);
  std::ostringstream os;
  os << "rank,segment_id,month,expected_avc\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    os << i + 1 << ',' << ranked[i].segment_id << ',' << ranked[i].month << ','
       << num(ranked[i].expected) << '\n';
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    open_out(out) << os.str();
  }
  if (!expected_out.empty()) {
    auto e = open_out(expected_out);
    e << "segment_id,month,expected_avc,cell_draws,cell_thin\n";
    for (Eigen::Index s = 0; s < data.segments(); ++s) {
      for (int t = 0; t < data.months(); ++t) {
        e << data.segment_ids()[static_cast<std::size_t>(s)] << ',' << t + 1 << ','
          << num(expected[data.cell(s, t)]) << ',' << draws.cells.size() << ',' << draws.cell_thin
          << '\n';
      }
    }
  }
  return kOk;
}

int run_monthly(const DataOptions& d, const std::string& draws_path, const std::string& cells_path,
                const std::string& out) {
  const auto data = d.load();
  auto draws = avc::read_draws_csv(draws_path);
  if (!cells_path.empty()) avc::read_cells_csv(draws, data, cells_path);
  const auto rows = avc::monthly_totals(draws, data);
  std::ostringstream os;
  os << "month,observed,expected,lower,upper\n";
  for (const auto& r : rows) {
    os << r.month << ',' << num(r.observed) << ',' << num(r.expected) << ',' << num(r.lower) << ','
       << num(r.upper) << '\n';
  }
  if (out.empty()) {
    std::cout << os.str();
  } else {
    open_out(out) << os.str();
  }
  return kOk;
}

struct ScenarioOptions {
  DataOptions data;
  std::string draws;
  std::string cells;
  std::string covariate;
  std::optional<double> delta;
  std::optional<double> set;
  std::vector<std::string> segment_ids;
  std::string out;
};

int run_scenario(const ScenarioOptions& o) {
  if (o.delta.has_value() == o.set.has_value()) {
    throw CLI::ValidationError("scenario", "exactly one of --delta or --set is required");
  }
  const auto data = o.data.load();
  auto draws = avc::read_draws_csv(o.draws);
  avc::read_cells_csv(draws, data, o.cells);
  avc::ScenarioEdit edit;
  edit.covariate = o.covariate;
  edit.mode = o.delta ? avc::ScenarioEdit::Mode::add : avc::ScenarioEdit::Mode::replace;
  edit.value = o.delta ? *o.delta : *o.set;
  edit.segments = o.segment_ids;
  const auto res = avc::scenario_delta(draws, data, edit);
  std::ostringstream os;
  os << "segment_id,month,delta_p,delta_expected_avc,min_delta_p,max_delta_p,cell_draws,cell_thin\n";
  long negative = 0;
  for (Eigen::Index s = 0; s < data.segments(); ++s) {
    for (int t = 0; t < data.months(); ++t) {
      const auto c = data.cell(s, t);
      negative += res.delta_p[c] < 0.0 ? 1 : 0;
      os << data.segment_ids()[static_cast<std::size_t>(s)] << ',' << t + 1 << ','
         << num(res.delta_p[c]) << ',' << num(res.delta_expected[c]) << ','
         << num(res.min_delta_p[c]) << ',' << num(res.max_delta_p[c]) << ',' << res.draws << ','
         << res.cell_thin << '\n';
    }
  }
  if (o.out.empty()) {
    std::cout << os.str();
  } else {
    open_out(o.out) << os.str();
    std::cout << "scenario: " << negative << " of " << data.cells()
              << " cells with negative mean delta p; total delta expected AVC "
              << res.delta_expected.sum() << " (" << res.draws << " cell draws, thin "
              << res.cell_thin << ")\n";
  }
  return kOk;
}

// Config items without a section belong to the subcommand being run.
class SubcommandConfig : public CLI::ConfigTOML {
 public:
  explicit SubcommandConfig(std::string subcommand) : subcommand_(std::move(subcommand)) {}

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    auto items = CLI::ConfigTOML::from_config(input);
    if (subcommand_.empty()) return items;
    for (auto& item : items) {
      if (item.parents.empty() || item.parents.front() != subcommand_) {
        item.parents.insert(item.parents.begin(), subcommand_);
      }
    }
    return items;
  }

 private:
  std::string subcommand_;
};

std::string first_positional(int argc, char** argv) {
  for (int i = 1; i < argc; ++i) {
    if (argv[i][0] != '-') return argv[i];
  }
  return {};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Latent-exposure Bayesian model for animal-vehicle collision panels"};
  app.require_subcommand(1);
  // CLI11 reads config files on the top-level app only. Subcommands fall
  // through to it for --config, and unsectioned keys are routed to whichever
  // subcommand was named on the command line.
  app.fallthrough();
  app.set_config("--config", "", "TOML configuration file; keys are long option names");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.config_formatter(std::make_shared<SubcommandConfig>(first_positional(argc, argv)));
  auto with_config = [](CLI::App* sub) {
    sub->footer("Any option may also be set in the file given to --config.");
    return sub;
  };

  // simulate
  SimulateOptions sim;
  auto* simulate = with_config(app.add_subcommand("simulate", "Generate a synthetic panel"));
  simulate->add_option("--segments", sim.segments)->capture_default_str();
  simulate->add_option("--months", sim.months)->capture_default_str();
  simulate->add_option("--seed", sim.seed)->capture_default_str();
  simulate->add_option("--out-dir,--out_dir", sim.out_dir)->capture_default_str();
  simulate->add_option("--segment-covariate,--segment_covariates", sim.segment_covariates,
                       "name=kind:params, kind in constant|normal|uniform|bernoulli|gamma");
  simulate->add_option("--beta", sim.beta)->delimiter(',');
  simulate->add_option("--time-covariate,--time_covariates", sim.time_covariates);
  simulate->add_option("--alpha", sim.alpha, "Per-month values, recycled over months")->delimiter(',');
  simulate->add_option("--gamma", sim.gamma, "Q or months x Q values")->delimiter(',');
  simulate->add_option("--q", sim.q, "Per-month values, recycled over months")->delimiter(',');
  simulate->add_option("--cluster-mean,--cluster_mean", sim.cluster_mean)->delimiter(',');
  simulate->add_option("--cluster-sd,--cluster_sd", sim.cluster_sd)->delimiter(',');
  simulate->add_option("--cluster-weights,--cluster_weights", sim.cluster_weights,
                       "C values, or months x C row-major")->delimiter(',');
  simulate->add_flag("--no-time-covariates,--no_time_covariates",
                     [&](std::int64_t) { sim.time_covariates.clear(); sim.gamma.clear(); },
                     "Generate without time-varying covariates");

  // fit
  FitOptions fit;
  auto* fitc = with_config(app.add_subcommand("fit", "Run the Gibbs sampler"));
  fit.data.add(fitc);
  auto& rc = fit.run;
  fitc->add_option("--out-dir,--out_dir", fit.out_dir)->capture_default_str();
  fitc->add_option("--iterations", rc.iterations)->capture_default_str();
  fitc->add_option("--burn-in,--burn_in", rc.burn_in)->capture_default_str();
  fitc->add_option("--thin", rc.thin)->capture_default_str();
  fitc->add_option("--chains", rc.chains)->capture_default_str();
  fitc->add_option("--seed", rc.seed)->capture_default_str();
  fitc->add_option("--clusters", rc.dp.clusters)->capture_default_str();
  fitc->add_option("--dp-precision,--dp_precision", rc.dp.precision)->capture_default_str();
  fitc->add_option("--mu0", rc.dp.mu0)->capture_default_str();
  fitc->add_option("--d0", rc.dp.d0)->capture_default_str();
  fitc->add_option("--e0", rc.dp.e0)->capture_default_str();
  fitc->add_option("--beta-variance,--beta_variance", rc.prior.beta_variance)->capture_default_str();
  fitc->add_option("--time-variance,--time_variance", rc.prior.time_variance)->capture_default_str();
  fitc->add_option("--q-a,--q_a", rc.prior.q_a)->capture_default_str();
  fitc->add_option("--q-b,--q_b", rc.prior.q_b)->capture_default_str();
  fitc->add_option("--cluster-update,--cluster_update", fit.cluster_update)->capture_default_str();
  fitc->add_option("--indicator-update,--indicator_update", fit.indicator_update,
                   "marginal | augmented")->capture_default_str();
  fitc->add_option("--alpha-q-steps,--alpha_q_steps", rc.alpha_q_steps,
                   "Collapsed (alpha_t, q_t) Metropolis rounds per sweep")->capture_default_str();
  fitc->add_option("--alpha-q-step-size,--alpha_q_step_size", rc.alpha_q_step_size)
      ->capture_default_str();
  fitc->add_option("--pg-threshold,--pg_threshold", rc.pg_normal_threshold)->capture_default_str();
  fitc->add_option("--proposal-floor,--proposal_floor", rc.proposal_floor)->capture_default_str();
  fitc->add_option("--store-cells,--store_cells", rc.store_cells)->capture_default_str();
  fitc->add_option("--cell-thin,--cell_thin", rc.cell_thin)->capture_default_str();
  fitc->add_option("--standardize", rc.standardize)->capture_default_str();
  fitc->add_option("--checkpoint-every,--checkpoint_every", rc.checkpoint_every)->capture_default_str();
  fitc->add_option("--checkpoint", fit.checkpoint, "Checkpoint base path");
  fitc->add_flag("--resume", fit.resume, "Continue chains from their checkpoints");
  fitc->add_option("--workers", rc.workers)->capture_default_str();

  // diagnose
  std::string diag_draws, diag_stats, diag_out;
  auto* diag = with_config(app.add_subcommand("diagnose", "r_hat, ESS and acceptance report"));
  diag->add_option("--draws", diag_draws)->required();
  diag->add_option("--chain-stats,--chain_stats", diag_stats);
  diag->add_option("--out", diag_out, "JSON report path");

  // summarize
  std::string sum_draws, sum_out;
  auto* summ = with_config(app.add_subcommand("summarize", "Posterior means and 95% intervals"));
  summ->add_option("--draws", sum_draws)->required();
  summ->add_option("--out", sum_out);

  // hotspots
  DataOptions hot_data;
  std::string hot_cells, hot_out, hot_expected;
  int hot_k = 20;
  std::optional<int> hot_month;
  auto* hot = with_config(app.add_subcommand("hotspots", "Rank cells by expected AVCs"));
  hot_data.add(hot);
  hot->add_option("--cells", hot_cells)->required();
  hot->add_option("--top-k,--top_k", hot_k)->capture_default_str();
  hot->add_option("--month", hot_month);
  hot->add_option("--out", hot_out);
  hot->add_option("--expected-out,--expected_out", hot_expected, "Full expected AVC table");

  // scenario
  ScenarioOptions sc;
  auto* scen = with_config(app.add_subcommand("scenario", "Counterfactual design edit"));
  sc.data.add(scen);
  scen->add_option("--draws", sc.draws)->required();
  scen->add_option("--cells", sc.cells)->required();
  scen->add_option("--covariate", sc.covariate)->required();
  scen->add_option("--delta", sc.delta, "Additive change");
  scen->add_option("--set", sc.set, "Replacement value");
  scen->add_option("--segment-ids,--segment_ids", sc.segment_ids)->delimiter(',');
  scen->add_option("--out", sc.out);

  // monthly
  DataOptions mon_data;
  std::string mon_draws, mon_cells, mon_out;
  auto* mon = with_config(app.add_subcommand("monthly", "Observed vs expected monthly totals"));
  mon_data.add(mon);
  mon->add_option("--draws", mon_draws)->required();
  mon->add_option("--cells", mon_cells);
  mon->add_option("--out", mon_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim);
    if (*fitc) return run_fit(fit);
    if (*diag) return run_diagnose(diag_draws, diag_stats, diag_out);
    if (*summ) return run_summarize(sum_draws, sum_out);
    if (*hot) return run_hotspots(hot_data, hot_cells, hot_k, hot_month, hot_out, hot_expected);
    if (*scen) return run_scenario(sc);
    if (*mon) return run_monthly(mon_data, mon_draws, mon_cells, mon_out);
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const avc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kUsage;
  } catch (const avc::InvalidParameter& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kUsage;
  } catch (const avc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kData;
  } catch (const avc::NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return kNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  }
  return kUsage;
}
