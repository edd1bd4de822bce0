// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.
//
//   avc_acceptance --avc <path to avc> [--work-dir DIR] [--only 1,2,9]
//                  [--replicates 20] [--iterations 4000]
//
// Criteria 6, 7 and 10 share one set of recovery replicates.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "avc/analytics.hpp"
#include "avc/diagnostics.hpp"
#include "avc/joint_test.hpp"
#include "avc/polya_gamma.hpp"
#include "avc/sampler.hpp"
#include "avc/simulate.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Options {
  std::string avc;
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  int replicates = 20;
  long iterations = 4000;
};

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << "criterion " << id << ": " << detail << std::endl;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return rc == -1 ? -1 : WEXITSTATUS(rc);
}

std::string quote(const fs::path& p) { return "'" + p.string() + "'"; }

// Rows of a simple CSV (no quoted fields), header first.
std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string f;
    while (std::getline(ss, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw std::runtime_error("missing column " + name);
  return static_cast<std::size_t>(it - header.begin());
}

bool same_bytes(const fs::path& a, const fs::path& b) {
  std::ifstream x(a, std::ios::binary), y(b, std::ios::binary);
  if (!x || !y) return false;
  return std::string(std::istreambuf_iterator<char>(x), {}) ==
         std::string(std::istreambuf_iterator<char>(y), {});
}

// ---------------------------------------------------------------------------

void criterion_pg() {
  const auto t0 = Clock::now();
  avc::RandomStream rng(101, 0);
  const long N = 1000000;
  double worst = 0.0;
  for (long b : {1L, 2L, 5L}) {
    for (double c : {-3.0, 0.0, 0.5, 3.0}) {
      double sum = 0.0;
      for (long i = 0; i < N; ++i) sum += avc::sample_polya_gamma(b, c, rng);
      const double se = std::sqrt(avc::polya_gamma_variance(b, c) / N);
      worst = std::max(worst, std::abs(sum / N - avc::polya_gamma_mean(b, c)) / se);
    }
  }
  const double secs = seconds_since(t0);
  report(1, worst < 4.0 && secs < 60.0,
         "PG moments, 12 (b,c) pairs x 1e6 draws, max |error|/SE = " + fmt(worst) + ", " +
             fmt(secs, 3) + " s");
}

void criterion_kernel() {
  const auto t0 = Clock::now();
  const double mass = avc::oracle::kernel_grid_min_mass();
  const double secs = seconds_since(t0);
  report(2, mass >= 1.0 - 1e-9 && secs < 1.0,
         "kernel normalization, min mass over 20 (mu, sd) points = " + fmt(mass, 15) + ", " +
             fmt(secs, 3) + " s");
}

void criterion_mh() {
  const auto t0 = Clock::now();
  const double tv = avc::oracle::single_cell_mh_tv(303, 100000);
  const double secs = seconds_since(t0);
  report(3, tv < 0.02 && secs < 30.0,
         "single-cell MH, TV distance = " + fmt(tv) + " over 1e5 draws, " + fmt(secs, 3) + " s");
}

void criterion_conjugacy() {
  const double ks = avc::oracle::beta_conjugacy_ks(404, 100000);
  report(4, ks < 0.02, "beta conjugacy, KS distance = " + fmt(ks) + " over 1e5 draws");
}

void criterion_joint() {
  const auto t0 = Clock::now();
  avc::JointTestConfig cfg;
  const auto ok = avc::joint_distribution_test(cfg);
  cfg.faults.unsquared_cluster_rate = true;
  const auto bug = avc::joint_distribution_test(cfg);
  const double secs = seconds_since(t0);
  const double within = ok.fraction_within(3.0);
  report(5, within >= 0.95 && bug.max_abs_z() > 5.0 && secs < 900.0,
         "joint-distribution test, " + fmt(within * 100.0) + "% of " +
             std::to_string(ok.statistics.size()) + " |z| <= 3 (max " + fmt(ok.max_abs_z()) +
             "); unsquared-rate fault max |z| = " + fmt(bug.max_abs_z()) + ", " + fmt(secs, 3) +
             " s");
}

// ---------------------------------------------------------------------------

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const Eigen::ArrayXd x = a.array() - a.mean();
  const Eigen::ArrayXd y = b.array() - b.mean();
  return (x * y).sum() / std::sqrt((x * x).sum() * (y * y).sum());
}

void criteria_recovery(const Options& o, bool want6, bool want7, bool want10) {
  const auto t0 = Clock::now();
  const int R = o.replicates;
  std::vector<int> covered(5, 0);
  int ranked = 0;
  double rhat_sum = 0.0, rhat_worst = 0.0, corr_min = 1.0;
  std::vector<std::string> names;
  for (int r = 0; r < R; ++r) {
    avc::RandomStream rng(static_cast<std::uint64_t>(5000 + r), 0);
    const auto [data, truth] = avc::simulate_dataset(avc::recovery_spec(500, 12), rng);
    avc::RunConfig rc;
    rc.iterations = o.iterations;
    rc.burn_in = o.iterations / 2;
    rc.chains = 4;
    rc.seed = static_cast<std::uint64_t>(9000 + r);
    rc.store_cells = false;
    const auto draws = avc::run_chains(rc, data);
    const auto rows = avc::summarize(draws);
    const auto diag = avc::diagnose(draws);

    std::string line = "  replicate " + std::to_string(r + 1) + ": beta covered";
    for (int j = 0; j < 5; ++j) {
      const auto& s = rows[static_cast<std::size_t>(j)];
      const bool in = s.lower <= truth.beta[j] && truth.beta[j] <= s.upper;
      covered[static_cast<std::size_t>(j)] += in ? 1 : 0;
      line += in ? " Y" : " N";
      if (r == 0) names.push_back(s.parameter);
    }
    Eigen::VectorXd alpha(12);
    for (int t = 0; t < 12; ++t) {
      alpha[t] = rows[static_cast<std::size_t>(*draws.parameter_index("alpha0[" + std::to_string(t + 1) + "]"))].mean;
    }
    const bool order = alpha.segment(9, 3).minCoeff() > alpha.segment(5, 3).maxCoeff();
    ranked += order ? 1 : 0;

    const auto months = avc::monthly_totals(draws, data);
    Eigen::VectorXd obs(12), exp(12);
    for (int t = 0; t < 12; ++t) {
      obs[t] = months[static_cast<std::size_t>(t)].observed;
      exp[t] = months[static_cast<std::size_t>(t)].expected;
    }
    const double corr = pearson(obs, exp);
    corr_min = std::min(corr_min, corr);
    const double rhat = diag.average_r_hat.value_or(INFINITY);
    rhat_sum += rhat;
    rhat_worst = std::max(rhat_worst, rhat);
    std::cout << line << "; avg r_hat " << fmt(rhat) << "; months 10-12 above 6-8: "
              << (order ? "yes" : "no") << "; monthly corr " << fmt(corr) << "; "
              << fmt(seconds_since(t0), 4) << " s elapsed" << std::endl;
  }
  const double secs = seconds_since(t0);
  const double rhat_avg = rhat_sum / R;
  const int needed6 = (17 * R + 19) / 20;
  const int needed7 = (18 * R + 19) / 20;
  if (want6) {
    const int least = *std::min_element(covered.begin(), covered.end());
    std::string detail = "parameter recovery, " + std::to_string(R) + " replicates, coverage";
    for (std::size_t j = 0; j < 5; ++j) detail += " " + names[j] + " " + std::to_string(covered[j]);
    detail += "; mean avg r_hat " + fmt(rhat_avg) + " (worst replicate " + fmt(rhat_worst) +
              "); " + fmt(secs, 4) + " s";
    report(6, least >= needed6 && rhat_avg < 1.05 && secs < 7200.0, detail);
  }
  if (want7) {
    report(7, ranked >= needed7,
           "seasonality, months 10-12 ranked above 6-8 in " + std::to_string(ranked) + "/" +
               std::to_string(R) + " replicates");
  }
  if (want10) {
    report(10, corr_min > 0.9,
           "monthly observed vs expected totals, min Pearson correlation over replicates = " +
               fmt(corr_min));
  }
}

// ---------------------------------------------------------------------------

void criterion_scenario(const Options& o, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string avc = quote(o.avc);
  const std::string data = " --segments " + quote(dir / "sim/segments.csv") + " --panel " +
                           quote(dir / "sim/panel.csv");
  bool ok = run(avc + " simulate --segments 200 --seed 8 --out-dir " + quote(dir / "sim")) == 0;
  ok = ok && run(avc + " fit" + data +
                 " --iterations 1500 --burn-in 500 --chains 2 --cell-thin 10 --seed 4 --out-dir " +
                 quote(dir / "fit")) == 0;
  ok = ok && run(avc + " scenario" + data + " --draws " + quote(dir / "fit/draws.csv") +
                 " --cells " + quote(dir / "fit/cells.csv") +
                 " --covariate speed_limit --delta -10 --out " + quote(dir / "scenario.csv")) == 0;
  if (!ok) {
    report(8, false, "scenario pipeline failed to run");
    return;
  }
  const auto draws = read_csv(dir / "fit/draws.csv");
  const auto p = column(draws[0], "parameter"), v = column(draws[0], "value");
  long speed_draws = 0, speed_positive = 0;
  for (std::size_t i = 1; i < draws.size(); ++i) {
    if (draws[i][p] != "beta[speed_limit]") continue;
    ++speed_draws;
    speed_positive += std::stod(draws[i][v]) > 0.0 ? 1 : 0;
  }
  const auto rows = read_csv(dir / "scenario.csv");
  const auto dp = column(rows[0], "delta_p"), mx = column(rows[0], "max_delta_p");
  long cells = 0, negative = 0, negative_every_draw = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    ++cells;
    negative += std::stod(rows[i][dp]) < 0.0 ? 1 : 0;
    negative_every_draw += std::stod(rows[i][mx]) < 0.0 ? 1 : 0;
  }
  const bool precondition = speed_draws > 0 && speed_positive == speed_draws;
  report(8, precondition && cells > 0 && negative == cells && negative_every_draw == cells,
         "scenario --delta -10: beta_speed > 0 in " + std::to_string(speed_positive) + "/" +
             std::to_string(speed_draws) + " draws; delta p < 0 in " + std::to_string(negative) +
             "/" + std::to_string(cells) + " cells (" + std::to_string(negative_every_draw) +
             " negative in every draw)");
}

void criterion_reproducibility(const Options& o, const fs::path& dir) {
  fs::create_directories(dir);
  const std::string avc = quote(o.avc);
  const std::string data = " --segments " + quote(dir / "sim/segments.csv") + " --panel " +
                           quote(dir / "sim/panel.csv");
  const std::string common = " --chains 2 --burn-in 100 --cell-thin 7 --seed 12";
  bool ran = run(avc + " simulate --segments 80 --seed 2 --out-dir " + quote(dir / "sim")) == 0;
  ran = ran && run(avc + " fit" + data + common + " --iterations 300 --out-dir " + quote(dir / "a")) == 0;
  ran = ran && run(avc + " fit" + data + common + " --iterations 300 --out-dir " + quote(dir / "b")) == 0;
  // Interrupted run: stop at 160 with checkpoints, then resume to 300.
  const std::string ckpt = " --checkpoint-every 80 --checkpoint " + quote(dir / "ckpt/state");
  ran = ran && run(avc + " fit" + data + common + ckpt + " --iterations 160 --out-dir " +
                   quote(dir / "part")) == 0;
  ran = ran && run(avc + " fit" + data + common + ckpt + " --resume --iterations 300 --out-dir " +
                   quote(dir / "resumed")) == 0;
  if (!ran) {
    report(9, false, "reproducibility pipeline failed to run");
    return;
  }
  const bool rerun = same_bytes(dir / "a/draws.csv", dir / "b/draws.csv") &&
                     same_bytes(dir / "a/cells.csv", dir / "b/cells.csv");
  const bool resumed = same_bytes(dir / "a/draws.csv", dir / "resumed/draws.csv") &&
                       same_bytes(dir / "a/cells.csv", dir / "resumed/cells.csv");
  report(9, rerun && resumed,
         std::string("identical reruns ") + (rerun ? "bit-identical" : "DIFFER") +
             "; checkpoint resume " + (resumed ? "matches" : "DIFFERS from") +
             " the uninterrupted run");
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Acceptance criteria runner"};
  app.add_option("--avc", o.avc, "Path to the avc binary")->required();
  app.add_option("--work-dir", o.work_dir)->capture_default_str();
  app.add_option("--only", o.only, "Criteria to run (default: all)")->delimiter(',');
  app.add_option("--replicates", o.replicates)->capture_default_str();
  app.add_option("--iterations", o.iterations)->capture_default_str();
  CLI11_PARSE(app, argc, argv);

  const std::set<int> only(o.only.begin(), o.only.end());
  auto want = [&](int id) { return only.empty() || only.count(id) > 0; };
  const fs::path work = o.work_dir;
  fs::remove_all(work);
  fs::create_directories(work);

  try {
    if (want(1)) criterion_pg();
    if (want(2)) criterion_kernel();
    if (want(3)) criterion_mh();
    if (want(4)) criterion_conjugacy();
    if (want(5)) criterion_joint();
    if (want(8)) criterion_scenario(o, work / "scenario");
    if (want(9)) criterion_reproducibility(o, work / "repro");
    if (want(6) || want(7) || want(10)) criteria_recovery(o, want(6), want(7), want(10));
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance runner aborted: " << e.what() << std::endl;
    return 1;
  }
  std::cout << (failures == 0 ? "all selected criteria passed" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}
