#include <cmath>

#include "doctest.h"
#include "avc/analytics.hpp"
#include "avc/errors.hpp"
#include "avc/random.hpp"
#include "avc/sampler.hpp"
#include "avc/simulate.hpp"

using namespace avc;

namespace {

// Two segments, one month, one covariate named speed_limit.
Dataset tiny(long k0 = 1, long k1 = 0) {
  Eigen::MatrixXd x(2, 1);
  x << 55.0, 70.0;
  return Dataset({"a", "b"}, {"speed_limit"}, x, {}, Eigen::MatrixXd(2, 0),
                 Eigen::Vector2i(static_cast<int>(k0), static_cast<int>(k1)), 1);
}

DrawStore store_with_cells(const std::vector<Eigen::Vector2i>& n, const std::vector<Eigen::Vector2d>& p) {
  DrawStore d;
  d.parameters = {"beta[speed_limit]"};
  d.cell_thin = 1;
  for (std::size_t i = 0; i < n.size(); ++i) {
    d.records.push_back({0, static_cast<long>(i + 1), {0.01}});
    d.cells.push_back({0, static_cast<long>(i + 1), n[i], p[i]});
  }
  return d;
}

}  // namespace

TEST_CASE("posterior summaries") {
  const auto flat = summarize_values("beta[speed]", std::vector<double>(100, 0.028));
  CHECK(flat.mean == doctest::Approx(0.028));
  CHECK(flat.lower == doctest::Approx(0.028));
  CHECK(flat.upper == doctest::Approx(0.028));
  CHECK(flat.significant);

  std::vector<double> sym;
  for (int i = -500; i <= 500; ++i) sym.push_back(i / 100.0);
  CHECK_FALSE(summarize_values("x", sym).significant);

  RandomStream rng(1, 0);
  std::vector<double> normal(10000);
  for (auto& v : normal) v = 1.0 + 0.5 * rng.normal();
  const auto s = summarize_values("x", normal);
  CHECK(s.lower == doctest::Approx(0.02).epsilon(0.05));
  CHECK(std::abs(s.upper - 1.98) < 0.05);
  CHECK(s.significant);
  CHECK(s.lower <= s.upper);

  CHECK(empirical_quantile({1.0, 2.0, 3.0, 4.0}, 0.5) == doctest::Approx(2.5));
  CHECK_THROWS_AS(summarize(DrawStore{}), DataError);
}

TEST_CASE("expected AVC uses within-draw products") {
  const auto data = tiny();
  SUBCASE("no exposure") {
    const auto d = store_with_cells({Eigen::Vector2i(0, 0), Eigen::Vector2i(0, 0)},
                                    {Eigen::Vector2d(0.3, 0.9), Eigen::Vector2d(0.2, 0.1)});
    CHECK(expected_avc(d, data).isZero());
  }
  SUBCASE("constant cells") {
    const auto d = store_with_cells({Eigen::Vector2i(2, 2)}, {Eigen::Vector2d(0.5, 0.5)});
    CHECK(expected_avc(d, data)[0] == doctest::Approx(1.0));
  }
  SUBCASE("lockstep counterexample") {
    const auto d = store_with_cells({Eigen::Vector2i(0, 0), Eigen::Vector2i(4, 4)},
                                    {Eigen::Vector2d(0.9, 0.9), Eigen::Vector2d(0.1, 0.1)});
    const double got = expected_avc(d, data)[0];
    CHECK(got == doctest::Approx(0.2));
    CHECK(got != doctest::Approx(2.0 * 0.5));
  }
  SUBCASE("missing cells") {
    DrawStore d;
    d.parameters = {"beta[speed_limit]"};
    d.records.push_back({0, 1, {0.1}});
    try {
      expected_avc(d, data);
      FAIL("expected DataError");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()).find("store_cells") != std::string::npos);
    }
  }
}

TEST_CASE("hotspot ranking") {
  const auto data = tiny();
  const auto zeros = rank_hotspots(Eigen::Vector2d::Zero(), data, 2);
  REQUIRE(zeros.size() == 2);
  CHECK(zeros[0].segment_id == "a");
  CHECK(zeros[1].segment_id == "b");
  const auto one = rank_hotspots(Eigen::Vector2d(0.0, 5.0), data, 1);
  REQUIRE(one.size() == 1);
  CHECK(one[0].segment_id == "b");
  CHECK(one[0].expected == 5.0);
  CHECK(one[0].month == 1);
  CHECK_THROWS_AS(rank_hotspots(Eigen::Vector2d::Zero(), data, 0), InvalidParameter);
}

TEST_CASE("planted high-exposure cells top the hotspot list") {
  auto spec = recovery_spec(60, 4);
  RandomStream rng(21, 0);
  auto [base, truth] = simulate_dataset(spec, rng);
  // Plant 20 cells with far more collisions than anything else.
  Eigen::VectorXi k = base.counts();
  for (int s = 0; s < 10; ++s) {
    for (int t = 0; t < 2; ++t) k[base.cell(s, t)] = 30 + s;
  }
  const auto data = base.with_counts(k);
  RunConfig rc;
  rc.iterations = 600;
  rc.burn_in = 300;
  rc.chains = 1;
  rc.cell_thin = 5;
  rc.seed = 3;
  const auto draws = run_chains(rc, data);
  const auto top = rank_hotspots(expected_avc(draws, data), data, 20);
  int planted = 0;
  for (const auto& h : top) {
    const auto s = *data.segment_index(h.segment_id);
    planted += (s < 10 && h.month <= 2) ? 1 : 0;
  }
  CHECK(planted >= 16);
}

TEST_CASE("monthly totals") {
  auto spec = recovery_spec(40, 3);
  RandomStream rng(5, 0);
  auto [data, truth] = simulate_dataset(spec, rng);
  RunConfig rc;
  rc.iterations = 300;
  rc.burn_in = 100;
  rc.chains = 1;
  rc.cell_thin = 1;
  const auto draws = run_chains(rc, data);
  const auto rows = monthly_totals(draws, data);
  REQUIRE(rows.size() == 3);
  const auto observed = data.monthly_observed();
  for (int t = 0; t < 3; ++t) {
    CHECK(rows[static_cast<std::size_t>(t)].month == t + 1);
    CHECK(rows[static_cast<std::size_t>(t)].observed == observed[t]);
    CHECK(rows[static_cast<std::size_t>(t)].lower <= rows[static_cast<std::size_t>(t)].upper);
  }
  // Aggregation: summing expected_avc over a month equals the mean of the
  // recorded monthly functional when every draw keeps its cells.
  const auto e = expected_avc(draws, data);
  for (int t = 0; t < 3; ++t) {
    const double cells = e.segment(t * data.segments(), data.segments()).sum();
    CHECK(cells == doctest::Approx(rows[static_cast<std::size_t>(t)].expected).epsilon(1e-10));
  }

  SUBCASE("no collisions and no exposure") {
    RunConfig zero = rc;
    zero.dp.e0 = 0.001;  // tight clusters
    zero.dp.d0 = 50.0;
    const auto empty = data.with_counts(Eigen::VectorXi::Zero(data.cells()));
    const auto zd = run_chains(zero, empty);
    for (const auto& r : monthly_totals(zd, empty)) {
      CHECK(r.observed == 0.0);
      CHECK(r.expected < 0.05 * static_cast<double>(empty.segments()));
    }
  }
}

TEST_CASE("scenario deltas") {
  const auto data = tiny();
  DrawStore d = store_with_cells({Eigen::Vector2i(3, 1), Eigen::Vector2i(2, 5)},
                                 {Eigen::Vector2d(0.5, 0.2), Eigen::Vector2d(0.5, 0.7)});
  d.records[0].values[0] = 0.028;
  d.records[1].values[0] = 0.028;
  SUBCASE("hand check") {
    ScenarioEdit edit{"speed_limit", ScenarioEdit::Mode::add, -10.0, {"a"}};
    const auto r = scenario_delta(d, data, edit);
    // Draw 1: p 0.5 -> 1/(1+e^0.28); same for draw 2 at p = 0.5.
    const double p_new = 1.0 / (1.0 + std::exp(0.28));
    CHECK(p_new == doctest::Approx(0.4305).epsilon(1e-3));
    CHECK(r.delta_p[0] == doctest::Approx(p_new - 0.5));
    CHECK(r.delta_expected[0] == doctest::Approx(0.5 * (3.0 + 2.0) * (p_new - 0.5)));
    CHECK(r.delta_p[1] == 0.0);  // segment b not edited
    CHECK(r.draws == 2);
  }
  SUBCASE("identity edit") {
    const auto r = scenario_delta(d, data, {"speed_limit", ScenarioEdit::Mode::add, 0.0, {}});
    CHECK(r.delta_p.isZero());
  }
  SUBCASE("signed coefficient gives a signed change") {
    const auto r = scenario_delta(d, data, {"speed_limit", ScenarioEdit::Mode::add, -10.0, {}});
    CHECK((r.max_delta_p.array() < 0.0).all());
  }
  SUBCASE("replacement") {
    const auto r = scenario_delta(d, data, {"speed_limit", ScenarioEdit::Mode::replace, 55.0, {}});
    CHECK(r.delta_p[0] == 0.0);
    CHECK(r.delta_p[1] < 0.0);
  }
  SUBCASE("bad edits") {
    CHECK_THROWS_AS(scenario_delta(d, data, {"lanes", ScenarioEdit::Mode::add, 1.0, {}}), InvalidParameter);
    Eigen::MatrixXd y(2, 1);
    y << 0.0, 1.0;
    const Dataset with_rain({"a", "b"}, {"speed_limit"}, data.x(), {"rain"}, y, data.counts(), 1);
    DrawStore r = d;
    r.parameters = {"beta[speed_limit]"};
    CHECK_THROWS_AS(scenario_delta(r, with_rain, {"rain", ScenarioEdit::Mode::add, 1.0, {}}), InvalidParameter);
  }
}
