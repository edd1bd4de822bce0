#include <cmath>
#include <vector>

#include "doctest.h"
#include "avc/collision.hpp"
#include "avc/errors.hpp"
#include "avc/polya_gamma.hpp"
#include "../support/oracles.hpp"

using namespace avc;

namespace {

// S segments, one month, one segment covariate, one time covariate.
Dataset small_panel(const Eigen::VectorXd& x, const Eigen::VectorXd& y, const Eigen::VectorXi& k) {
  const auto S = x.size();
  std::vector<std::string> ids;
  for (Eigen::Index s = 0; s < S; ++s) ids.push_back("s" + std::to_string(s));
  return Dataset(ids, {"x"}, x, {"y"}, y, k, 1);
}

}  // namespace

TEST_CASE("logistic link") {
  CHECK(collision_prob(0.0) == 0.5);
  CHECK(collision_prob(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-15));
  for (double psi = -30.0; psi <= 30.0; psi += 0.37) {
    REQUIRE(std::abs(collision_prob(psi) + collision_prob(-psi) - 1.0) < 1e-15);
    REQUIRE(std::exp(log_one_minus_collision_prob(psi)) ==
            doctest::Approx(collision_prob(-psi)).epsilon(1e-12));
  }
  // Ten mph at 0.028 per mph moves the predictor by 0.28.
  const double base = 0.028 * 55.0, raised = 0.028 * 65.0;
  CHECK(raised - base == doctest::Approx(0.28));
  CHECK(collision_prob(1000.0) == 1.0);
  CHECK(collision_prob(-1000.0) >= 0.0);
}

TEST_CASE("Polya-Gamma augmentation") {
  const Dataset d = small_panel(Eigen::Vector3d(0.0, 1.0, 0.0), Eigen::Vector3d::Zero(), Eigen::Vector3i(0, 1, 2));
  RegressionState st = make_regression_state(d);
  st.beta[0] = 2.0;
  const Eigen::VectorXi n = Eigen::Vector3i(0, 1, 4);
  refresh_kappa(st, n, d.counts());
  CHECK(st.kappa[0] == 0.0);
  RandomStream rng(1, 0);
  const int N = 100000;
  double w1 = 0.0, w2 = 0.0;
  for (int i = 0; i < N; ++i) {
    augment_polya_gamma(st, n, linear_predictors(st, d), rng, kPolyaGammaNormalThreshold);
    REQUIRE(st.omega[0] == 0.0);
    w1 += st.omega[1];
    w2 += st.omega[2];
  }
  CHECK(w1 / N == doctest::Approx(0.25 * std::tanh(1.0)).epsilon(0.01));
  CHECK(w2 / N == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("beta conditional") {
  SUBCASE("hand-evaluated single cell") {
    const Dataset d = small_panel(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::VectorXi::Ones(1));
    RegressionState st = make_regression_state(d);
    st.omega[0] = 2.0;
    st.kappa[0] = 0.5;
    const auto g = beta_conditional(st, Eigen::VectorXi::Constant(1, 3), d, Eigen::VectorXd::Zero(1));
    CHECK(g.covariance()(0, 0) == doctest::Approx(0.5));
    CHECK(g.mean()[0] == doctest::Approx(0.25));
    st.omega *= 2.0;
    st.kappa *= 2.0;
    const auto h = beta_conditional(st, Eigen::VectorXi::Constant(1, 3), d, Eigen::VectorXd::Zero(1));
    CHECK(h.mean()[0] == doctest::Approx(0.25));
    CHECK(h.covariance()(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("no exposure returns the prior") {
    const Dataset d = small_panel(Eigen::Vector2d(1.0, 2.0), Eigen::Vector2d::Zero(), Eigen::Vector2i::Zero());
    RegressionState st = make_regression_state(d);
    RegressionPrior prior;
    prior.beta_variance = 9.0;
    RandomStream rng(2, 0);
    const int N = 200000;
    double s = 0.0, s2 = 0.0;
    for (int i = 0; i < N; ++i) {
      update_beta(st, Eigen::Vector2i::Zero(), d, prior, rng);
      s += st.beta[0];
      s2 += st.beta[0] * st.beta[0];
    }
    CHECK(std::abs(s / N) < 0.03);
    CHECK(s2 / N == doctest::Approx(9.0).epsilon(0.02));
  }
  SUBCASE("zero-exposure cells leave the statistics unchanged") {
    Eigen::VectorXd x4(4), y4(4);
    x4 << 0.3, -1.2, 2.0, 5.0;
    y4 << 0.1, 0.4, -0.3, 7.0;
    const Dataset full = small_panel(x4, y4, Eigen::Vector4i(1, 0, 2, 0));
    const Dataset trimmed = small_panel(x4.head(3), y4.head(3), Eigen::Vector3i(1, 0, 2));
    RegressionState a = make_regression_state(full);
    a.beta[0] = 0.4;
    a.alpha[0] = 0.7;
    a.gamma(0, 0) = -0.2;
    a.indicator << 1, 0, 1, 1;
    a.omega << 0.8, 0.3, 1.9, 0.0;
    const Eigen::VectorXi n_full = Eigen::Vector4i(2, 1, 5, 0);
    refresh_kappa(a, n_full, full.counts());
    RegressionState b = make_regression_state(trimmed);
    b.beta = a.beta;
    b.alpha = a.alpha;
    b.gamma = a.gamma;
    b.indicator = a.indicator.head(3);
    b.omega = a.omega.head(3);
    b.kappa = a.kappa.head(3);
    const Eigen::VectorXi n_trim = n_full.head(3);
    CHECK(a.kappa[3] == 0.0);
    const auto ga = beta_conditional(a, n_full, full, Eigen::VectorXd::Constant(1, 0.01));
    const auto gb = beta_conditional(b, n_trim, trimmed, Eigen::VectorXd::Constant(1, 0.01));
    CHECK((ga.precision - gb.precision).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ga.shift - gb.shift).cwiseAbs().maxCoeff() < 1e-12);
    const auto ta = time_conditional(a, n_full, full, 0, Eigen::Vector2d::Constant(0.01));
    const auto tb = time_conditional(b, n_trim, trimmed, 0, Eigen::Vector2d::Constant(0.01));
    CHECK((ta.precision - tb.precision).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((ta.shift - tb.shift).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("dimension mismatch") {
    const Dataset d = small_panel(Eigen::VectorXd::Ones(1), Eigen::VectorXd::Zero(1), Eigen::VectorXi::Ones(1));
    const RegressionState st = make_regression_state(d);
    CHECK_THROWS_AS(beta_conditional(st, Eigen::VectorXi::Ones(1), d, Eigen::VectorXd::Zero(3)), InvalidParameter);
  }
  SUBCASE("Gibbs draws match the gridded posterior") {
    CHECK(oracle::beta_conjugacy_ks(5, 100000) < 0.02);
  }
}

TEST_CASE("month-effect conditional") {
  SUBCASE("hand-evaluated single cell") {
    const Dataset d = small_panel(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), Eigen::VectorXi::Ones(1));
    RegressionState st = make_regression_state(d);
    st.indicator[0] = 1;
    st.omega[0] = 1.0;
    st.kappa[0] = 1.0;
    const auto g = time_conditional(st, Eigen::VectorXi::Ones(1), d, 0, Eigen::Vector2d(0.0, 1.0));
    CHECK(g.mean()[0] == doctest::Approx(1.0));
    CHECK(g.covariance()(0, 0) == doctest::Approx(1.0));
  }
  SUBCASE("no regressors gives the prior") {
    const Dataset d = small_panel(Eigen::Vector2d(1.0, 1.0), Eigen::Vector2d::Zero(), Eigen::Vector2i(1, 1));
    RegressionState st = make_regression_state(d);
    st.omega << 1.0, 2.0;
    st.kappa << 0.5, 0.5;
    const auto g = time_conditional(st, Eigen::Vector2i(2, 2), d, 0, Eigen::Vector2d(0.25, 0.25));
    CHECK(g.mean().isZero());
    CHECK(g.covariance().isApprox(Eigen::Matrix2d::Identity() * 4.0));
  }
  SUBCASE("months are conditionally independent") {
    Eigen::MatrixXd x(2, 1);
    x << 0.5, -1.0;
    Eigen::MatrixXd y(4, 1);
    y << 0.1, 0.2, 0.3, 0.4;
    const Dataset d({"a", "b"}, {"x"}, x, {"y"}, y, Eigen::Vector4i(1, 0, 2, 1), 2);
    Eigen::MatrixXd y_swapped(4, 1);
    y_swapped << 0.3, 0.4, 0.1, 0.2;
    const Dataset e({"a", "b"}, {"x"}, x, {"y"}, y_swapped, Eigen::Vector4i(2, 1, 1, 0), 2);
    RegressionState st = make_regression_state(d);
    st.indicator << 1, 0, 1, 1;
    st.omega << 0.5, 0.6, 0.7, 0.8;
    st.kappa << 0.2, -0.1, 0.4, 0.0;
    RegressionState sw = st;
    sw.indicator << 1, 1, 1, 0;
    sw.omega << 0.7, 0.8, 0.5, 0.6;
    sw.kappa << 0.4, 0.0, 0.2, -0.1;
    const Eigen::VectorXi n = Eigen::Vector4i(2, 1, 3, 1);
    const Eigen::VectorXi n_sw = Eigen::Vector4i(3, 1, 2, 1);
    const auto g0 = time_conditional(st, n, d, 0, Eigen::Vector2d::Constant(0.01));
    const auto h1 = time_conditional(sw, n_sw, e, 1, Eigen::Vector2d::Constant(0.01));
    CHECK(g0.precision.isApprox(h1.precision));
    CHECK(g0.shift.isApprox(h1.shift));
  }
}

TEST_CASE("indicator probabilities") {
  CHECK(indicator_probability(1.0, 1.0, 0.0, 1.0, 0.5) == doctest::Approx(0.6225).epsilon(1e-4));
  CHECK(indicator_probability(2.0, 0.3, 0.7, 0.0, 0.37) == doctest::Approx(0.37));
  CHECK(indicator_probability(1.0, 1.0, 0.0, 5.0, 0.0) == 0.0);
  CHECK(indicator_probability(1.0, 1.0, 0.0, -5.0, 1.0) == 1.0);
  // Huge predictors stay finite in log space.
  const double big = indicator_probability(400.0, 0.001, 50.0, 900.0, 0.5);
  CHECK(big >= 0.0);
  CHECK(big <= 1.0);

  // Marginal form equals the binomial likelihood ratio.
  const long n = 6, k = 4;
  const double psi0 = -0.3, alpha = 1.1, q = 0.4;
  auto loglik = [&](double psi) {
    return k * std::log(collision_prob(psi)) + (n - k) * log_one_minus_collision_prob(psi);
  };
  const double lr = loglik(psi0 + alpha) - loglik(psi0);
  const double expected = q * std::exp(lr) / (q * std::exp(lr) + 1.0 - q);
  CHECK(indicator_probability_marginal(k - 0.5 * n, n, psi0, alpha, q) ==
        doctest::Approx(expected).epsilon(1e-12));
  CHECK(indicator_probability_marginal(0.0, 0, psi0, alpha, q) == doctest::Approx(q));
}

TEST_CASE("indicators collapse to q when alpha is zero") {
  const Dataset d = small_panel(Eigen::VectorXd::LinSpaced(200, -1.0, 1.0), Eigen::VectorXd::Zero(200),
                                Eigen::VectorXi::Ones(200));
  RegressionState st = make_regression_state(d);
  const Eigen::VectorXi n = Eigen::VectorXi::Constant(200, 3);
  refresh_kappa(st, n, d.counts());
  st.omega.setConstant(0.5);
  RegressionPrior prior;
  RandomStream rng(3, 0);
  double on = 0.0, qsum = 0.0;
  const int sweeps = 5000;
  for (int i = 0; i < sweeps; ++i) {
    update_indicators(st, d, rng);
    on += st.indicator.cast<double>().mean();
    update_q(st, d, 0, prior, rng);
    qsum += st.q[0];
  }
  CHECK(on / sweeps == doctest::Approx(qsum / sweeps).epsilon(0.02));
}

TEST_CASE("q update") {
  const Dataset d = small_panel(Eigen::Vector4d::Zero(), Eigen::Vector4d::Zero(), Eigen::Vector4i::Zero());
  RegressionState st = make_regression_state(d);
  st.indicator << 1, 1, 1, 0;
  RegressionPrior prior;
  RandomStream rng(4, 0);
  const int N = 200000;
  double s = 0.0;
  for (int i = 0; i < N; ++i) {
    update_q(st, d, 0, prior, rng);
    REQUIRE(st.q[0] > 0.0);
    REQUIRE(st.q[0] < 1.0);
    s += st.q[0];
  }
  CHECK(s / N == doctest::Approx(4.0 / 6.0).epsilon(0.005));
}

TEST_CASE("collapsed month-effect move keeps its target") {
  // One month, fixed n and beta. With I summed out the posterior of (alpha, q)
  // is two-dimensional, so its means are computed on a grid and compared with
  // the chain that alternates plain Gibbs steps with the collapsed move.
  const int S = 40;
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(S, -1.5, 1.5);
  Eigen::VectorXi k(S), n(S);
  for (int s = 0; s < S; ++s) {
    n[s] = 2 + s % 5;
    k[s] = (s * 7) % (n[s] + 1);
  }
  const Dataset d = small_panel(x, Eigen::VectorXd::Zero(S), k);
  RegressionPrior prior;
  prior.time_variance = 1.0;
  const double beta = 0.8;

  double mass = 0.0, grid_a = 0.0, grid_q = 0.0, peak = -INFINITY;
  std::vector<double> logs;
  const int na = 1601, nq = 2001;
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < na; ++i) {
      const double a = -8.0 + 16.0 * i / (na - 1);
      for (int j = 0; j < nq; ++j) {
        const double q = 1e-4 + (1.0 - 2e-4) * j / (nq - 1);
        double lt = -0.5 * a * a;
        for (int s = 0; s < S; ++s) {
          const double p0 = beta * x[s];
          const double r = k[s] * a + n[s] * (std::log1p(std::exp(p0)) - std::log1p(std::exp(p0 + a)));
          lt += std::log(q * std::exp(r) + 1.0 - q);
        }
        if (pass == 0) {
          peak = std::max(peak, lt);
        } else {
          const double w = std::exp(lt - peak);
          mass += w;
          grid_a += w * a;
          grid_q += w * q;
        }
      }
    }
  }
  grid_a /= mass;
  grid_q /= mass;

  RegressionState st = make_regression_state(d);
  st.beta[0] = beta;
  refresh_kappa(st, n, k);
  RandomStream rng(10, 0);
  double a = 0.0, q = 0.0;
  const int sweeps = 60000;
  for (int i = 0; i < sweeps + 1000; ++i) {
    augment_polya_gamma(st, n, linear_predictors(st, d), rng, 1L << 40);
    update_time_varying(st, n, d, 0, prior, rng);
    update_alpha_q_collapsed(st, n, d, 0, prior, 2, 0.5, rng);
    update_indicators_marginal(st, n, d, rng);
    update_q(st, d, 0, prior, rng);
    if (i >= 1000) {
      a += st.alpha[0];
      q += st.q[0];
    }
  }
  CHECK(std::abs(a / sweeps - grid_a) < 0.05);
  CHECK(std::abs(q / sweeps - grid_q) < 0.01);
}
