#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/risk_engine.hpp"
#include "cdofit/state_polytope.hpp"
#include "cdofit/tranche_valuation.hpp"

using namespace cdofit;
using testing::kl;

namespace {

// Built once: the strong solution and max-entropy DPM of the market snapshot.
const StrongSolution& market_solution() {
  static const StrongSolution sol = *verify_strong(testing::itraxx_snapshot(), 50).solution;
  return sol;
}

const Dpm& market_maxent() {
  static const Dpm q = max_entropy_dpm(testing::itraxx_snapshot());
  return q;
}

}  // namespace

TEST_SUITE("risk_engine") {

TEST_CASE("unchanged marginal keeps the prior") {
  Eigen::MatrixXd q(2, 3);
  q << 0.6, 0.3, 0.1, 0.4, 0.3, 0.3;
  const Dpm prior(q);
  const auto mean = prior.mean_defaults();
  const std::vector<double> f{mean[0] / 2, mean[1] / 2};
  const Dpm post = posterior_dpm(prior, f);
  CHECK((post.matrix() - q).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("one name one period is forced by the mean") {
  Eigen::MatrixXd q(1, 2);
  q << 0.9, 0.1;
  const std::vector<double> f{0.2};
  const Dpm post = posterior_dpm(Dpm(q), f);
  CHECK(post(1, 0) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(post(1, 1) == doctest::Approx(0.2).epsilon(1e-9));
}

TEST_CASE("two-name posterior agrees with a line search") {
  for (double f : {0.4, 0.1, 0.75}) {
    Eigen::MatrixXd q(1, 3);
    q << 0.5, 0.3, 0.2;
    const Eigen::RowVector3d oracle = testing::kl_projection_oracle(q.row(0), f);
    const std::vector<double> fv{f};
    const Dpm post = posterior_dpm(Dpm(q), fv);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(post(1, j) - oracle[j]) < 1e-6);
  }
}

TEST_CASE("posterior beats random feasible points") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int m = 2, n = 3;
  Eigen::MatrixXd prior(m, n + 1);
  prior << 0.55, 0.25, 0.15, 0.05,
           0.35, 0.3, 0.2, 0.15;
  const std::vector<double> f{0.3, 0.45};
  const Dpm post = posterior_dpm(Dpm(prior), f);
  CHECK(validate_dpm(post.matrix()).valid);
  const auto pm = post.mean_defaults();
  for (int i = 0; i < m; ++i) CHECK(std::abs(pm[i] - n * f[i]) < 1e-8);

  // Vertices of the feasible polytope from random objectives.
  const std::vector<double> targets{n * f[0], n * f[1]};
  StatePolytope poly(m, n, targets, 0.0);
  std::vector<Eigen::MatrixXd> vertices;
  for (int v = 0; v < 30; ++v) {
    auto lp = poly.lp();
    std::vector<int> idx;
    std::vector<double> c;
    for (int i = 1; i <= m; ++i)
      for (int k = 0; k <= n; ++k) {
        idx.push_back(poly.var(i, k));
        c.push_back(U(rng) - 0.5);
      }
    lp.set_objective(idx, c);
    const auto r = opt::solve_lp(lp);
    REQUIRE(r.ok());
    vertices.push_back(poly.extract(r.x));
  }
  const double best = kl(post.matrix(), prior);
  std::gamma_distribution<double> G(1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, n + 1);
    double total = 0.0;
    for (const auto& v : vertices) {
      const double w = G(rng);
      x += w * v;
      total += w;
    }
    x /= total;
    CHECK(best <= kl(x, prior) + 1e-10);
  }
}

TEST_CASE("max-entropy DPM reprices the market") {
  const auto s = testing::itraxx_snapshot();
  const Dpm& q = market_maxent();
  CHECK(validate_dpm(q.matrix()).valid);
  for (int l = 0; l < 4; ++l)
    CHECK(std::abs(expected_npv(q, tranche_coefficients(s, l))) < 1e-8);
}

TEST_CASE("hedge ratios") {
  const auto s = testing::itraxx_snapshot();
  const auto up = spread_delta(s, market_maxent(), 1e-4);
  double sum = 0.0;
  for (const auto& t : up.tranches) {
    CHECK(std::isfinite(t.delta));
    sum += t.delta;
  }
  CHECK(sum > 0.97);
  CHECK(sum < 1.03);
  CHECK(up.dv_cds != 0.0);
  const auto post_mean = up.posterior.mean_defaults();
  const auto F = s.with_index_spread(59e-4).marginal_grid();
  for (int i = 1; i <= 20; ++i) CHECK(std::abs(post_mean[i - 1] - 125 * F[i]) < 1e-8);

  // Many tail-monotonicity rows bind in the prior, so the projection has
  // different one-sided derivatives: per-tranche deltas for up and down
  // shifts differ, but each side is stable as the shift shrinks and both
  // sides hedge the whole structure.
  const auto down = spread_delta(s, market_maxent(), -1e-4);
  const auto down_small = spread_delta(s, market_maxent(), -1e-5);
  const auto up_small = spread_delta(s, market_maxent(), 1e-5);
  double down_sum = 0.0;
  for (int l = 0; l < 4; ++l) {
    down_sum += down.tranches[l].delta;
    CHECK(std::abs(down_small.tranches[l].delta - down.tranches[l].delta) <
          0.01 * std::abs(down.tranches[l].delta));
    CHECK(std::abs(up_small.tranches[l].delta - up.tranches[l].delta) <
          0.01 * std::abs(up.tranches[l].delta));
  }
  CHECK(down_sum > 0.97);
  CHECK(down_sum < 1.03);
  CHECK(std::abs(down_sum - sum) < 0.05 * sum);
}

TEST_CASE("whole-portfolio delta follows the marginal shift") {
  auto s = testing::itraxx_snapshot();
  // Quote [0,100%] at the spread its linear payoff implies.
  TrancheSpec whole(0.0, 1.0, QuoteKind::Spread);
  const auto F = s.marginal_grid();
  std::vector<double> levels;
  for (int i = 1; i <= 20; ++i) levels.push_back(0.6 * F[i]);
  const double spread = fair_quote(whole, levels, s.schedule, s.discount);
  s.tranches.push_back(whole);
  s.quotes.push_back(make_quote(whole, spread));

  const Dpm prior = max_entropy_dpm(s);
  const auto rep = spread_delta(s, prior, 1e-4);
  const auto lam = lambda_coeffs(spread, s.schedule, s.discount);
  const auto G = s.with_index_spread(59e-4).marginal_grid();
  double dv = 0.0;
  for (int i = 1; i <= 20; ++i) dv += lam[i - 1] * 0.6 * (G[i] - F[i]);
  CHECK(std::abs(rep.tranches[4].dv - dv) < 1e-10);
  CHECK(std::abs(rep.tranches[4].delta - dv / rep.dv_cds) < 1e-6);
}

TEST_CASE("hedge input checks") {
  const auto s = testing::itraxx_snapshot();
  CHECK_THROWS_AS(spread_delta(s, market_maxent(), 0.0), Error);
  Eigen::MatrixXd none = Eigen::MatrixXd::Zero(20, 126);
  none.col(0).setOnes();
  CHECK_THROWS_AS(spread_delta(s, Dpm(none), 1e-4), Error);
}

TEST_CASE("zero positions give a zero portfolio") {
  const auto s = testing::itraxx_snapshot();
  SimulationOptions o;
  o.paths = 5000;
  bool all_zero = true;
  o.sink = [&](const PathRecord& r) { all_zero = all_zero && r.portfolio == 0.0; };
  const auto res = simulate_npv(market_solution(), s, o);
  CHECK(all_zero);
  CHECK(res.portfolio.stddev == 0.0);
}

TEST_CASE("portfolio value is linear in positions path by path") {
  const auto s = testing::itraxx_snapshot();
  SimulationOptions o;
  o.paths = 5000;
  o.positions = {-4.0, 2.0, -1.0, 0.0};
  std::vector<double> port;
  std::vector<std::vector<double>> vals;
  std::int64_t expect_id = 0;
  bool ordered = true, monotone = true;
  o.sink = [&](const PathRecord& r) {
    ordered = ordered && r.path_id == expect_id++;
    for (std::size_t i = 1; i < r.counts.size(); ++i)
      monotone = monotone && r.counts[i] >= r.counts[i - 1];
    port.push_back(r.portfolio);
    vals.emplace_back(r.values.begin(), r.values.end());
  };
  simulate_npv(market_solution(), s, o);
  CHECK(ordered);
  CHECK(monotone);
  for (std::size_t p = 0; p < port.size(); ++p)
    CHECK(port[p] == -4.0 * vals[p][0] + 2.0 * vals[p][1] - vals[p][2]);
}

TEST_CASE("simulation is seeded and thread independent") {
  const auto s = testing::itraxx_snapshot();
  SimulationOptions o;
  o.paths = 20000;
  o.seed = 99;
  o.positions = {1.0, 1.0, 1.0, 1.0};
  o.threads = 1;
  const auto a = simulate_npv(market_solution(), s, o);
  o.threads = 4;
  const auto b = simulate_npv(market_solution(), s, o);
  CHECK(a.portfolio.mean == b.portfolio.mean);
  CHECK(a.portfolio.q01 == b.portfolio.q01);
  CHECK(a.count_frequency == b.count_frequency);
  o.seed = 100;
  const auto c = simulate_npv(market_solution(), s, o);
  CHECK(c.portfolio.mean != a.portfolio.mean);
}

TEST_CASE("simulated tranches are fairly priced and respect the waterfall") {
  const auto s = testing::itraxx_snapshot();
  SimulationOptions o;
  o.paths = 100000;
  const auto res = simulate_npv(market_solution(), s, o);
  CHECK(res.waterfall_violations == 0);
  for (const auto& t : res.tranches) {
    const double z = t.mean / (t.stddev / std::sqrt(double(o.paths)));
    CHECK(std::abs(z) < 4.0);
    CHECK(t.q01 <= t.q50);
    CHECK(t.q50 <= t.q99);
  }
}

TEST_CASE("simulation rejects unfit generators") {
  const auto s = testing::itraxx_snapshot();
  StrongSolution bad = market_solution();
  bad.p.setZero();
  bad.p.col(0).setOnes();
  CHECK_THROWS_AS(simulate_npv(bad, s, {}), Error);
}

}  // TEST_SUITE
