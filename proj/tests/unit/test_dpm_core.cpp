#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "cdofit/dpm.hpp"
#include "cdofit/errors.hpp"

using namespace cdofit;
using testing::direct_valid;
using testing::random_valid_dpm;

namespace {

// Hand-built valid DPM with m = 2, n = 3.
Eigen::MatrixXd toy_q() {
  Eigen::MatrixXd q(2, 4);
  q << 0.5, 0.3, 0.15, 0.05,
       0.2, 0.3, 0.3, 0.2;
  return q;
}

PaymentSchedule toy_schedule() { return PaymentSchedule({1.0, 2.0}, 3.0); }

}  // namespace

TEST_SUITE("dpm_core") {

TEST_CASE("validation examples") {
  Eigen::MatrixXd ok(2, 2), bad(2, 2);
  ok << 1.0, 0.0, 0.5, 0.5;
  bad << 0.5, 0.5, 1.0, 0.0;
  CHECK(validate_dpm(ok).valid);
  const auto r = validate_dpm(bad);
  CHECK_FALSE(r.valid);
  CHECK(r.first_bad_row == 2);
  CHECK(r.max_monotonicity_violation == doctest::Approx(0.5));
  CHECK_THROWS_AS(Dpm{bad}, Error);
}

TEST_CASE("tiny negatives are clamped") {
  Eigen::MatrixXd q(1, 2);
  q << 1.0 + 5e-13, -5e-13;
  Dpm d(q);
  CHECK(d(1, 1) == 0.0);
  Eigen::MatrixXd neg(1, 2);
  neg << 1.1, -0.1;
  CHECK_FALSE(validate_dpm(neg).valid);
}

TEST_CASE("convex combinations stay valid") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_valid_dpm(rng, 4, 6), b = random_valid_dpm(rng, 4, 6);
    const double w = U(rng);
    CHECK(validate_dpm(w * a + (1 - w) * b).valid);
  }
}

TEST_CASE("fuzzed classification agrees with direct evaluation") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int agree = 0, invalid = 0;
  const int trials = 2000;
  for (int t = 0; t < trials; ++t) {
    const Eigen::MatrixXd q = testing::fuzzed_dpm(rng, 3, 4);
    const bool direct = direct_valid(q);
    invalid += !direct;
    agree += validate_dpm(q).valid == direct;
  }
  CHECK(agree == trials);
  CHECK(invalid > 100);
}

TEST_CASE("augmented boundary rows") {
  AugmentedDpm a{Dpm(toy_q())};
  CHECK(a.periods() == 2);
  for (int j = 0; j <= 3; ++j) {
    CHECK(a(0, j) == (j == 0 ? 1.0 : 0.0));
    CHECK(a(3, j) == (j == 3 ? 1.0 : 0.0));
  }
  CHECK(a.theta(1, 2) == doctest::Approx(0.2));
  CHECK(a.theta(2, 0) == doctest::Approx(1.0));
}

TEST_CASE("default times at the extremes") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  Eigen::MatrixXd none = Eigen::MatrixXd::Zero(20, 6);
  none.col(0).setOnes();
  for (double u : {1e-9, 0.3, 1.0})
    for (double t : default_times_from_dpm(AugmentedDpm(Dpm(none)), s, u))
      CHECK(t == doctest::Approx(5.125));
  Eigen::MatrixXd all = Eigen::MatrixXd::Zero(20, 6);
  all.col(5).setOnes();
  for (double u : {1e-9, 0.3, 1.0})
    for (double t : default_times_from_dpm(AugmentedDpm(Dpm(all)), s, u))
      CHECK(t == doctest::Approx(0.125));
  CHECK_THROWS_AS(default_times_from_dpm(AugmentedDpm(Dpm(all)), s, 0.0), Error);
}

TEST_CASE("default times reproduce the DPM") {
  const AugmentedDpm a{Dpm(toy_q())};
  const auto s = toy_schedule();
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int draws = 200000;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(2, 4);
  for (int d = 0; d < draws; ++d) {
    const auto tau = default_times_from_dpm(a, s, 1.0 - U(rng));
    for (int i = 1; i <= 2; ++i) {
      const int n = std::count_if(tau.begin(), tau.end(), [&](double t) { return t <= s.time(i); });
      counts(i - 1, n) += 1.0;
    }
  }
  const auto q = toy_q();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 4; ++j) {
      const double p = counts(i, j) / draws;
      const double sigma = std::sqrt(q(i, j) * (1 - q(i, j)) / draws);
      CHECK(std::abs(p - q(i, j)) <= 3 * sigma + 1e-12);
    }
}

TEST_CASE("single name copula is the marginal") {
  Eigen::MatrixXd q(3, 2);
  q << 0.9, 0.1, 0.7, 0.3, 0.4, 0.6;
  AugmentedDpm a{Dpm(q)};
  const double F[] = {0.0, 0.1, 0.3, 0.6, 1.0};
  for (int y = 0; y <= 4; ++y) {
    const int idx[] = {y};
    CHECK(implied_copula_value(a, idx).value == doctest::Approx(F[y]));
  }
}

TEST_CASE("copula at the top corner is one") {
  AugmentedDpm a{Dpm(toy_q())};
  const int y[] = {3, 3, 3};
  const auto c = implied_copula_value(a, y);
  CHECK(c.exact);
  CHECK(c.value == doctest::Approx(1.0));
}

TEST_CASE("copula symmetry and Frechet bound") {
  AugmentedDpm a{Dpm(toy_q())};
  // Marginal F(T_y) = mean defaults / n on the augmented grid.
  const double F[] = {0.0, (0.3 + 0.3 + 0.15) / 3, (0.3 + 0.6 + 0.6) / 3, 1.0};
  std::vector<int> y(3);
  for (y[0] = 0; y[0] <= 3; ++y[0])
    for (y[1] = 0; y[1] <= 3; ++y[1])
      for (y[2] = 0; y[2] <= 3; ++y[2]) {
        const double v = implied_copula_value(a, y).value;
        CHECK(v >= 0.0);
        CHECK(v <= std::min({F[y[0]], F[y[1]], F[y[2]]}) + 1e-9);
        std::vector<int> p = y;
        std::sort(p.begin(), p.end());
        do {
          CHECK(implied_copula_value(a, p).value == doctest::Approx(v).epsilon(1e-14));
        } while (std::next_permutation(p.begin(), p.end()));
      }
}

TEST_CASE("grounding with other coordinates at the top") {
  AugmentedDpm a{Dpm(toy_q())};
  const double F[] = {0.0, 0.25, 0.5, 1.0};
  for (int yy = 0; yy <= 3; ++yy) {
    const int y[] = {yy, 3, 3};
    CHECK(implied_copula_value(a, y).value == doctest::Approx(F[yy]));
  }
}

TEST_CASE("exact copula matches the joint law of default times") {
  const AugmentedDpm a{Dpm(toy_q())};
  const auto s = toy_schedule();
  const int y[] = {1, 2, 1};
  const double exact = implied_copula_value(a, y).value;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int draws = 200000;
  int hits = 0;
  std::vector<int> perm{0, 1, 2};
  for (int d = 0; d < draws; ++d) {
    const auto tau = default_times_from_dpm(a, s, 1.0 - U(rng));
    std::shuffle(perm.begin(), perm.end(), rng);
    bool in = true;
    for (int j = 0; j < 3; ++j) in = in && tau[perm[j]] <= s.time(y[j]);
    hits += in;
  }
  const double p = double(hits) / draws;
  CHECK(std::abs(p - exact) <= 3 * std::sqrt(exact * (1 - exact) / draws));
}

TEST_CASE("large portfolios need Monte Carlo") {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(1, 11);
  q(0, 0) = 0.5;
  q(0, 10) = 0.5;
  AugmentedDpm a{Dpm(q)};
  std::vector<int> y(10, 1);
  CopulaOptions exact_only;
  exact_only.allow_monte_carlo = false;
  CHECK_THROWS_AS(implied_copula_value(a, y, exact_only), Error);
  const auto est = implied_copula_value(a, y);
  CHECK_FALSE(est.exact);
  CHECK(est.value == doctest::Approx(0.5).epsilon(1e-12));
  std::vector<int> off(10, 5);
  CHECK_THROWS_AS(implied_copula_value(a, off), Error);
}

}  // TEST_SUITE
