#include <cmath>
#include <numeric>

#include "doctest.h"
#include "fixtures.hpp"

#include "cdofit/dpm.hpp"
#include "cdofit/errors.hpp"
#include "cdofit/tranche_valuation.hpp"

using namespace cdofit;

TEST_SUITE("tranche_valuation") {

TEST_CASE("beta examples") {
  PortfolioSpec p(125, 0.4);
  const auto whole = beta_coeffs(0.0, 1.0, p);
  REQUIRE(whole.size() == 126);
  for (int j = 0; j <= 125; ++j) CHECK(whole[j] == doctest::Approx(0.6 * j / 125));
  const auto eq = beta_coeffs(0.0, 0.03, p);
  CHECK(eq[1] == doctest::Approx(0.0048));
  CHECK(eq[10] == doctest::Approx(0.03));
  CHECK(eq[125] == doctest::Approx(0.03));
  const auto mezz = beta_coeffs(0.03, 0.06, p);
  CHECK(mezz[7] == doctest::Approx(0.0036));
  CHECK(mezz[0] == 0.0);
  for (int j = 1; j <= 125; ++j) CHECK(mezz[j] >= mezz[j - 1]);
}

TEST_CASE("lambda with zero rates") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const auto d = DiscountCurve::flat(0.0);
  const auto l = lambda_coeffs(0.01, s, d);
  REQUIRE(l.size() == 20);
  for (int i = 0; i < 19; ++i) CHECK(l[i] == doctest::Approx(0.0025));
  CHECK(l[19] == doctest::Approx(1.0025));
  const auto l0 = lambda_coeffs(0.0, s, d);
  for (int i = 0; i < 19; ++i) CHECK(std::abs(l0[i]) < 1e-15);
  CHECK(l0[19] == doctest::Approx(1.0));
}

TEST_CASE("lambda matches direct re-evaluation") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const double r = 0.02417;
  const auto l = lambda_coeffs(0.01, s, DiscountCurve::flat(r));
  for (int i = 1; i <= 20; ++i) {
    const double t = 0.25 * i;
    double expect = 0.01 * std::exp(-r * t) * 0.25 + std::exp(-r * (t - 0.125));
    if (i < 20) expect -= std::exp(-r * (t + 0.125));
    CHECK(std::abs(l[i - 1] - expect) < 1e-15);
  }
}

TEST_CASE("gamma examples") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  TrancheSpec t(0.0, 0.03, QuoteKind::Upfront, 0.0);
  CHECK(gamma_coeff(t, {0.0, 0.0}, s, DiscountCurve::flat(0.02)) == 0.0);
  TrancheSpec sp(0.06, 0.12, QuoteKind::Spread);
  CHECK(gamma_coeff(sp, {0.01, 0.0}, s, DiscountCurve::flat(0.0)) ==
        doctest::Approx(0.06 * 0.01 * 5.0));

  TrancheSpec eq(0.0, 0.03, QuoteKind::Upfront, 0.01);
  double annuity = 0.0;
  for (int i = 1; i <= 20; ++i) annuity += 0.25 * std::exp(-0.02417 * 0.25 * i);
  const double expect = 0.03 * 0.28438 + 0.03 * 0.01 * annuity;
  CHECK(std::abs(gamma_coeff(eq, make_quote(eq, 0.28438), s, DiscountCurve::flat(0.02417)) -
                 expect) < 1e-15);
}

TEST_CASE("no losses leaves minus gamma") {
  const auto snap = testing::itraxx_snapshot();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(20, 126);
  q.col(0).setOnes();
  Dpm dpm(q);
  const auto c = tranche_coefficients(snap, 1);
  CHECK(expected_npv(dpm, c) == doctest::Approx(-c.gamma));
  std::vector<int> zeros(20, 0);
  CHECK(realized_npv(zeros, c) == doctest::Approx(-c.gamma));
}

TEST_CASE("immediate wipe-out pays full width") {
  const auto snap = testing::itraxx_snapshot();
  const auto c = tranche_coefficients(snap, 1);
  std::vector<int> all(20, 125);
  const double sum_lambda = std::accumulate(c.lambda.begin(), c.lambda.end(), 0.0);
  CHECK(realized_npv(all, c) == doctest::Approx(sum_lambda * 0.03 - c.gamma));
}

TEST_CASE("decreasing path is rejected") {
  const auto c = tranche_coefficients(testing::itraxx_snapshot(), 0);
  std::vector<int> path(20, 3);
  path[5] = 2;
  CHECK_THROWS_AS(realized_npv(path, c), Error);
}

TEST_CASE("whole-portfolio tranche reduces to mean default counts") {
  const auto snap = testing::itraxx_snapshot();
  TrancheSpec whole(0.0, 1.0, QuoteKind::Spread);
  const auto c = tranche_coefficients(whole, make_quote(whole, 58e-4), snap.schedule,
                                      snap.discount, snap.portfolio);
  // Binomial DPM on the calibrated marginal.
  const auto F = snap.marginal_grid();
  Eigen::MatrixXd q(20, 126);
  for (int i = 1; i <= 20; ++i)
    for (int j = 0; j <= 125; ++j)
      q(i - 1, j) = std::exp(std::lgamma(126.0) - std::lgamma(j + 1.0) - std::lgamma(126.0 - j) +
                             j * std::log(F[i]) + (125 - j) * std::log1p(-F[i]));
  Dpm dpm(q);
  const auto mean = dpm.mean_defaults();
  double expect = -c.gamma;
  for (int i = 0; i < 20; ++i) expect += c.lambda[i] * 0.6 * mean[i] / 125;
  CHECK(std::abs(expected_npv(dpm, c) - expect) < 1e-14);
}

TEST_CASE("affine form equals brute force over a toy path law") {
  // m = 2, n = 2: enumerate paths (N1, N2) with N1 <= N2.
  PaymentSchedule s({0.5, 1.0}, 1.5);
  const auto d = DiscountCurve::flat(0.03);
  PortfolioSpec p(2, 0.25);
  TrancheSpec t(0.1, 0.6, QuoteKind::Spread);
  const auto c = tranche_coefficients(t, make_quote(t, 0.02), s, d, p);
  const double prob[3][3] = {{0.5, 0.1, 0.05}, {0.0, 0.15, 0.1}, {0.0, 0.0, 0.1}};
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(2, 3);
  double brute = 0.0;
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      q(0, a) += prob[a][b];
      q(1, b) += prob[a][b];
      const int path[2] = {a, b};
      brute += prob[a][b] * realized_npv(path, c);
    }
  CHECK(std::abs(expected_npv(Dpm(q), c) - brute) < 1e-15);
}

TEST_CASE("tranche betas partition the portfolio") {
  PortfolioSpec p(125, 0.4);
  const double pts[] = {0.0, 0.03, 0.06, 0.12, 1.0};
  std::vector<double> sum(126, 0.0);
  for (int l = 0; l < 4; ++l) {
    const auto b = beta_coeffs(pts[l], pts[l + 1], p);
    for (int j = 0; j <= 125; ++j) sum[j] += b[j];
  }
  const auto whole = beta_coeffs(0.0, 1.0, p);
  for (int j = 0; j <= 125; ++j) CHECK(std::abs(sum[j] - whole[j]) < 1e-15);
}

TEST_CASE("raising the up-front lowers the value one for one") {
  const auto snap = testing::itraxx_snapshot();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(20, 126);
  q.col(0).setOnes();
  q.row(19).setZero();
  q(19, 3) = 1.0;
  Dpm dpm(q);
  const TrancheSpec& t = snap.tranches[0];
  const auto c1 = tranche_coefficients(t, make_quote(t, 0.2), snap.schedule, snap.discount,
                                       snap.portfolio);
  const auto c2 = tranche_coefficients(t, make_quote(t, 0.3), snap.schedule, snap.discount,
                                       snap.portfolio);
  CHECK(expected_npv(dpm, c2) - expected_npv(dpm, c1) == doctest::Approx(-0.03 * 0.1));
}

TEST_CASE("fair quote reprices to zero") {
  const auto snap = testing::itraxx_snapshot();
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(20, 126);
  for (int i = 0; i < 20; ++i) {
    q(i, 0) = 1.0 - 0.02 * (i + 1);
    q(i, 8) = 0.02 * (i + 1);
  }
  Dpm dpm(q);
  for (int l = 0; l < 4; ++l) {
    const TrancheSpec& t = snap.tranches[l];
    const auto levels = dpm.expected_levels(beta_coeffs(t, snap.portfolio));
    const double quote = fair_quote(t, levels, snap.schedule, snap.discount);
    const auto c = tranche_coefficients(t, make_quote(t, quote), snap.schedule, snap.discount,
                                        snap.portfolio);
    CHECK(std::abs(expected_npv(dpm, c)) < 1e-14);
  }
}

}  // TEST_SUITE
