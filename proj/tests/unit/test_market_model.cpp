#include <cmath>

#include "doctest.h"
#include "fixtures.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/market_model.hpp"

using namespace cdofit;

namespace {

// Risky annuity summed in long double, independently of the library.
long double pv01_oracle(double mu, double r, int m, double dt) {
  auto F = [&](long double t) { return 1.0L - std::exp(-(long double)mu * t); };
  auto D = [&](long double t) { return std::exp(-(long double)r * t); };
  long double survival = 0, accrual = 0;
  for (int i = 1; i <= m; ++i) {
    const long double t0 = (i - 1) * (long double)dt, t1 = i * (long double)dt;
    survival += dt * (1 - F(t1)) * D(t1);
    accrual += dt * (F(t1) - F(t0)) * D(0.5L * (t0 + t1));
  }
  return survival + 0.5L * accrual;
}

// Protection leg of the index CDS with losses at period midpoints.
long double protection_oracle(double mu, double r, double recovery, int m,
                              double dt) {
  long double v = 0;
  for (int i = 1; i <= m; ++i) {
    const long double t0 = (i - 1) * (long double)dt, t1 = i * (long double)dt;
    v += (1 - recovery) * (std::exp(-(long double)mu * t0) - std::exp(-(long double)mu * t1)) *
         std::exp(-(long double)r * 0.5L * (t0 + t1));
  }
  return v;
}

}  // namespace

TEST_SUITE("market_model") {

TEST_CASE("schedule has a synthetic post-maturity date") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  CHECK(s.size() == 20);
  CHECK(s.time(0) == 0.0);
  CHECK(s.maturity() == doctest::Approx(5.0));
  CHECK(s.post_maturity() == doctest::Approx(5.25));
  CHECK(s.midpoint(1) == doctest::Approx(0.125));
}

TEST_CASE("zero index spread gives zero hazard") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const auto c = calibrate_hazard(0.0, s, DiscountCurve::flat(0.02417), 0.4);
  CHECK(c.hazard() == 0.0);
  for (int i = 0; i <= s.size(); ++i) CHECK(c(s.time(i)) == 0.0);
}

TEST_CASE("recovery of one is rejected") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  CHECK_THROWS_AS(calibrate_hazard(58e-4, s, DiscountCurve::flat(0.02), 1.0), Error);
  try {
    calibrate_hazard(58e-4, s, DiscountCurve::flat(0.02), 1.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidRecovery);
  }
}

TEST_CASE("58bp index spread reprices after calibration") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const auto d = DiscountCurve::flat(0.02417);
  const auto c = calibrate_hazard(58e-4, s, d, 0.4);
  CHECK(std::abs(implied_index_spread(c.hazard(), s, d, 0.4) - 58e-4) < 1e-10);
  // Premium and protection legs agree when evaluated independently.
  const long double prem = 58e-4L * pv01_oracle(c.hazard(), 0.02417, 20, 0.25);
  const long double prot = protection_oracle(c.hazard(), 0.02417, 0.4, 20, 0.25);
  CHECK(std::abs((double)(prem - prot)) < 1e-12);
}

TEST_CASE("hazard round trip over a grid") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const auto d = DiscountCurve::flat(0.02417);
  for (double mu : {1e-4, 1e-3, 0.01, 0.05, 0.1, 0.25, 0.5}) {
    const double spread = implied_index_spread(mu, s, d, 0.4);
    const double back = calibrate_hazard(spread, s, d, 0.4).hazard();
    CHECK(std::abs(back - mu) <= 1e-9 * mu);
  }
  const double spread = implied_index_spread(0.01, s, d, 0.4);
  CHECK(std::abs(calibrate_hazard(spread, s, d, 0.4).hazard() - 0.01) < 1e-10);
}

TEST_CASE("marginal curve is pinned to one after maturity") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  for (double mu : {0.0, 1e-3, 0.3}) {
    MarginalDefaultCurve c(mu, s.post_maturity());
    const auto g = c.on_grid(s);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 1.0);
    for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] >= g[i - 1]);
  }
}

TEST_CASE("pv01 closed cases") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  MarginalDefaultCurve none(0.0, s.post_maturity());
  CHECK(pv01(none, s, DiscountCurve::flat(0.0)) == doctest::Approx(5.0).epsilon(1e-14));
  double annuity = 0.0;
  for (int i = 1; i <= 20; ++i) annuity += 0.25 * std::exp(-0.03 * 0.25 * i);
  CHECK(pv01(none, s, DiscountCurve::flat(0.03)) == doctest::Approx(annuity).epsilon(1e-14));
}

TEST_CASE("pv01 matches extended precision oracle") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  MarginalDefaultCurve c(0.02, s.post_maturity());
  const double v = pv01(c, s, DiscountCurve::flat(0.02));
  CHECK(std::abs(v - (double)pv01_oracle(0.02, 0.02, 20, 0.25)) < 1e-13);
}

TEST_CASE("pv01 decreases in hazard and in rate") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  double prev = 1e9;
  for (double mu = 0.0; mu <= 0.5; mu += 0.05) {
    const double v = pv01(MarginalDefaultCurve(mu, s.post_maturity()), s,
                          DiscountCurve::flat(0.02));
    CHECK(v < prev);
    prev = v;
  }
  prev = 1e9;
  for (double r = 0.0; r <= 0.1; r += 0.01) {
    const double v = pv01(MarginalDefaultCurve(0.01, s.post_maturity()), s,
                          DiscountCurve::flat(r));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("cds value change") {
  const auto s = PaymentSchedule::regular(5.0, 4);
  const auto d0 = DiscountCurve::flat(0.0);
  MarginalDefaultCurve none(0.0, s.post_maturity());
  CHECK(cds_value_change(none, s, d0, 0.0) == 0.0);
  CHECK(cds_value_change(none, s, d0, 1e-4) == doctest::Approx(5e-4).epsilon(1e-12));

  const auto snap = testing::itraxx_snapshot();
  const auto shifted = snap.with_index_spread(59e-4);
  const double oracle =
      (double)pv01_oracle(shifted.marginal.hazard(), 0.02417, 20, 0.25) * 1e-4;
  CHECK(std::abs(cds_value_change(shifted.marginal, snap.schedule, snap.discount,
                                  1e-4) - oracle) < 1e-15);
}

TEST_CASE("tabulated discount factors interpolate log-linearly") {
  auto d = DiscountCurve::from_discount_factors({1.0, 2.0}, {std::exp(-0.02), std::exp(-0.06)});
  CHECK(d(0.0) == doctest::Approx(1.0));
  CHECK(d(1.5) == doctest::Approx(std::exp(-0.04)));
  CHECK(d(3.0) == doctest::Approx(std::exp(-0.10)));
}

TEST_CASE("snapshot quote conversion") {
  TrancheSpec eq(0.0, 0.03, QuoteKind::Upfront, 0.01);
  const auto q = make_quote(eq, 0.28438);
  CHECK(q.running_spread == 0.01);
  CHECK(q.upfront == 0.28438);
  TrancheSpec sen(0.12, 1.0, QuoteKind::Spread);
  const auto qs = make_quote(sen, 27.44e-4);
  CHECK(qs.upfront == 0.0);
  CHECK(quoted_value(sen, qs) == 27.44e-4);
  CHECK_THROWS_AS(TrancheSpec(0.05, 0.03, QuoteKind::Spread), Error);
}

}  // TEST_SUITE
