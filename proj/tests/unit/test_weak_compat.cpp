#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "oracles.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/tranche_valuation.hpp"
#include "cdofit/weak_compat.hpp"

using namespace cdofit;

namespace {

double max_abs_npv(const MarketSnapshot& s, const Dpm& q) {
  double worst = 0.0;
  for (int l = 0; l < static_cast<int>(s.tranches.size()); ++l)
    worst = std::max(worst, std::abs(expected_npv(q, tranche_coefficients(s, l))));
  return worst;
}

}  // namespace

TEST_SUITE("weak_compat") {

TEST_CASE("no tranches only needs the marginal") {
  auto s = testing::itraxx_snapshot().subset({});
  const auto r = verify_weak(s);
  REQUIRE(r.compatible);
  const auto mean = r.dpm->mean_defaults();
  const auto F = s.marginal_grid();
  for (int i = 1; i <= 20; ++i) CHECK(std::abs(mean[i - 1] - 125 * F[i]) < 1e-7);
}

TEST_CASE("market snapshot is weakly compatible and repriced") {
  const auto s = testing::itraxx_snapshot();
  for (const char* name : {"simplex", "ipm"}) {
    const auto r = verify_weak(s, *opt::make_backend(name));
    REQUIRE(r.compatible);
    CHECK(validate_dpm(r.dpm->matrix()).valid);
    CHECK(max_abs_npv(s, *r.dpm) < 1e-8);
  }
}

TEST_CASE("equity up-front of 99% is incompatible") {
  auto s = testing::itraxx_snapshot();
  s.quotes[0] = make_quote(s.tranches[0], 0.99);
  const auto b = weak_tranche_bounds(s.subset({1, 2, 3}), s.tranches[0]);
  REQUIRE(b.ok());
  CHECK(b.upper < 0.99);
  const auto r = verify_weak(s);
  CHECK_FALSE(r.compatible);
  CHECK(r.status == opt::SolveStatus::Infeasible);
  REQUIRE_FALSE(r.conflicting_tranches.empty());
  CHECK(r.conflicting_tranches.front() == 0);
}

TEST_CASE("bid-ask variants") {
  auto s = testing::itraxx_snapshot();
  s.bid = s.quotes;
  s.ask = s.quotes;
  CHECK(verify_weak_bid_ask(s).compatible);

  std::vector<TrancheQuote> bid, ask;
  for (int l = 0; l < 4; ++l) {
    const auto& t = s.tranches[l];
    const double step = t.kind == QuoteKind::Upfront ? 0.001 : 1e-4;
    const double mid = quoted_value(t, s.quotes[l]);
    bid.push_back(make_quote(t, mid - step));
    ask.push_back(make_quote(t, mid + step));
  }
  s.bid = bid;
  s.ask = ask;
  const auto r = verify_weak_bid_ask(s);
  REQUIRE(r.compatible);
  for (int l = 0; l < 4; ++l) {
    const auto& t = s.tranches[l];
    const auto cb = tranche_coefficients(t, bid[l], s.schedule, s.discount, s.portfolio);
    const auto ca = tranche_coefficients(t, ask[l], s.schedule, s.discount, s.portfolio);
    CHECK(expected_npv(*r.dpm, cb) >= -1e-8);
    CHECK(expected_npv(*r.dpm, ca) <= 1e-8);
  }

  std::swap(s.bid->at(2), s.ask->at(2));
  CHECK_THROWS_AS(verify_weak_bid_ask(s), Error);
}

TEST_CASE("quoted tranches sit inside their own bounds") {
  const auto s = testing::itraxx_snapshot();
  for (int l = 0; l < 4; ++l) {
    const double q = quoted_value(s.tranches[l], s.quotes[l]);
    const auto full = weak_tranche_bounds(s, s.tranches[l]);
    REQUIRE(full.ok());
    CHECK(full.lower <= q + 1e-7);
    CHECK(full.upper >= q - 1e-7);
    std::vector<int> others;
    for (int k = 0; k < 4; ++k)
      if (k != l) others.push_back(k);
    const auto loo = weak_tranche_bounds(s.subset(others), s.tranches[l]);
    REQUIRE(loo.ok());
    CHECK(loo.contains(q));
  }
}

TEST_CASE("feasible DPMs form a convex set") {
  const auto s = testing::itraxx_snapshot();
  const auto a = verify_weak(s, *opt::make_backend("simplex"));
  const auto b = verify_weak(s, *opt::make_backend("ipm"));
  REQUIRE(a.compatible);
  REQUIRE(b.compatible);
  for (double w : {0.25, 0.5, 0.75}) {
    const Dpm mix(w * a.dpm->matrix() + (1 - w) * b.dpm->matrix());
    CHECK(max_abs_npv(s, mix) < 1e-8);
    const auto mean = mix.mean_defaults();
    const auto F = s.marginal_grid();
    for (int i = 1; i <= 20; ++i) CHECK(std::abs(mean[i - 1] - 125 * F[i]) < 1e-7);
  }
}

TEST_CASE("toy bounds agree with a grid search") {
  const auto s = testing::toy_weak_snapshot();
  TrancheSpec target(0.3, 0.7, QuoteKind::Spread);
  const auto [lo, hi] = testing::toy_weak_bounds_oracle(s, target);
  REQUIRE(lo <= hi);
  const auto b = weak_tranche_bounds(s, target);
  REQUIRE(b.ok());
  CHECK(std::abs(b.lower - lo) < 1e-6);
  CHECK(std::abs(b.upper - hi) < 1e-6);
  CHECK(b.lower <= lo + 1e-9);
  CHECK(b.upper >= hi - 1e-9);

  TrancheSpec target_uf(0.3, 0.7, QuoteKind::Upfront, 0.01);
  const auto bu = weak_tranche_bounds(s, target_uf);
  REQUIRE(bu.ok());
  CHECK(bu.lower <= bu.upper);
}

}  // TEST_SUITE
