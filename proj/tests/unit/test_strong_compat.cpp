#include <cmath>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/strong_compat.hpp"
#include "cdofit/tranche_valuation.hpp"

using namespace cdofit;

namespace {

double max_abs_npv(const MarketSnapshot& s, const Dpm& q) {
  double worst = 0.0;
  for (int l = 0; l < static_cast<int>(s.tranches.size()); ++l)
    worst = std::max(worst, std::abs(expected_npv(q, tranche_coefficients(s, l))));
  return worst;
}

}  // namespace

TEST_SUITE("strong_compat") {

TEST_CASE("h identities on a grid of sizes") {
  for (int n : {1, 5, 125})
    for (int big_n : {2, 10, 100}) {
      const auto h = h_matrix(n, big_n);
      REQUIRE(h.rows() == n + 1);
      REQUIRE(h.cols() == big_n + 1);
      for (int k = 0; k <= big_n; ++k) {
        double sum = 0.0, mean = 0.0;
        for (int j = 0; j <= n; ++j) {
          sum += h(j, k);
          mean += j * h(j, k);
        }
        CHECK(std::abs(sum - 1.0) < 1e-10);
        CHECK(std::abs(mean - double(n) * k / big_n) < 1e-9);
      }
      CHECK(h(0, 0) == 1.0);
      CHECK(h(n, big_n) == 1.0);
      for (int j = 1; j <= n; ++j) CHECK(h(j, 0) == 0.0);
    }
  const auto h1 = h_matrix(1, 10);
  for (int k = 1; k < 10; ++k) CHECK(h1(1, k) == doctest::Approx(k / 10.0));
  // n = 125, N = 200 stays finite.
  CHECK(h_matrix(125, 200).allFinite());
}

TEST_CASE("h column against a sampled beta-binomial") {
  const auto h = h_matrix(5, 10);
  std::mt19937_64 rng(13);
  std::gamma_distribution<double> g3(3.0), g7(7.0);
  const int draws = 400000;
  std::vector<int> counts(6, 0);
  for (int d = 0; d < draws; ++d) {
    const double a = g3(rng), b = g7(rng);
    std::binomial_distribution<int> bin(5, a / (a + b));
    ++counts[bin(rng)];
  }
  for (int j = 0; j <= 5; ++j) {
    const double p = h(j, 3);
    CHECK(std::abs(double(counts[j]) / draws - p) <= 3 * std::sqrt(p * (1 - p) / draws));
  }
}

TEST_CASE("generator indicators map to degenerate DPM rows") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(2, 11);
  p(0, 0) = 1.0;
  p(1, 10) = 1.0;
  const Dpm q = dpm_from_generator({10, p, ""}, 4);
  CHECK(q(1, 0) == doctest::Approx(1.0));
  CHECK(q(2, 4) == doctest::Approx(1.0));
}

TEST_CASE("random generator distributions give valid DPMs") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    // Tail sums non-increasing in k and non-decreasing in i.
    const int m = 3, big_n = 8;
    Eigen::MatrixXd tail(m, big_n + 2);
    for (int i = 0; i < m; ++i) {
      tail(i, 0) = 1.0;
      tail(i, big_n + 1) = 0.0;
      for (int k = 1; k <= big_n; ++k) {
        const double floor = i > 0 ? tail(i - 1, k) : 0.0;
        tail(i, k) = floor + U(rng) * (tail(i, k - 1) - floor);
      }
    }
    Eigen::MatrixXd p(m, big_n + 1);
    for (int i = 0; i < m; ++i)
      for (int k = 0; k <= big_n; ++k) p(i, k) = tail(i, k) - tail(i, k + 1);
    const Dpm q = dpm_from_generator({big_n, p, ""}, 6);
    CHECK(validate_dpm(q.matrix()).valid);
    const auto mean = q.mean_defaults();
    for (int i = 0; i < m; ++i) {
      double pm = 0.0;
      for (int k = 0; k <= big_n; ++k) pm += k * p(i, k);
      CHECK(mean[i] == doctest::Approx(6.0 * pm / big_n));
    }
  }
}

TEST_CASE("market snapshot is strongly compatible at N=100") {
  const auto s = testing::itraxx_snapshot();
  const auto r = verify_strong(s, 100);
  REQUIRE(r.compatible);
  REQUIRE(r.solution);
  CHECK(r.solution->p.rows() == 20);
  CHECK(r.solution->p.cols() == 101);
  const Dpm q = dpm_from_generator(*r.solution, 125);
  CHECK(max_abs_npv(s, q) < 1e-8);
  const auto F = s.marginal_grid();
  for (int i = 1; i <= 20; ++i) {
    double mean = 0.0;
    for (int k = 0; k <= 100; ++k) mean += k * r.solution->p(i - 1, k);
    CHECK(std::abs(mean - 100 * F[i]) < 1e-8);
  }
}

TEST_CASE("no tranches is always strongly compatible") {
  const auto r = verify_strong(testing::itraxx_snapshot().subset({}), 50);
  CHECK(r.compatible);
}

TEST_CASE("equity outside the N=100 range fails at N=100") {
  auto s = testing::itraxx_snapshot();
  s.quotes[0] = make_quote(s.tranches[0], 0.2900);
  const auto r = verify_strong(s, 100);
  CHECK_FALSE(r.compatible);
  CHECK(r.status == opt::SolveStatus::Infeasible);
}

TEST_CASE("bid-ask band around the market") {
  auto s = testing::itraxx_snapshot();
  s.bid = s.quotes;
  s.ask = s.quotes;
  CHECK(verify_strong_bid_ask(s, 100).compatible);
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
  CHECK(verify_strong_bid_ask(s, 100).compatible);
  // Senior band entirely above the N=100 range.
  (*s.bid)[3] = make_quote(s.tranches[3], 28.5e-4);
  (*s.ask)[3] = make_quote(s.tranches[3], 29.5e-4);
  CHECK_FALSE(verify_strong_bid_ask(s, 100).compatible);
}

TEST_CASE("index tranche range is degenerate without quotes") {
  const auto sched = PaymentSchedule::regular(1.0, 1);
  const auto disc = DiscountCurve::flat(0.03);
  TrancheSpec whole(0.0, 1.0, QuoteKind::Spread);
  const auto s = make_snapshot("toy", 0.02, sched, disc, PortfolioSpec(4, 0.4), {whole},
                               {make_quote(whole, 0.01)});
  const double F = s.marginal_grid()[1];
  const double expect = fair_quote(whole, std::vector<double>{0.6 * F}, sched, disc);
  const std::vector<int> none;
  const auto b = strong_tranche_range(s, 0, none, 20);
  REQUIRE(b.ok());
  CHECK(std::abs(b.lower - expect) < 1e-9);
  CHECK(std::abs(b.upper - expect) < 1e-9);
}

TEST_CASE("toy range equals the best vertex of the generator simplex") {
  // One period: the feasible generator laws are distributions on 0..N with a
  // fixed mean, whose vertices put mass on at most two states.
  const auto sched = PaymentSchedule::regular(1.0, 1);
  const auto disc = DiscountCurve::flat(0.03);
  PortfolioSpec port(3, 0.4);
  TrancheSpec eq(0.0, 0.25, QuoteKind::Spread);
  const auto s = make_snapshot("toy", 0.03, sched, disc, port, {eq}, {make_quote(eq, 0.01)});
  const int big_n = 12;
  const double target_mean = big_n * s.marginal_grid()[1];
  const auto h = h_matrix(3, big_n);
  const auto prof = state_profile(beta_coeffs(eq, port), h);
  auto quote_at = [&](double level) {
    return fair_quote(eq, std::vector<double>{level}, sched, disc);
  };
  double lo = 1e300, hi = -1e300;
  for (int a = 0; a <= big_n; ++a)
    for (int b = a; b <= big_n; ++b) {
      if (a > target_mean || b < target_mean) continue;
      const double w = a == b ? 1.0 : (b - target_mean) / (b - a);
      const double v = quote_at(w * prof[a] + (1 - w) * prof[b]);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const std::vector<int> none;
  const auto r = strong_tranche_range(s, 0, none, big_n);
  REQUIRE(r.ok());
  CHECK(std::abs(r.lower - lo) < 1e-8);
  CHECK(std::abs(r.upper - hi) < 1e-8);
}

TEST_CASE("published ranges at N=100") {
  const auto s = testing::itraxx_snapshot();
  const std::vector<int> senior_three{1, 2, 3};
  const auto eq = strong_tranche_range(s, 0, senior_three, 100);
  REQUIRE(eq.ok());
  CHECK(std::abs(100 * eq.lower - 28.276) < 0.10);
  CHECK(std::abs(100 * eq.upper - 28.941) < 0.10);
  const std::vector<int> junior_three{0, 1, 2};
  const auto sen = strong_tranche_range(s, 3, junior_three, 50);
  REQUIRE(sen.ok());
  CHECK(std::abs(1e4 * sen.lower - 27.33) < 1.0);
  CHECK(std::abs(1e4 * sen.upper - 27.79) < 1.0);
}

TEST_CASE("published bounds for other portfolio sizes") {
  const auto s = testing::itraxx_snapshot();
  const auto a = strong_names_bounds(s, 100, 100, s.tranches[0]);
  REQUIRE(a.ok());
  CHECK(std::abs(100 * a.lower - 28.091) < 0.10);
  CHECK(std::abs(100 * a.upper - 28.259) < 0.10);
  const auto b = strong_names_bounds(s, 100, 50, s.tranches[3]);
  REQUIRE(b.ok());
  CHECK(std::abs(1e4 * b.lower - 27.45) < 1.0);
  CHECK(std::abs(1e4 * b.upper - 27.74) < 1.0);
  for (int l = 0; l < 4; ++l) {
    const auto same = strong_names_bounds(s, 100, 125, s.tranches[l]);
    REQUIRE(same.ok());
    const double q = quoted_value(s.tranches[l], s.quotes[l]);
    CHECK(same.lower <= q + 1e-8);
    CHECK(same.upper >= q - 1e-8);
  }
}

TEST_CASE("iterative verification") {
  const auto s = testing::itraxx_snapshot();
  IterativeOptions opts;
  opts.resolutions = {50, 75, 100};
  const auto ok = verify_strong_iterative(s, opts);
  CHECK(ok.outcome == IterativeOutcome::Compatible);
  REQUIRE(ok.solution);
  CHECK(max_abs_npv(s, dpm_from_generator(*ok.solution, 125)) < 1e-8);

  // Equity at 40% is above every range with the other tranches fixed, but
  // alone it only meets the marginal constraint, which admits it. The
  // conflict therefore surfaces at a later tranche in the loop.
  auto bad = s;
  bad.quotes[0] = make_quote(bad.tranches[0], 0.40);
  const std::vector<int> senior_three{1, 2, 3};
  CHECK(strong_tranche_range(s, 0, senior_three, 100).upper < 0.40);
  const auto no = verify_strong_iterative(bad, opts);
  CHECK(no.outcome != IterativeOutcome::Compatible);
  REQUIRE_FALSE(no.trace.empty());
  CHECK(no.trace.front().tranche == 0);
  CHECK(no.trace.front().bounds.contains(0.40));
  CHECK(no.failed_tranche > 0);
  CHECK_FALSE(no.solution);

  // A single tranche is accepted at the first resolution.
  const auto one = verify_strong_iterative(s.subset({2}), opts);
  CHECK(one.outcome == IterativeOutcome::Compatible);
  CHECK(one.trace.size() == 1);
  CHECK(one.resolution == 50);

  IterativeOptions unsorted;
  unsorted.resolutions = {100, 50};
  CHECK_THROWS_AS(verify_strong_iterative(s, unsorted), Error);
}

TEST_CASE("generator sampler paths") {
  const auto r = verify_strong(testing::itraxx_snapshot(), 50);
  REQUIRE(r.solution);
  const GeneratorSampler g(*r.solution);
  std::vector<int> path(22);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int d = 0; d < 1000; ++d) {
    g.sample(U(rng), path);
    CHECK(path.front() == 0);
    CHECK(path.back() == 50);
    for (int i = 1; i < 22; ++i) CHECK(path[i] >= path[i - 1]);
  }
}

TEST_CASE("sampled generator law matches p") {
  Eigen::MatrixXd p(2, 5);
  p << 0.4, 0.3, 0.2, 0.1, 0.0,
       0.1, 0.2, 0.3, 0.2, 0.2;
  const GeneratorSampler g({4, p, ""});
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  const int draws = 200000;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(2, 5);
  std::vector<int> path(4);
  for (int d = 0; d < draws; ++d) {
    g.sample(U(rng), path);
    for (int i = 1; i <= 2; ++i) counts(i - 1, path[i]) += 1;
  }
  for (int i = 0; i < 2; ++i)
    for (int k = 0; k < 5; ++k) {
      const double sd = std::sqrt(p(i, k) * (1 - p(i, k)) / draws);
      CHECK(std::abs(counts(i, k) / draws - p(i, k)) <= 3 * sd + 1e-12);
    }
}

TEST_CASE("staircase generator") {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(3, 11);
  p(0, 2) = p(1, 5) = p(2, 7) = 1.0;
  const GeneratorSampler g({10, p, ""});
  std::vector<int> path(5);
  for (double u : {0.01, 0.5, 0.99}) {
    g.sample(u, path);
    CHECK(path == std::vector<int>{0, 2, 5, 7, 10});
  }
}

TEST_CASE("generator interpolation") {
  const std::vector<double> u{0.0, 0.2, 0.5, 1.0};
  const std::vector<int> k{0, 4, 4, 10};
  CHECK(interpolate_generator(u, k, 0.1) == doctest::Approx(2.0));
  CHECK(interpolate_generator(u, k, 0.3) == doctest::Approx(4.0));
  CHECK(interpolate_generator(u, k, 0.75) == doctest::Approx(7.0));
  CHECK(interpolate_generator(u, k, 1.0) == doctest::Approx(10.0));
}

TEST_CASE("distortion endpoints and mean") {
  const int big_n = 10;
  std::mt19937_64 rng(4);
  std::exponential_distribution<double> E(1.0);
  std::vector<double> xi(big_n + 1, 0.0), eta(big_n + 1, 0.0);
  double sum = 0.0;
  const int draws = 200000;
  for (int d = 0; d < draws; ++d) {
    for (int k = 1; k <= big_n; ++k) {
      xi[k] = xi[k - 1] + E(rng);
      eta[k] = eta[k - 1] + E(rng);
    }
    CHECK(distortion_value(0, big_n, xi, eta) == 0.0);
    CHECK(distortion_value(big_n, big_n, xi, eta) == 1.0);
    sum += distortion_value(3, big_n, xi, eta);
  }
  // X at state k is Beta(k, N - k), mean k / N, variance k(N-k)/(N^2(N+1)).
  const double sd = std::sqrt(3.0 * 7.0 / (100.0 * 11.0) / draws);
  CHECK(std::abs(sum / draws - 0.3) < 4 * sd);
}

}  // TEST_SUITE
