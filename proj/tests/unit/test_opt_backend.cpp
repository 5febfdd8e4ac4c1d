#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"

#include "cdofit/opt_backend.hpp"

using namespace cdofit;
using namespace cdofit::opt;

TEST_SUITE("opt_backend") {

TEST_CASE("trivial LPs on both backends") {
  for (const char* name : {"simplex", "ipm"}) {
    const auto backend = make_backend(name);
    LinearProgram lp;
    const int x = lp.add_variable(0.0, 1.0, 1.0);
    lp.set_sense(Sense::Maximize);
    auto r = solve_lp(lp, *backend);
    CHECK(r.status == SolveStatus::Optimal);
    CHECK(r.objective == doctest::Approx(1.0));
    CHECK(r.x[x] == doctest::Approx(1.0));

    LinearProgram bad;
    const int y = bad.add_variable(-kInf, kInf);
    bad.add_row({y}, {1.0}, 1.0, kInf);
    bad.add_less_equal({y}, {1.0}, 0.0);
    CHECK(solve_lp(bad, *backend).status == SolveStatus::Infeasible);
    CHECK(find_feasible(bad, *backend).status == SolveStatus::Infeasible);
  }
}

TEST_CASE("unbounded objective") {
  LinearProgram lp;
  lp.add_variable(0.0, kInf, 1.0);
  lp.set_sense(Sense::Maximize);
  CHECK(solve_lp(lp).status == SolveStatus::Unbounded);
}

TEST_CASE("monotone ratio") {
  LinearProgram lp;
  const int x = lp.add_variable(0.0, 1.0);
  Affine num{{x}, {1.0}, 0.0}, den{{x}, {-1.0}, 2.0};
  auto hi = solve_lfp(lp, num, den, Sense::Maximize);
  REQUIRE(hi.status == SolveStatus::Optimal);
  CHECK(hi.objective == doctest::Approx(1.0));
  CHECK(hi.x[x] == doctest::Approx(1.0));
  auto lo = solve_lfp(lp, num, den, Sense::Minimize);
  REQUIRE(lo.status == SolveStatus::Optimal);
  CHECK(std::abs(lo.objective) < 1e-9);
  CHECK(std::abs(lo.x[x]) < 1e-9);
}

TEST_CASE("vanishing denominator is flagged") {
  LinearProgram lp;
  const int x = lp.add_variable(0.0, 1.0);
  Affine num{{}, {}, 1.0}, den{{x}, {1.0}, 0.0};
  auto r = solve_lfp(lp, num, den, Sense::Maximize);
  CHECK_FALSE(r.ok());
}

TEST_CASE("random box LFPs agree with grid search") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const auto p = testing::random_box_lfp(rng);
    const auto [best_min, best_max] = testing::box_lfp_grid(p);
    auto hi = solve_lfp(p.lp, p.num, p.den, Sense::Maximize);
    auto lo = solve_lfp(p.lp, p.num, p.den, Sense::Minimize);
    REQUIRE(hi.ok());
    REQUIRE(lo.ok());
    CHECK(std::abs(hi.objective - best_max) < 1e-8);
    CHECK(std::abs(lo.objective - best_min) < 1e-8);
    CHECK(p.lp.max_violation(hi.x) < 1e-8);
    CHECK(p.lp.max_violation(lo.x) < 1e-8);
  }
}

TEST_CASE("feasible prior is its own projection") {
  LinearProgram lp;
  lp.add_variables(3);
  lp.add_equality({0, 1, 2}, {1.0, 1.0, 1.0}, 1.0, 0.0);
  lp.add_equality({0, 1, 2}, {0.0, 1.0, 2.0}, 0.9, 0.0);
  const std::vector<double> prior{0.3, 0.5, 0.2};
  auto r = solve_relative_entropy(lp, prior, {.eps = 0.0});
  REQUIRE(r.status == SolveStatus::Optimal);
  for (int k = 0; k < 3; ++k) CHECK(r.x[k] == doctest::Approx(prior[k]).epsilon(1e-8));
  CHECK(std::abs(r.objective) < 1e-10);
}

TEST_CASE("mean constraint gives exponential tilting") {
  const std::vector<double> prior{0.5, 0.3, 0.2};
  const double target = 1.1;
  // Root-find the tilt by bisection.
  auto tilted = [&](double th) {
    std::vector<double> w(3);
    double z = 0.0;
    for (int k = 0; k < 3; ++k) z += w[k] = prior[k] * std::exp(th * k);
    for (double& v : w) v /= z;
    return w;
  };
  double lo = -50.0, hi = 50.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto w = tilted(mid);
    (w[1] + 2 * w[2] < target ? lo : hi) = mid;
  }
  const auto oracle = tilted(0.5 * (lo + hi));

  LinearProgram lp;
  lp.add_variables(3);
  lp.add_equality({0, 1, 2}, {1.0, 1.0, 1.0}, 1.0, 0.0);
  lp.add_equality({0, 1, 2}, {0.0, 1.0, 2.0}, target, 0.0);
  auto r = solve_relative_entropy(lp, prior, {.eps = 0.0});
  REQUIRE(r.status == SolveStatus::Optimal);
  CHECK(r.kkt_residual < 1e-8);
  for (int k = 0; k < 3; ++k) CHECK(std::abs(r.x[k] - oracle[k]) < 1e-8);
}

TEST_CASE("mean beyond the support is infeasible") {
  LinearProgram lp;
  lp.add_variables(3);
  lp.add_equality({0, 1, 2}, {1.0, 1.0, 1.0}, 1.0, 0.0);
  lp.add_equality({0, 1, 2}, {0.0, 1.0, 2.0}, 2.5, 0.0);
  auto r = solve_relative_entropy(lp, std::vector<double>{0.3, 0.3, 0.4});
  CHECK(r.status == SolveStatus::Infeasible);
}

TEST_CASE("solves are deterministic") {
  LinearProgram lp;
  lp.add_variables(4);
  lp.add_equality({0, 1, 2, 3}, {1, 1, 1, 1}, 1.0, 0.0);
  lp.add_less_equal({0, 3}, {1.0, 2.0}, 0.7);
  lp.set_objective(std::vector<int>{1, 2}, std::vector<double>{1.0, 3.0});
  lp.set_sense(Sense::Maximize);
  const auto a = solve_lp(lp), b = solve_lp(lp);
  CHECK(a.x == b.x);
  const std::vector<double> prior{0.1, 0.2, 0.3, 0.4};
  const auto e1 = solve_relative_entropy(lp, prior), e2 = solve_relative_entropy(lp, prior);
  CHECK(e1.x == e2.x);
}

}  // TEST_SUITE
