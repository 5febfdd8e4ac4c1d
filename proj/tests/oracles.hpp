#pragma once

// Independent reference computations shared by unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cdofit/market_model.hpp"
#include "cdofit/opt_backend.hpp"
#include "cdofit/tranche_valuation.hpp"

namespace cdofit::testing {

// Random DPM: per period a tail vector non-increasing in j and non-decreasing
// in i.
inline Eigen::MatrixXd random_valid_dpm(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd tail(m, n + 2);
  for (int i = 0; i < m; ++i) {
    tail(i, 0) = 1.0;
    tail(i, n + 1) = 0.0;
    for (int j = 1; j <= n; ++j) {
      const double floor = i > 0 ? tail(i - 1, j) : 0.0;
      const double cap = tail(i, j - 1);
      tail(i, j) = std::max(floor, std::min(cap, floor + U(rng) * (cap - floor)));
    }
  }
  Eigen::MatrixXd q(m, n + 1);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= n; ++j) q(i, j) = tail(i, j) - tail(i, j + 1);
  return q;
}

// Random valid DPM with about half the samples perturbed off the polytope.
inline Eigen::MatrixXd fuzzed_dpm(std::mt19937_64& rng, int m, int n) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::MatrixXd q = random_valid_dpm(rng, m, n);
  if (U(rng) < 0.5) {
    const int i = rng() % m, j = rng() % (n + 1), k = rng() % (n + 1);
    const double e = (U(rng) - 0.5) * 0.2;
    q(i, j) += e;
    q(i, k) -= e;
  }
  return q;
}

// Row sums, non-negativity and tail monotonicity evaluated directly.
inline bool direct_valid(const Eigen::MatrixXd& q) {
  for (int i = 0; i < q.rows(); ++i) {
    if (std::abs(q.row(i).sum() - 1.0) > 1e-9) return false;
    for (int j = 0; j < q.cols(); ++j)
      if (q(i, j) < -1e-12) return false;
  }
  for (int i = 0; i + 1 < q.rows(); ++i)
    for (int j = 0; j < q.cols(); ++j)
      if (q.row(i).tail(q.cols() - j).sum() >
          q.row(i + 1).tail(q.cols() - j).sum() + 1e-9)
        return false;
  return true;
}

inline double kl(const Eigen::MatrixXd& q, const Eigen::MatrixXd& prior) {
  double v = 0.0;
  for (int i = 0; i < q.rows(); ++i)
    for (int j = 0; j < q.cols(); ++j)
      if (q(i, j) > 0) v += q(i, j) * std::log(q(i, j) / prior(i, j));
  return v;
}

// One period, two names: the KL projection of prior onto mean 2f is a point
// on the segment (1 - 2f + t, 2f - 2t, t). Grid search, then ternary search.
inline Eigen::RowVector3d kl_projection_oracle(const Eigen::RowVector3d& prior,
                                               double f) {
  const double mean = 2 * f;
  const double t_lo = std::max(0.0, mean - 1.0), t_hi = mean / 2;
  auto point = [&](double t) {
    Eigen::MatrixXd x(1, 3);
    x << 1 - mean + t, mean - 2 * t, t;
    return x;
  };
  auto obj = [&](double t) { return kl(point(t), prior); };
  double best = t_lo, best_val = 1e300;
  const int grid = 10000;
  for (int g = 0; g <= grid; ++g) {
    const double t = t_lo + (t_hi - t_lo) * g / grid;
    if (obj(t) < best_val) best_val = obj(t), best = t;
  }
  const double step = (t_hi - t_lo) / grid;
  double lo = std::max(t_lo, best - step), hi = std::min(t_hi, best + step);
  for (int it = 0; it < 200; ++it) {
    const double a = lo + (hi - lo) / 3, b = hi - (hi - lo) / 3;
    if (obj(a) < obj(b)) hi = b;
    else lo = a;
  }
  return point(0.5 * (lo + hi)).row(0);
}

// One period, three names, equity [0,30%] quoted at the fair spread of the
// independent-defaults DPM.
inline MarketSnapshot toy_weak_snapshot() {
  const auto sched = PaymentSchedule::regular(1.0, 1);
  const auto disc = DiscountCurve::flat(0.03);
  PortfolioSpec port(3, 0.4);
  const double spread = 0.05;
  const double F =
      MarginalDefaultCurve(calibrate_hazard(spread, sched, disc, 0.4).hazard(), 2.0)(1.0);
  TrancheSpec eq(0.0, 0.3, QuoteKind::Spread);
  const auto beta = beta_coeffs(eq, port);
  double level = 0.0;
  for (int j = 0; j <= 3; ++j)
    level += beta[j] * std::tgamma(4.0) / (std::tgamma(j + 1.0) * std::tgamma(4.0 - j)) *
             std::pow(F, j) * std::pow(1 - F, 3 - j);
  const double quote = fair_quote(eq, std::vector<double>{level}, sched, disc);
  return make_snapshot("toy", spread, sched, disc, port, {eq}, {make_quote(eq, quote)});
}

// Range of the target's quote over the toy's feasible DPMs. The feasible set
// is a segment: parameterize by q3 and solve row-sum, mean and pricing for
// q0, q1, q2.
inline std::pair<double, double> toy_weak_bounds_oracle(const MarketSnapshot& s,
                                                        const TrancheSpec& target) {
  const double F = s.marginal_grid()[1];
  const auto eq = tranche_coefficients(s, 0);
  const auto beta_t = beta_coeffs(target, s.portfolio);
  const double lam = eq.lambda[0];
  Eigen::Matrix3d A;
  A << 1, 1, 1, 0, 1, 2, lam * eq.beta[0], lam * eq.beta[1], lam * eq.beta[2];
  const Eigen::PartialPivLU<Eigen::Matrix3d> lu(A);
  double lo = 1e300, hi = -1e300;
  const int grid = 1000000;
  for (int g = 0; g <= grid; ++g) {
    const double q3 = double(g) / grid;
    const Eigen::Vector3d rhs(1 - q3, 3 * F - 3 * q3, eq.gamma - lam * eq.beta[3] * q3);
    const Eigen::Vector3d q = lu.solve(rhs);
    if (q.minCoeff() < 0) continue;
    const double level = beta_t[1] * q[1] + beta_t[2] * q[2] + beta_t[3] * q3;
    const double v = fair_quote(target, std::vector<double>{level}, s.schedule, s.discount);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

// Random ratio of affine functions on the box [0,1]^3 cut by x1+x2+x3 <= 2.
struct BoxLfp {
  opt::LinearProgram lp;
  opt::Affine num, den;
};

inline BoxLfp random_box_lfp(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  BoxLfp p;
  for (int k = 0; k < 3; ++k) p.lp.add_variable(0.0, 1.0);
  p.lp.add_less_equal({0, 1, 2}, {1.0, 1.0, 1.0}, 2.0);
  p.num = {{0, 1, 2}, {U(rng), U(rng), U(rng)}, U(rng)};
  p.den = {{0, 1, 2}, {0.5 * U(rng), 0.5 * U(rng), 0.5 * U(rng)}, 2.0};
  return p;
}

// Min and max of the ratio over a 1e-2 grid of the feasible set. Every
// vertex lies on the grid, so the grid extremes are exact.
inline std::pair<double, double> box_lfp_grid(const BoxLfp& p) {
  double lo = 1e300, hi = -1e300;
  const int g = 100;
  for (int a = 0; a <= g; ++a)
    for (int b = 0; b <= g; ++b)
      for (int c = 0; c <= g; ++c) {
        if (a + b + c > 2 * g) continue;
        const double x[] = {double(a) / g, double(b) / g, double(c) / g};
        const double v = p.num(x) / p.den(x);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  return {lo, hi};
}

}  // namespace cdofit::testing
