#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "cdofit/dpm.hpp"
#include "cdofit/errors.hpp"

namespace cdofit {

DpmReport validate_dpm(const Eigen::MatrixXd& q, const DpmTolerances& tol) {
  DpmReport r;
  const int m = static_cast<int>(q.rows());
  const int cols = static_cast<int>(q.cols());
  auto flag = [&r](int period) {
    if (r.valid) r.first_bad_row = period;
    r.valid = false;
  };
  Eigen::VectorXd prev_tail;
  for (int i = 0; i < m; ++i) {
    const double err = std::abs(q.row(i).sum() - 1.0);
    r.max_row_sum_error = std::max(r.max_row_sum_error, err);
    const double lo = q.row(i).minCoeff();
    r.most_negative = std::min(r.most_negative, lo);
    bool bad = err > tol.row_sum || lo < -tol.negativity;
    Eigen::VectorXd tail(cols);
    double acc = 0.0;
    for (int j = cols - 1; j >= 0; --j) tail[j] = acc += q(i, j);
    if (i > 0) {
      for (int j = 1; j < cols; ++j) {
        const double v = prev_tail[j] - tail[j];
        r.max_monotonicity_violation = std::max(r.max_monotonicity_violation, v);
        if (v > tol.monotonicity) bad = true;
      }
    }
    if (bad) flag(i + 1);
    prev_tail = std::move(tail);
  }
  return r;
}

Dpm::Dpm(Eigen::MatrixXd q, const DpmTolerances& tol) : q_(std::move(q)) {
  if (q_.rows() < 1 || q_.cols() < 2)
    fail(ErrorCode::ShapeMismatch, "DPM needs m >= 1 rows and n + 1 >= 2 columns");
  const DpmReport r = validate_dpm(q_, tol);
  if (!r.valid)
    fail(ErrorCode::InvalidInput,
         "invalid DPM at period " + std::to_string(r.first_bad_row));
  q_ = q_.cwiseMax(0.0);
}

double Dpm::tail(int i, int j) const {
  return q_.row(i - 1).tail(q_.cols() - j).sum();
}

std::vector<double> Dpm::expected_levels(std::span<const double> beta) const {
  if (static_cast<int>(beta.size()) != names() + 1)
    fail(ErrorCode::ShapeMismatch, "loss vector length differs from n + 1");
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), names() + 1);
  const Eigen::VectorXd e = q_ * b;
  return {e.data(), e.data() + e.size()};
}

std::vector<double> Dpm::mean_defaults() const {
  const Eigen::VectorXd j = Eigen::VectorXd::LinSpaced(names() + 1, 0, names());
  const Eigen::VectorXd e = q_ * j;
  return {e.data(), e.data() + e.size()};
}

AugmentedDpm::AugmentedDpm(const Dpm& dpm) {
  const int m = dpm.periods(), n = dpm.names();
  q_.setZero(m + 2, n + 1);
  q_(0, 0) = 1.0;
  q_.middleRows(1, m) = dpm.matrix();
  q_(m + 1, n) = 1.0;
  theta_.resize(m + 2, n + 1);
  for (int i = 0; i < m + 2; ++i) {
    double acc = 0.0;
    for (int j = n; j >= 0; --j) theta_(i, j) = acc += q_(i, j);
  }
}

std::vector<double> default_times_from_dpm(const AugmentedDpm& dpm,
                                           const PaymentSchedule& schedule,
                                           double u) {
  const int m = dpm.periods(), n = dpm.names();
  if (schedule.size() != m)
    fail(ErrorCode::ShapeMismatch, "schedule and DPM disagree on m");
  if (!(u > 0.0 && u <= 1.0)) fail(ErrorCode::InvalidInput, "u must lie in (0,1]");
  std::vector<double> tau(n);
  int i = 1;
  for (int j = 1; j <= n; ++j) {
    // theta is non-increasing in j, so the period index only moves forward.
    while (i < m + 1 && dpm.theta(i, j) < u) ++i;
    tau[j - 1] = schedule.midpoint(i);
  }
  return tau;
}

CopulaEstimate implied_copula_value(const AugmentedDpm& dpm,
                                    std::span<const int> y,
                                    const CopulaOptions& options) {
  const int n = dpm.names(), m = dpm.periods();
  if (static_cast<int>(y.size()) != n)
    fail(ErrorCode::ShapeMismatch, "need one grid index per name");
  for (int v : y)
    if (v < 0 || v > m + 1)
      fail(ErrorCode::InvalidInput, "grid indices must lie in 0..m+1");

  std::vector<int> sigma(n);
  std::iota(sigma.begin(), sigma.end(), 1);
  auto term = [&](const std::vector<int>& s) {
    double lo = 1.0;
    for (int j = 0; j < n; ++j) lo = std::min(lo, dpm.theta(y[j], s[j]));
    return lo;
  };

  if (n <= options.exact_max_names) {
    double total = 0.0;
    long count = 0;
    do {
      total += term(sigma);
      ++count;
    } while (std::next_permutation(sigma.begin(), sigma.end()));
    return {total / count, 0.0, true};
  }
  if (!options.allow_monte_carlo)
    fail(ErrorCode::TooLargeForExact,
         "exact enumeration limited to " + std::to_string(options.exact_max_names) +
             " names");

  // Stratify on sigma(1); the remaining positions are shuffled uniformly.
  std::mt19937_64 rng(options.seed);
  const std::int64_t per = std::max<std::int64_t>(2, options.samples / n);
  double estimate = 0.0, variance = 0.0;
  std::vector<int> rest(n - 1);
  for (int l = 1; l <= n; ++l) {
    std::iota(rest.begin(), rest.end(), 1);
    for (int& r : rest)
      if (r >= l) ++r;
    double mean = 0.0, m2 = 0.0;
    for (std::int64_t k = 0; k < per; ++k) {
      std::shuffle(rest.begin(), rest.end(), rng);
      sigma[0] = l;
      std::copy(rest.begin(), rest.end(), sigma.begin() + 1);
      const double v = term(sigma);
      const double d = v - mean;
      mean += d / (k + 1);
      m2 += d * (v - mean);
    }
    estimate += mean / n;
    variance += m2 / (per - 1) / per / (static_cast<double>(n) * n);
  }
  return {estimate, std::sqrt(variance), false};
}

}  // namespace cdofit
