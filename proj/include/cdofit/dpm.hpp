#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdofit/market_model.hpp"

namespace cdofit {

struct DpmTolerances {
  double row_sum = 1e-9;
  double negativity = 1e-12;  // entries above -negativity are clamped to 0
  double monotonicity = 1e-9;
};

struct DpmReport {
  bool valid = true;
  double max_row_sum_error = 0.0;
  double most_negative = 0.0;
  double max_monotonicity_violation = 0.0;
  int first_bad_row = -1;  // 1-based period of the first failure
};

// Checks row sums, non-negativity and tail-sum monotonicity across periods.
DpmReport validate_dpm(const Eigen::MatrixXd& q,
                       const DpmTolerances& tol = {});

// Default probability matrix q_{ij} = P(N_{T_i} = j), i = 1..m, j = 0..n.
// Storage is 0-based: row r holds period r + 1.
class Dpm {
 public:
  // Clamps entries in (-negativity, 0) to zero; throws InvalidInput if the
  // matrix fails validation.
  explicit Dpm(Eigen::MatrixXd q, const DpmTolerances& tol = {});

  int periods() const { return static_cast<int>(q_.rows()); }
  int names() const { return static_cast<int>(q_.cols()) - 1; }
  // Period i in 1..m, count j in 0..n.
  double operator()(int i, int j) const { return q_(i - 1, j); }
  const Eigen::MatrixXd& matrix() const { return q_; }

  // sum_{k >= j} q_{ik}.
  double tail(int i, int j) const;
  // Expected loss level E[beta(N_{T_i})], i = 1..m.
  std::vector<double> expected_levels(std::span<const double> beta) const;
  std::vector<double> mean_defaults() const;

 private:
  Eigen::MatrixXd q_;
};

// Rows 0..m+1: row 0 is "no defaults", row m+1 is "all names defaulted".
class AugmentedDpm {
 public:
  explicit AugmentedDpm(const Dpm& dpm);

  int periods() const { return static_cast<int>(q_.rows()) - 2; }
  int names() const { return static_cast<int>(q_.cols()) - 1; }
  double operator()(int i, int j) const { return q_(i, j); }
  // theta_{ij} = sum_{k >= j} q_{ik}, i = 0..m+1, j = 0..n.
  double theta(int i, int j) const { return theta_(i, j); }

 private:
  Eigen::MatrixXd q_;
  Eigen::MatrixXd theta_;
};

// Ordered default times tau_1 <= ... <= tau_n assigned from a single
// uniform u in (0,1]; names that never default map to mid_{m+1}.
std::vector<double> default_times_from_dpm(const AugmentedDpm& dpm,
                                           const PaymentSchedule& schedule,
                                           double u);

struct CopulaEstimate {
  double value;
  double std_error;  // zero when computed exactly
  bool exact;
};

struct CopulaOptions {
  bool allow_monte_carlo = true;
  int exact_max_names = 8;
  std::int64_t samples = 200000;
  std::uint64_t seed = 1;
};

// Implied copula C(F(T_{y_1}), ..., F(T_{y_n})) for grid indices y_j in
// 0..m+1. Exact enumeration over permutations for n <= exact_max_names.
CopulaEstimate implied_copula_value(const AugmentedDpm& dpm,
                                    std::span<const int> grid_indices,
                                    const CopulaOptions& options = {});

}  // namespace cdofit
