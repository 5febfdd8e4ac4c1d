#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdofit/market_model.hpp"
#include "cdofit/opt_backend.hpp"

namespace cdofit {

// Probabilities x_{ik} over states k = 0..S in periods i = 1..m with unit row
// sums, prescribed means and tail sums non-decreasing in i. Used with S = n
// (the DPM itself) and with S = N (the gamma-distorted generator).
//
// Tail sums are carried as auxiliary variables c_{ik} = sum_{l >= k} x_{il}
// so every monotonicity row has two entries.
class StatePolytope {
 public:
  StatePolytope(int periods, int states, std::span<const double> mean_targets,
                double slack = opt::default_tolerances().equality_slack);

  int periods() const { return m_; }
  int states() const { return s_; }
  int var(int i, int k) const { return (i - 1) * (s_ + 1) + k; }
  int num_state_vars() const { return m_ * (s_ + 1); }

  // sum_i weight_i sum_k profile_k x_{ik} + constant.
  opt::Affine form(std::span<const double> weight,
                   std::span<const double> profile, double constant = 0.0) const;
  // lower <= form <= upper.
  void add_constraint(const opt::Affine& f, double lower, double upper);
  void add_equality(const opt::Affine& f, double rhs);

  const opt::LinearProgram& lp() const { return lp_; }
  opt::LinearProgram& lp() { return lp_; }

  // State block of a solution, negatives clamped and rows renormalized.
  Eigen::MatrixXd extract(std::span<const double> x) const;
  // Flat variable vector for a given state matrix (tail sums filled in).
  std::vector<double> embed(const Eigen::MatrixXd& x) const;

 private:
  int m_;
  int s_;
  double slack_;
  opt::LinearProgram lp_;
};

// states * F(T_i) for i = 1..m.
std::vector<double> mean_targets(const MarketSnapshot& snapshot, int states);

std::vector<int> all_tranches(const MarketSnapshot& snapshot);

// Deletion filter: shrinks an infeasible set of constraint groups until
// removing any single member makes it feasible.
std::vector<int> minimal_conflict(
    std::vector<int> groups,
    const std::function<bool(const std::vector<int>&)>& feasible);

}  // namespace cdofit
