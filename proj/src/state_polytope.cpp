#include "cdofit/state_polytope.hpp"

#include <numeric>

#include "cdofit/errors.hpp"

namespace cdofit {

StatePolytope::StatePolytope(int periods, int states,
                             std::span<const double> mean_targets, double slack)
    : m_(periods), s_(states), slack_(slack) {
  if (m_ < 1 || s_ < 1) fail(ErrorCode::InvalidInput, "empty state polytope");
  if (static_cast<int>(mean_targets.size()) != m_)
    fail(ErrorCode::ShapeMismatch, "one mean target per period expected");

  lp_.add_variables(m_ * (s_ + 1), 0.0, opt::kInf);
  // c_{ik}, k = 1..S, stored after the state block.
  const int c0 = lp_.add_variables(m_ * s_, 0.0, opt::kInf);
  auto c = [&](int i, int k) { return c0 + (i - 1) * s_ + (k - 1); };

  for (int i = 1; i <= m_; ++i) {
    std::vector<int> idx(s_ + 1);
    std::vector<double> ones(s_ + 1, 1.0);
    for (int k = 0; k <= s_; ++k) idx[k] = var(i, k);
    // Row sums stay exact so extracted rows need only roundoff renormalization.
    lp_.add_equality(idx, ones, 1.0, 0.0);

    for (int k = 1; k <= s_; ++k) {
      if (k == s_)
        lp_.add_equality({c(i, k), var(i, k)}, {1.0, -1.0}, 0.0, 0.0);
      else
        lp_.add_equality({c(i, k), c(i, k + 1), var(i, k)}, {1.0, -1.0, -1.0},
                         0.0, 0.0);
    }

    // sum_k k x_{ik} = sum_{k >= 1} c_{ik}.
    std::vector<int> cidx(s_);
    std::vector<double> cone(s_, 1.0);
    for (int k = 1; k <= s_; ++k) cidx[k - 1] = c(i, k);
    lp_.add_equality(cidx, cone, mean_targets[i - 1], slack_);

    if (i < m_)
      for (int k = 1; k <= s_; ++k)
        lp_.add_less_equal({c(i, k), c(i + 1, k)}, {1.0, -1.0}, 0.0);
  }
}

opt::Affine StatePolytope::form(std::span<const double> weight,
                                std::span<const double> profile,
                                double constant) const {
  if (static_cast<int>(weight.size()) != m_ ||
      static_cast<int>(profile.size()) != s_ + 1)
    fail(ErrorCode::ShapeMismatch, "linear form does not match the polytope");
  opt::Affine f;
  f.constant = constant;
  for (int i = 1; i <= m_; ++i)
    for (int k = 0; k <= s_; ++k) {
      const double v = weight[i - 1] * profile[k];
      if (v == 0.0) continue;
      f.index.push_back(var(i, k));
      f.value.push_back(v);
    }
  return f;
}

void StatePolytope::add_constraint(const opt::Affine& f, double lower,
                                   double upper) {
  lp_.add_row(f.index, f.value, lower - f.constant, upper - f.constant);
}

void StatePolytope::add_equality(const opt::Affine& f, double rhs) {
  add_constraint(f, rhs - slack_, rhs + slack_);
}

Eigen::MatrixXd StatePolytope::extract(std::span<const double> x) const {
  Eigen::MatrixXd q(m_, s_ + 1);
  for (int i = 1; i <= m_; ++i)
    for (int k = 0; k <= s_; ++k) q(i - 1, k) = std::max(x[var(i, k)], 0.0);
  for (int i = 0; i < m_; ++i) q.row(i) /= q.row(i).sum();
  return q;
}

std::vector<double> StatePolytope::embed(const Eigen::MatrixXd& q) const {
  if (q.rows() != m_ || q.cols() != s_ + 1)
    fail(ErrorCode::ShapeMismatch, "state matrix has wrong shape");
  std::vector<double> x(lp_.num_variables(), 0.0);
  const int c0 = num_state_vars();
  for (int i = 1; i <= m_; ++i) {
    double acc = 0.0;
    for (int k = s_; k >= 0; --k) {
      x[var(i, k)] = q(i - 1, k);
      acc += q(i - 1, k);
      if (k >= 1) x[c0 + (i - 1) * s_ + (k - 1)] = acc;
    }
  }
  return x;
}

std::vector<double> mean_targets(const MarketSnapshot& s, int states) {
  const std::vector<double> f = s.marginal_grid();
  std::vector<double> t(s.periods());
  for (int i = 1; i <= s.periods(); ++i) t[i - 1] = states * f[i];
  return t;
}

std::vector<int> all_tranches(const MarketSnapshot& s) {
  std::vector<int> idx(s.tranches.size());
  std::iota(idx.begin(), idx.end(), 0);
  return idx;
}

std::vector<int> minimal_conflict(
    std::vector<int> groups,
    const std::function<bool(const std::vector<int>&)>& feasible) {
  for (std::size_t k = 0; k < groups.size();) {
    std::vector<int> trial = groups;
    trial.erase(trial.begin() + static_cast<long>(k));
    if (!feasible(trial))
      groups = std::move(trial);
    else
      ++k;
  }
  return groups;
}

}  // namespace cdofit
