#include "cdofit/strong_compat.hpp"

#include <algorithm>
#include <cmath>

#include "cdofit/errors.hpp"
#include "cdofit/tranche_valuation.hpp"

namespace cdofit {

Eigen::MatrixXd h_matrix(int n, int big_n) {
  if (n < 1 || big_n < 2)
    fail(ErrorCode::InvalidInput, "need n >= 1 and N >= 2");
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n + 1, big_n + 1);
  h(0, 0) = 1.0;
  h(n, big_n) = 1.0;
  auto lbeta = [](double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  };
  const double lfact_n = std::lgamma(n + 1.0);
  for (int k = 1; k < big_n; ++k) {
    const double denom = lbeta(k, big_n - k);
    for (int j = 0; j <= n; ++j) {
      const double lchoose =
          lfact_n - std::lgamma(j + 1.0) - std::lgamma(n - j + 1.0);
      h(j, k) = std::exp(lchoose + lbeta(k + j, big_n + n - k - j) - denom);
    }
  }
  return h;
}

std::vector<double> state_profile(std::span<const double> beta,
                                  const Eigen::MatrixXd& h) {
  if (static_cast<int>(beta.size()) != h.rows())
    fail(ErrorCode::ShapeMismatch, "loss vector does not match h rows");
  const Eigen::Map<const Eigen::VectorXd> b(beta.data(), h.rows());
  const Eigen::VectorXd l = h.transpose() * b;
  return {l.data(), l.data() + l.size()};
}

Dpm dpm_from_generator(const StrongSolution& sol, int names) {
  const Eigen::MatrixXd h = h_matrix(names, sol.resolution);
  return Dpm(sol.p * h.transpose());
}

StatePolytope strong_polytope(const MarketSnapshot& s, int big_n,
                              std::span<const int> priced, QuoteSide side) {
  const Eigen::MatrixXd h = h_matrix(s.portfolio.names, big_n);
  StatePolytope poly(s.periods(), big_n, mean_targets(s, big_n));
  for (int l : priced)
    add_pricing(poly, s, l,
                state_profile(beta_coeffs(s.tranches.at(l), s.portfolio), h),
                side);
  return poly;
}

namespace {

StrongResult verify(const MarketSnapshot& s, int big_n, QuoteSide side,
                    const opt::LpBackend& backend) {
  const std::vector<int> all = all_tranches(s);
  const StatePolytope poly = strong_polytope(s, big_n, all, side);
  const opt::SolveResult r = opt::find_feasible(poly.lp(), backend);
  StrongResult out;
  out.resolution = big_n;
  out.status = r.status;
  if (r.ok()) {
    out.compatible = true;
    out.solution = StrongSolution{big_n, poly.extract(r.x), s.as_of};
    out.dpm.emplace(dpm_from_generator(*out.solution, s.portfolio.names));
    out.message = "feasible generator distribution found";
    return out;
  }
  if (r.status != opt::SolveStatus::Infeasible) {
    out.message = "solver failure: " + std::string(opt::to_string(r.status)) +
                  (r.detail.empty() ? "" : " (" + r.detail + ")");
    return out;
  }
  out.conflicting_tranches = minimal_conflict(all, [&](const std::vector<int>& sub) {
    return opt::find_feasible(strong_polytope(s, big_n, sub, side).lp(), backend)
        .ok();
  });
  out.message = "no generator distribution at N=" + std::to_string(big_n) +
                " reproduces the quotes of";
  for (int l : out.conflicting_tranches)
    out.message += " " + s.tranches[l].label();
  return out;
}

}  // namespace

StrongResult verify_strong(const MarketSnapshot& s, int big_n,
                           const opt::LpBackend& backend) {
  return verify(s, big_n, QuoteSide::Mid, backend);
}

StrongResult verify_strong_bid_ask(const MarketSnapshot& s, int big_n,
                                   const opt::LpBackend& backend) {
  check_bid_ask(s);
  return verify(s, big_n, QuoteSide::BidAsk, backend);
}

PriceBounds strong_tranche_range(const MarketSnapshot& s, int target,
                                 std::span<const int> fixed, int big_n,
                                 const opt::LpBackend& backend) {
  const StatePolytope poly = strong_polytope(s, big_n, fixed, QuoteSide::Mid);
  const TrancheSpec& t = s.tranches.at(target);
  const std::vector<double> profile = state_profile(
      beta_coeffs(t, s.portfolio), h_matrix(s.portfolio.names, big_n));
  return quote_bounds(poly, t, profile, s.schedule, s.discount, backend);
}

PriceBounds strong_names_bounds(const MarketSnapshot& s, int big_n,
                                int names_tilde, const TrancheSpec& target,
                                const opt::LpBackend& backend) {
  const StatePolytope poly =
      strong_polytope(s, big_n, all_tranches(s), QuoteSide::Mid);
  const PortfolioSpec other(names_tilde, s.portfolio.recovery);
  const std::vector<double> profile =
      state_profile(beta_coeffs(target, other), h_matrix(names_tilde, big_n));
  return quote_bounds(poly, target, profile, s.schedule, s.discount, backend);
}

const char* to_string(IterativeOutcome o) {
  switch (o) {
    case IterativeOutcome::Compatible: return "Compatible";
    case IterativeOutcome::NotStronglyCompatible: return "NotStronglyCompatible";
    case IterativeOutcome::IterationLimit: return "IterationLimit";
  }
  return "?";
}

IterativeResult verify_strong_iterative(const MarketSnapshot& s,
                                        const IterativeOptions& opts,
                                        const opt::LpBackend& backend) {
  if (opts.resolutions.empty())
    fail(ErrorCode::InvalidInput, "empty resolution sequence");
  for (std::size_t y = 1; y < opts.resolutions.size(); ++y)
    if (opts.resolutions[y] <= opts.resolutions[y - 1])
      fail(ErrorCode::InvalidInput, "resolutions must increase strictly");

  IterativeResult out;
  out.outcome = IterativeOutcome::Compatible;
  // Each tranche starts at the resolution where the previous one succeeded,
  // so the last accepted N admits every quote simultaneously.
  std::size_t y = 0;
  std::vector<int> fixed;
  const int tranches = static_cast<int>(s.tranches.size());
  for (int l = 0; l < tranches; ++l) {
    const TrancheSpec& t = s.tranches[l];
    const double quote = quoted_value(t, s.quotes[l]);
    const double eps = t.kind == QuoteKind::Spread ? opts.eps_spread
                                                   : opts.eps_upfront;
    std::optional<PriceBounds> prev;
    bool accepted = false;
    for (; y < opts.resolutions.size(); ++y) {
      const int big_n = opts.resolutions[y];
      const PriceBounds b = strong_tranche_range(s, l, fixed, big_n, backend);
      out.trace.push_back({l, big_n, b});
      if (!b.ok()) {
        // Earlier quotes admit no generator at this N: try the next one.
        prev.reset();
        continue;
      }
      if (b.contains(quote)) {
        accepted = true;
        break;
      }
      if (prev && std::abs(b.lower - prev->lower) < eps &&
          std::abs(b.upper - prev->upper) < eps) {
        out.outcome = IterativeOutcome::NotStronglyCompatible;
        out.failed_tranche = l;
        out.resolution = big_n;
        return out;
      }
      prev = b;
    }
    if (!accepted) {
      out.outcome = IterativeOutcome::IterationLimit;
      out.failed_tranche = l;
      out.resolution = opts.resolutions.back();
      return out;
    }
    fixed.push_back(l);
  }
  out.resolution = opts.resolutions[y];
  const StrongResult fin = verify_strong(s, out.resolution, backend);
  if (!fin.compatible)
    fail(ErrorCode::SolverFailure,
         "final construction failed at N=" + std::to_string(out.resolution) +
             ": " + fin.message);
  out.solution = fin.solution;
  return out;
}

GeneratorSampler::GeneratorSampler(const StrongSolution& sol)
    : n_(sol.resolution) {
  const int m = static_cast<int>(sol.p.rows());
  if (sol.p.cols() != n_ + 1)
    fail(ErrorCode::ShapeMismatch, "generator matrix needs N + 1 columns");
  cdf_.setZero(m + 2, n_ + 1);
  cdf_.row(0).setOnes();
  for (int i = 1; i <= m; ++i) {
    double acc = 0.0;
    for (int k = 0; k <= n_; ++k) cdf_(i, k) = acc += sol.p(i - 1, k);
    cdf_(i, n_) = 1.0;
  }
  cdf_(m + 1, n_) = 1.0;
}

void GeneratorSampler::sample(double u, std::span<int> states) const {
  const int rows = static_cast<int>(cdf_.rows());
  if (static_cast<int>(states.size()) != rows)
    fail(ErrorCode::ShapeMismatch, "state buffer must hold m + 2 entries");
  int k = 0;
  for (int i = 0; i < rows; ++i) {
    // Tail monotonicity makes the inverse CDF non-decreasing in i; starting
    // the search at the previous state also absorbs solver roundoff.
    while (k < n_ && cdf_(i, k) < u) ++k;
    states[i] = k;
  }
}

double interpolate_generator(std::span<const double> grid_u,
                             std::span<const int> grid_states, double u) {
  if (grid_u.size() != grid_states.size() || grid_u.size() < 2)
    fail(ErrorCode::ShapeMismatch, "generator grid is malformed");
  if (u <= grid_u.front()) return grid_states.front();
  if (u >= grid_u.back()) return grid_states.back();
  const auto it = std::upper_bound(grid_u.begin(), grid_u.end(), u);
  const std::size_t hi = static_cast<std::size_t>(it - grid_u.begin());
  const double w = (u - grid_u[hi - 1]) / (grid_u[hi] - grid_u[hi - 1]);
  return (1.0 - w) * grid_states[hi - 1] + w * grid_states[hi];
}

double distortion_value(int k, int big_n, std::span<const double> xi,
                        std::span<const double> eta) {
  if (k <= 0) return 0.0;
  if (k >= big_n) return 1.0;
  const double a = xi[k], b = eta[big_n - k];
  return a / (a + b);
}

}  // namespace cdofit
