#include "cdofit/weak_compat.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/tranche_valuation.hpp"

namespace cdofit {

void check_bid_ask(const MarketSnapshot& s) {
  if (!s.bid || !s.ask)
    fail(ErrorCode::InvalidQuotes, "snapshot carries no bid/ask quotes");
  for (std::size_t l = 0; l < s.tranches.size(); ++l) {
    const double b = quoted_value(s.tranches[l], s.bid->at(l));
    const double a = quoted_value(s.tranches[l], s.ask->at(l));
    if (b > a)
      fail(ErrorCode::InvalidQuotes,
           "bid above ask on tranche " + s.tranches[l].label());
  }
}

void add_pricing(StatePolytope& poly, const MarketSnapshot& s, int l,
                 std::span<const double> profile, QuoteSide side) {
  const TrancheSpec& t = s.tranches.at(l);
  auto row = [&](const TrancheQuote& q) {
    return poly.form(lambda_coeffs(q.running_spread, s.schedule, s.discount),
                     profile, -gamma_coeff(t, q, s.schedule, s.discount));
  };
  if (side == QuoteSide::Mid) {
    poly.add_equality(row(s.quotes.at(l)), 0.0);
    return;
  }
  // The NPV falls as the quote rises: v(bid) >= 0 >= v(ask).
  poly.add_constraint(row(s.bid->at(l)), 0.0, opt::kInf);
  poly.add_constraint(row(s.ask->at(l)), -opt::kInf, 0.0);
}

StatePolytope weak_polytope(const MarketSnapshot& s,
                            std::span<const int> priced, QuoteSide side) {
  const int n = s.portfolio.names;
  StatePolytope poly(s.periods(), n, mean_targets(s, n));
  for (int l : priced)
    add_pricing(poly, s, l, beta_coeffs(s.tranches.at(l), s.portfolio), side);
  return poly;
}

namespace {

CompatibilityResult verify(const MarketSnapshot& s, QuoteSide side,
                           const opt::LpBackend& backend) {
  const std::vector<int> all = all_tranches(s);
  const StatePolytope poly = weak_polytope(s, all, side);
  const opt::SolveResult r = opt::find_feasible(poly.lp(), backend);
  CompatibilityResult out;
  out.status = r.status;
  if (r.ok()) {
    out.compatible = true;
    out.dpm.emplace(poly.extract(r.x));
    out.message = "feasible DPM found";
    return out;
  }
  if (r.status != opt::SolveStatus::Infeasible) {
    out.message = "solver failure: " + std::string(opt::to_string(r.status)) +
                  (r.detail.empty() ? "" : " (" + r.detail + ")");
    return out;
  }
  out.conflicting_tranches = minimal_conflict(all, [&](const std::vector<int>& sub) {
    return opt::find_feasible(weak_polytope(s, sub, side).lp(), backend).ok();
  });
  out.message = "no DPM reproduces the quotes of";
  for (int l : out.conflicting_tranches)
    out.message += " " + s.tranches[l].label();
  if (out.conflicting_tranches.empty())
    out.message = "marginal constraints alone are infeasible";
  return out;
}

}  // namespace

CompatibilityResult verify_weak(const MarketSnapshot& s,
                                const opt::LpBackend& backend) {
  return verify(s, QuoteSide::Mid, backend);
}

CompatibilityResult verify_weak_bid_ask(const MarketSnapshot& s,
                                        const opt::LpBackend& backend) {
  check_bid_ask(s);
  return verify(s, QuoteSide::BidAsk, backend);
}

PriceBounds quote_bounds(const StatePolytope& poly, const TrancheSpec& target,
                         std::span<const double> profile,
                         const PaymentSchedule& schedule,
                         const DiscountCurve& discount,
                         const opt::LpBackend& backend) {
  PriceBounds b{target.kind, 0.0, 0.0, opt::SolveStatus::Optimal};
  const double width = target.width();
  const double annuity = premium_annuity(schedule, discount);
  auto worst = [&b](opt::SolveStatus st) {
    if (b.status == opt::SolveStatus::Optimal) b.status = st;
  };

  if (target.kind == QuoteKind::Upfront) {
    const double s = target.fixed_running_spread;
    std::vector<double> lam = lambda_coeffs(s, schedule, discount);
    for (double& v : lam) v /= width;
    const opt::Affine obj = poly.form(lam, profile, -s * annuity);
    for (opt::Sense sense : {opt::Sense::Minimize, opt::Sense::Maximize}) {
      opt::LinearProgram lp = poly.lp();
      lp.set_objective(obj.index, obj.value, obj.constant);
      lp.set_sense(sense);
      const opt::SolveResult r = opt::solve_lp(lp, backend);
      if (!r.ok()) {
        worst(r.status);
        continue;
      }
      (sense == opt::Sense::Minimize ? b.lower : b.upper) = r.objective;
    }
    return b;
  }

  const opt::Affine num = poly.form(default_leg_weights(schedule, discount), profile);
  std::vector<double> da(schedule.size());
  for (int i = 1; i <= schedule.size(); ++i)
    da[i - 1] = -discount(schedule.time(i)) * schedule.accrual(i);
  const opt::Affine den = poly.form(da, profile, width * annuity);
  for (opt::Sense sense : {opt::Sense::Minimize, opt::Sense::Maximize}) {
    const opt::SolveResult r = opt::solve_lfp(poly.lp(), num, den, sense, backend);
    if (!r.ok()) {
      worst(r.status);
      continue;
    }
    (sense == opt::Sense::Minimize ? b.lower : b.upper) = r.objective;
  }
  return b;
}

PriceBounds weak_tranche_bounds(const MarketSnapshot& s,
                                const TrancheSpec& target,
                                const opt::LpBackend& backend) {
  const StatePolytope poly = weak_polytope(s, all_tranches(s), QuoteSide::Mid);
  return quote_bounds(poly, target, beta_coeffs(target, s.portfolio), s.schedule,
                      s.discount, backend);
}

}  // namespace cdofit
