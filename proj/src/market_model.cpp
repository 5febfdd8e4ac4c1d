#include "cdofit/market_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cdofit/errors.hpp"

namespace cdofit {

PaymentSchedule::PaymentSchedule(std::vector<double> payment_dates,
                                 double post_maturity) {
  if (payment_dates.empty()) fail(ErrorCode::InvalidInput, "empty schedule");
  dates_.reserve(payment_dates.size() + 2);
  dates_.push_back(0.0);
  for (double t : payment_dates) {
    if (!(t > dates_.back()))
      fail(ErrorCode::InvalidInput, "payment dates must increase from 0");
    dates_.push_back(t);
  }
  if (!(post_maturity > dates_.back()))
    fail(ErrorCode::InvalidInput, "post-maturity date must follow maturity");
  dates_.push_back(post_maturity);
}

PaymentSchedule PaymentSchedule::regular(double years, int payments_per_year) {
  if (payments_per_year <= 0 || !(years > 0.0))
    fail(ErrorCode::InvalidInput, "bad schedule frequency or tenor");
  const int m = static_cast<int>(std::lround(years * payments_per_year));
  if (std::abs(m - years * payments_per_year) > 1e-9)
    fail(ErrorCode::InvalidInput, "tenor is not a whole number of periods");
  const double dt = 1.0 / payments_per_year;
  std::vector<double> dates(m);
  for (int i = 0; i < m; ++i) dates[i] = (i + 1) * dt;
  return PaymentSchedule(std::move(dates), (m + 1) * dt);
}

DiscountCurve DiscountCurve::flat(double rate) {
  DiscountCurve c;
  c.rate_ = rate;
  return c;
}

DiscountCurve DiscountCurve::from_discount_factors(std::vector<double> times,
                                                   std::vector<double> factors) {
  if (times.size() != factors.size() || times.empty())
    fail(ErrorCode::InvalidInput, "discount nodes and factors differ in size");
  DiscountCurve c;
  double prev = 0.0;
  for (std::size_t k = 0; k < times.size(); ++k) {
    if (!(times[k] > prev) || !(factors[k] > 0.0))
      fail(ErrorCode::InvalidInput, "discount nodes must increase, factors > 0");
    prev = times[k];
  }
  c.times_ = std::move(times);
  c.log_factors_.resize(factors.size());
  std::transform(factors.begin(), factors.end(), c.log_factors_.begin(),
                 [](double f) { return std::log(f); });
  return c;
}

double DiscountCurve::operator()(double t) const {
  if (times_.empty()) return std::exp(-rate_ * t);
  // Node at t = 0 with log factor 0 is implicit.
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  std::size_t hi = static_cast<std::size_t>(it - times_.begin());
  if (hi == times_.size()) hi = times_.size() - 1;  // extrapolate last segment
  const double t0 = hi == 0 ? 0.0 : times_[hi - 1];
  const double l0 = hi == 0 ? 0.0 : log_factors_[hi - 1];
  const double t1 = times_[hi], l1 = log_factors_[hi];
  return std::exp(l0 + (l1 - l0) * (t - t0) / (t1 - t0));
}

PortfolioSpec::PortfolioSpec(int names, double recovery)
    : names(names), recovery(recovery) {
  if (names < 1) fail(ErrorCode::InvalidInput, "portfolio needs at least one name");
  if (!(recovery >= 0.0) || recovery >= 1.0)
    fail(ErrorCode::InvalidRecovery, "recovery must lie in [0, 1)");
}

const char* to_string(QuoteKind kind) {
  return kind == QuoteKind::Upfront ? "upfront" : "spread";
}

TrancheSpec::TrancheSpec(double attach, double detach, QuoteKind kind,
                         double fixed_running_spread)
    : attach(attach),
      detach(detach),
      kind(kind),
      fixed_running_spread(kind == QuoteKind::Upfront ? fixed_running_spread
                                                      : 0.0) {
  if (!(attach >= 0.0 && attach < detach && detach <= 1.0))
    fail(ErrorCode::InvalidInput, "tranche needs 0 <= attach < detach <= 1");
}

std::string TrancheSpec::label() const {
  std::ostringstream os;
  os << '[' << attach * 100 << "%," << detach * 100 << "%]";
  return os.str();
}

TrancheQuote make_quote(const TrancheSpec& tranche, double quoted_value) {
  if (tranche.kind == QuoteKind::Upfront)
    return {tranche.fixed_running_spread, quoted_value};
  return {quoted_value, 0.0};
}

double quoted_value(const TrancheSpec& tranche, const TrancheQuote& quote) {
  return tranche.kind == QuoteKind::Upfront ? quote.upfront
                                            : quote.running_spread;
}

MarginalDefaultCurve::MarginalDefaultCurve(double hazard, double post_maturity)
    : hazard_(hazard), post_maturity_(post_maturity) {
  if (!(hazard >= 0.0)) fail(ErrorCode::InvalidInput, "negative hazard rate");
}

double MarginalDefaultCurve::operator()(double t) const {
  if (t >= post_maturity_) return 1.0;
  return -std::expm1(-hazard_ * t);
}

std::vector<double> MarginalDefaultCurve::on_grid(
    const PaymentSchedule& schedule) const {
  std::vector<double> f;
  f.reserve(schedule.dates().size());
  for (double t : schedule.dates()) f.push_back((*this)(t));
  return f;
}

namespace {

struct Legs {
  double premium;  // J1 + J2
  double protection;
  double d_premium;  // derivatives in the hazard rate
  double d_protection;
};

Legs index_legs(double mu, const PaymentSchedule& s, const DiscountCurve& d,
                double recovery) {
  Legs l{0.0, 0.0, 0.0, 0.0};
  for (int i = 1; i <= s.size(); ++i) {
    const double t0 = s.time(i - 1), t1 = s.time(i), dt = s.accrual(i);
    const double e0 = std::exp(-mu * t0), e1 = std::exp(-mu * t1);
    const double dm = d(s.midpoint(i)), dp = d(t1);
    l.premium += e1 * dt * dp + 0.5 * (e0 - e1) * dt * dm;
    l.protection += (1.0 - recovery) * (e0 - e1) * dm;
    const double de0 = -t0 * e0, de1 = -t1 * e1;
    l.d_premium += de1 * dt * dp + 0.5 * (de0 - de1) * dt * dm;
    l.d_protection += (1.0 - recovery) * (de0 - de1) * dm;
  }
  return l;
}

}  // namespace

double implied_index_spread(double hazard, const PaymentSchedule& schedule,
                            const DiscountCurve& discount, double recovery) {
  const Legs l = index_legs(hazard, schedule, discount, recovery);
  return l.protection / l.premium;
}

MarginalDefaultCurve calibrate_hazard(double index_spread,
                                      const PaymentSchedule& schedule,
                                      const DiscountCurve& discount,
                                      double recovery) {
  if (!(recovery >= 0.0) || recovery >= 1.0)
    fail(ErrorCode::InvalidRecovery, "recovery must lie in [0, 1)");
  if (!(index_spread >= 0.0))
    fail(ErrorCode::InvalidInput, "index spread must be non-negative");
  auto f = [&](double mu) {
    const Legs l = index_legs(mu, schedule, discount, recovery);
    return index_spread * l.premium - l.protection;
  };
  double lo = 0.0, hi = 10.0;
  double flo = f(lo), fhi = f(hi);
  if (flo == 0.0) return MarginalDefaultCurve(0.0, schedule.post_maturity());
  if (flo * fhi > 0.0)
    fail(ErrorCode::NoRoot, "no hazard rate in [0, 10] reprices the index");
  while (hi - lo > 1e-14) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm > 0.0) == (flo > 0.0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  double mu = 0.5 * (lo + hi);
  const Legs l = index_legs(mu, schedule, discount, recovery);
  const double slope = index_spread * l.d_premium - l.d_protection;
  if (slope != 0.0) {
    const double polished = mu - (index_spread * l.premium - l.protection) / slope;
    if (polished >= 0.0 && std::abs(f(polished)) <= std::abs(f(mu))) mu = polished;
  }
  return MarginalDefaultCurve(mu, schedule.post_maturity());
}

double pv01(const MarginalDefaultCurve& curve, const PaymentSchedule& schedule,
            const DiscountCurve& discount) {
  double v = 0.0;
  for (int i = 1; i <= schedule.size(); ++i) {
    const double f0 = curve(schedule.time(i - 1)), f1 = curve(schedule.time(i));
    const double dt = schedule.accrual(i);
    v += dt * (1.0 - f1) * discount(schedule.time(i));
    v += 0.5 * dt * (f1 - f0) * discount(schedule.midpoint(i));
  }
  return v;
}

double cds_value_change(const MarginalDefaultCurve& shifted_curve,
                        const PaymentSchedule& schedule,
                        const DiscountCurve& discount, double shift) {
  return pv01(shifted_curve, schedule, discount) * shift;
}

MarketSnapshot MarketSnapshot::with_index_spread(double spread) const {
  MarketSnapshot s = *this;
  s.index_spread = spread;
  s.marginal = calibrate_hazard(spread, schedule, discount, portfolio.recovery);
  return s;
}

MarketSnapshot MarketSnapshot::subset(const std::vector<int>& idx) const {
  MarketSnapshot s = *this;
  s.tranches.clear();
  s.quotes.clear();
  if (bid) s.bid->clear();
  if (ask) s.ask->clear();
  for (int k : idx) {
    s.tranches.push_back(tranches.at(k));
    s.quotes.push_back(quotes.at(k));
    if (bid) s.bid->push_back(bid->at(k));
    if (ask) s.ask->push_back(ask->at(k));
  }
  return s;
}

MarketSnapshot make_snapshot(std::string as_of, double index_spread,
                             PaymentSchedule schedule, DiscountCurve discount,
                             PortfolioSpec portfolio,
                             std::vector<TrancheSpec> tranches,
                             std::vector<TrancheQuote> quotes) {
  if (tranches.size() != quotes.size())
    fail(ErrorCode::InvalidInput, "one quote per tranche expected");
  MarginalDefaultCurve curve =
      calibrate_hazard(index_spread, schedule, discount, portfolio.recovery);
  return MarketSnapshot{std::move(as_of), index_spread, std::move(schedule),
                        std::move(discount), portfolio, std::move(tranches),
                        std::move(quotes), std::nullopt, std::nullopt, curve};
}

}  // namespace cdofit
