#pragma once

#include <optional>
#include <string>
#include <vector>

namespace cdofit {

// Payment dates T_0 = 0 < T_1 < ... < T_m plus the synthetic post-maturity
// date T_{m+1} that closes off the default-leg sums.
class PaymentSchedule {
 public:
  PaymentSchedule(std::vector<double> payment_dates, double post_maturity);

  static PaymentSchedule regular(double years, int payments_per_year);

  int size() const { return static_cast<int>(dates_.size()) - 2; }
  double time(int i) const { return dates_.at(i); }
  double accrual(int i) const { return dates_.at(i) - dates_.at(i - 1); }
  double midpoint(int i) const {
    return 0.5 * (dates_.at(i - 1) + dates_.at(i));
  }
  double maturity() const { return dates_[dates_.size() - 2]; }
  double post_maturity() const { return dates_.back(); }
  const std::vector<double>& dates() const { return dates_; }

 private:
  std::vector<double> dates_;  // T_0 .. T_{m+1}
};

// Either a flat continuously-compounded rate or log-linear interpolation on
// tabulated discount factors (flat-forward extrapolation past the last node).
class DiscountCurve {
 public:
  static DiscountCurve flat(double rate);
  static DiscountCurve from_discount_factors(std::vector<double> times,
                                             std::vector<double> factors);

  double operator()(double t) const;
  bool is_flat() const { return times_.empty(); }
  double flat_rate() const { return rate_; }

 private:
  DiscountCurve() = default;
  double rate_ = 0.0;
  std::vector<double> times_;
  std::vector<double> log_factors_;
};

struct PortfolioSpec {
  int names;
  double recovery;

  PortfolioSpec(int names, double recovery);
  double loss_per_default() const { return (1.0 - recovery) / names; }
};

enum class QuoteKind { Upfront, Spread };

const char* to_string(QuoteKind kind);

struct TrancheSpec {
  double attach;
  double detach;
  QuoteKind kind;
  // Running spread paid on top of the up-front; ignored for Spread tranches.
  double fixed_running_spread = 0.0;

  TrancheSpec(double attach, double detach, QuoteKind kind,
              double fixed_running_spread = 0.0);
  double width() const { return detach - attach; }
  std::string label() const;
};

// Market quote as (running spread, up-front), both decimals.
struct TrancheQuote {
  double running_spread;
  double upfront;
};

// Builds the quote pair from the single quoted number of a tranche:
// the up-front for Upfront tranches, the running spread for Spread ones.
TrancheQuote make_quote(const TrancheSpec& tranche, double quoted_value);
double quoted_value(const TrancheSpec& tranche, const TrancheQuote& quote);

// F(t) = 1 - exp(-mu t) on [0, T_{m+1}), with F(T_{m+1}) = 1 by convention.
class MarginalDefaultCurve {
 public:
  MarginalDefaultCurve(double hazard, double post_maturity);

  double hazard() const { return hazard_; }
  double operator()(double t) const;
  // F(T_0), ..., F(T_{m+1}).
  std::vector<double> on_grid(const PaymentSchedule& schedule) const;

 private:
  double hazard_;
  double post_maturity_;
};

// Spread of the index CDS implied by a flat hazard rate.
double implied_index_spread(double hazard, const PaymentSchedule& schedule,
                            const DiscountCurve& discount, double recovery);

MarginalDefaultCurve calibrate_hazard(double index_spread,
                                      const PaymentSchedule& schedule,
                                      const DiscountCurve& discount,
                                      double recovery);

// Risky annuity of the index CDS: premium leg value per unit spread.
double pv01(const MarginalDefaultCurve& curve, const PaymentSchedule& schedule,
            const DiscountCurve& discount);

// Value change of a protection-buyer index CDS when the market spread moves
// by shift; evaluated on the post-shift curve.
double cds_value_change(const MarginalDefaultCurve& shifted_curve,
                        const PaymentSchedule& schedule,
                        const DiscountCurve& discount, double shift);

struct MarketSnapshot {
  std::string as_of;
  double index_spread;
  PaymentSchedule schedule;
  DiscountCurve discount;
  PortfolioSpec portfolio;
  std::vector<TrancheSpec> tranches;
  std::vector<TrancheQuote> quotes;
  std::optional<std::vector<TrancheQuote>> bid;
  std::optional<std::vector<TrancheQuote>> ask;
  MarginalDefaultCurve marginal;

  int periods() const { return schedule.size(); }
  std::vector<double> marginal_grid() const {
    return marginal.on_grid(schedule);
  }
  // Same market with the index spread moved by shift and the marginal
  // curve recalibrated.
  MarketSnapshot with_index_spread(double spread) const;
  MarketSnapshot subset(const std::vector<int>& tranche_indices) const;
};

MarketSnapshot make_snapshot(std::string as_of, double index_spread,
                             PaymentSchedule schedule, DiscountCurve discount,
                             PortfolioSpec portfolio,
                             std::vector<TrancheSpec> tranches,
                             std::vector<TrancheQuote> quotes);

}  // namespace cdofit
