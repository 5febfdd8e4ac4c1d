#pragma once

#include <span>
#include <vector>

#include "cdofit/market_model.hpp"

namespace cdofit {

class Dpm;

// Loss of the tranche after j defaults, j = 0..n.
std::vector<double> beta_coeffs(double attach, double detach,
                                const PortfolioSpec& portfolio);
std::vector<double> beta_coeffs(const TrancheSpec& tranche,
                                const PortfolioSpec& portfolio);

// Sum of D(T_i) * dT_i over the payment dates.
double premium_annuity(const PaymentSchedule& schedule,
                       const DiscountCurve& discount);

// D(mid_i) - D(mid_{i+1}) 1_{i<m}: weight of the period-i loss level in the
// default leg, i = 1..m (returned 0-based).
std::vector<double> default_leg_weights(const PaymentSchedule& schedule,
                                        const DiscountCurve& discount);

std::vector<double> lambda_coeffs(double running_spread,
                                  const PaymentSchedule& schedule,
                                  const DiscountCurve& discount);

double gamma_coeff(const TrancheSpec& tranche, const TrancheQuote& quote,
                   const PaymentSchedule& schedule,
                   const DiscountCurve& discount);

// Protection-buyer NPV of a tranche is lambda' Q beta - gamma.
struct TrancheCoefficients {
  std::vector<double> lambda;  // i = 1..m
  std::vector<double> beta;    // j = 0..n
  double gamma;
};

TrancheCoefficients tranche_coefficients(const TrancheSpec& tranche,
                                         const TrancheQuote& quote,
                                         const PaymentSchedule& schedule,
                                         const DiscountCurve& discount,
                                         const PortfolioSpec& portfolio);

TrancheCoefficients tranche_coefficients(const MarketSnapshot& snapshot,
                                         int tranche_index);

double expected_npv(const Dpm& dpm, const TrancheCoefficients& coeffs);

// NPV along one path of cumulative default counts N_{T_1}, ..., N_{T_m}.
double realized_npv(std::span<const int> default_counts,
                    const TrancheCoefficients& coeffs);

// Break-even quote given the expected loss levels E[beta(N_{T_i})]:
// the up-front (with the fixed running spread) or the running spread.
double fair_quote(const TrancheSpec& tranche,
                  std::span<const double> expected_tranche_loss,
                  const PaymentSchedule& schedule,
                  const DiscountCurve& discount);

}  // namespace cdofit
