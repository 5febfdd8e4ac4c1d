#include "cdofit/tranche_valuation.hpp"

#include <algorithm>

#include "cdofit/dpm.hpp"
#include "cdofit/errors.hpp"

namespace cdofit {

std::vector<double> beta_coeffs(double attach, double detach,
                                const PortfolioSpec& portfolio) {
  const int n = portfolio.names;
  std::vector<double> beta(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double loss = j * portfolio.loss_per_default();
    // Clamped form saturates at exactly detach - attach.
    beta[j] = std::clamp(loss - attach, 0.0, detach - attach);
  }
  return beta;
}

std::vector<double> beta_coeffs(const TrancheSpec& tranche,
                                const PortfolioSpec& portfolio) {
  return beta_coeffs(tranche.attach, tranche.detach, portfolio);
}

double premium_annuity(const PaymentSchedule& schedule,
                       const DiscountCurve& discount) {
  double a = 0.0;
  for (int i = 1; i <= schedule.size(); ++i)
    a += discount(schedule.time(i)) * schedule.accrual(i);
  return a;
}

std::vector<double> default_leg_weights(const PaymentSchedule& schedule,
                                        const DiscountCurve& discount) {
  const int m = schedule.size();
  std::vector<double> w(m);
  for (int i = 1; i <= m; ++i) {
    w[i - 1] = discount(schedule.midpoint(i));
    if (i < m) w[i - 1] -= discount(schedule.midpoint(i + 1));
  }
  return w;
}

std::vector<double> lambda_coeffs(double running_spread,
                                  const PaymentSchedule& schedule,
                                  const DiscountCurve& discount) {
  std::vector<double> lambda = default_leg_weights(schedule, discount);
  for (int i = 1; i <= schedule.size(); ++i)
    lambda[i - 1] +=
        running_spread * discount(schedule.time(i)) * schedule.accrual(i);
  return lambda;
}

double gamma_coeff(const TrancheSpec& tranche, const TrancheQuote& quote,
                   const PaymentSchedule& schedule,
                   const DiscountCurve& discount) {
  const double width = tranche.width();
  return width * quote.upfront +
         width * quote.running_spread * premium_annuity(schedule, discount);
}

TrancheCoefficients tranche_coefficients(const TrancheSpec& tranche,
                                         const TrancheQuote& quote,
                                         const PaymentSchedule& schedule,
                                         const DiscountCurve& discount,
                                         const PortfolioSpec& portfolio) {
  return {lambda_coeffs(quote.running_spread, schedule, discount),
          beta_coeffs(tranche, portfolio),
          gamma_coeff(tranche, quote, schedule, discount)};
}

TrancheCoefficients tranche_coefficients(const MarketSnapshot& snapshot,
                                         int tranche_index) {
  return tranche_coefficients(snapshot.tranches.at(tranche_index),
                              snapshot.quotes.at(tranche_index),
                              snapshot.schedule, snapshot.discount,
                              snapshot.portfolio);
}

double expected_npv(const Dpm& dpm, const TrancheCoefficients& c) {
  if (static_cast<int>(c.lambda.size()) != dpm.periods() ||
      static_cast<int>(c.beta.size()) != dpm.names() + 1)
    fail(ErrorCode::ShapeMismatch, "coefficients do not match the DPM");
  double v = -c.gamma;
  for (int i = 1; i <= dpm.periods(); ++i) {
    double level = 0.0;
    for (int j = 0; j <= dpm.names(); ++j) level += dpm(i, j) * c.beta[j];
    v += c.lambda[i - 1] * level;
  }
  return v;
}

double realized_npv(std::span<const int> counts, const TrancheCoefficients& c) {
  if (counts.size() != c.lambda.size())
    fail(ErrorCode::ShapeMismatch, "path length differs from schedule");
  const int n = static_cast<int>(c.beta.size()) - 1;
  double v = -c.gamma;
  int prev = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < prev || counts[i] > n)
      fail(ErrorCode::NonMonotonePath,
           "default counts must be non-decreasing and at most n");
    prev = counts[i];
    v += c.lambda[i] * c.beta[counts[i]];
  }
  return v;
}

double fair_quote(const TrancheSpec& tranche,
                  std::span<const double> expected_loss,
                  const PaymentSchedule& schedule,
                  const DiscountCurve& discount) {
  const int m = schedule.size();
  if (static_cast<int>(expected_loss.size()) != m)
    fail(ErrorCode::ShapeMismatch, "expected loss path has wrong length");
  const std::vector<double> w = default_leg_weights(schedule, discount);
  const double width = tranche.width();
  double protection = 0.0, risky_annuity = 0.0;
  for (int i = 1; i <= m; ++i) {
    const double da = discount(schedule.time(i)) * schedule.accrual(i);
    protection += w[i - 1] * expected_loss[i - 1];
    risky_annuity += da * (width - expected_loss[i - 1]);
  }
  if (tranche.kind == QuoteKind::Spread) return protection / risky_annuity;
  return (protection - tranche.fixed_running_spread * risky_annuity) / width;
}

}  // namespace cdofit
