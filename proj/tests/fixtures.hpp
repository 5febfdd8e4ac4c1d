#pragma once

#include <cmath>
#include <vector>

#include "cdofit/market_model.hpp"

namespace cdofit::testing {

// iTraxx Europe S42 5y tranches, 2025-03-28.
inline MarketSnapshot itraxx_snapshot() {
  std::vector<TrancheSpec> t{
      {0.00, 0.03, QuoteKind::Upfront, 0.01},
      {0.03, 0.06, QuoteKind::Upfront, 0.01},
      {0.06, 0.12, QuoteKind::Spread},
      {0.12, 1.00, QuoteKind::Spread},
  };
  std::vector<TrancheQuote> q{
      make_quote(t[0], 0.28438),
      make_quote(t[1], 0.04531),
      make_quote(t[2], 106.32e-4),
      make_quote(t[3], 27.44e-4),
  };
  return make_snapshot("2025-03-28", 58e-4, PaymentSchedule::regular(5.0, 4),
                       DiscountCurve::flat(0.02417), PortfolioSpec(125, 0.4),
                       std::move(t), std::move(q));
}

// Decimal quote to display units: % for up-fronts, bps for spreads.
inline double display_units(QuoteKind kind, double v) {
  return kind == QuoteKind::Upfront ? 100.0 * v : 1e4 * v;
}

}  // namespace cdofit::testing
