#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdofit/dpm.hpp"
#include "cdofit/market_model.hpp"
#include "cdofit/opt_backend.hpp"
#include "cdofit/state_polytope.hpp"

namespace cdofit {

struct CompatibilityResult {
  bool compatible = false;
  opt::SolveStatus status = opt::SolveStatus::NumericalFailure;
  std::optional<Dpm> dpm;
  // When incompatible: a subset of tranches whose quotes already conflict
  // with the marginal curve, minimal in the sense that dropping any one
  // of them restores feasibility.
  std::vector<int> conflicting_tranches;
  std::string message;
};

struct PriceBounds {
  QuoteKind kind;
  double lower;
  double upper;
  opt::SolveStatus status;

  bool ok() const { return status == opt::SolveStatus::Optimal; }
  bool contains(double quote) const { return lower <= quote && quote <= upper; }
};

enum class QuoteSide { Mid, BidAsk };

// Adds the pricing constraint of a snapshot tranche, with loss profile given
// per state of the polytope.
void add_pricing(StatePolytope& polytope, const MarketSnapshot& snapshot,
                 int tranche, std::span<const double> profile, QuoteSide side);

// The DPM polytope: marginal constraints plus pricing rows for the listed
// tranches of the snapshot.
StatePolytope weak_polytope(const MarketSnapshot& snapshot,
                            std::span<const int> priced_tranches,
                            QuoteSide side = QuoteSide::Mid);

CompatibilityResult verify_weak(
    const MarketSnapshot& snapshot,
    const opt::LpBackend& backend = opt::default_backend());

// Requires bid and ask quotes on the snapshot; throws InvalidQuotes when a
// bid exceeds its ask.
CompatibilityResult verify_weak_bid_ask(
    const MarketSnapshot& snapshot,
    const opt::LpBackend& backend = opt::default_backend());

// Range of the quote of target over the polytope, given the loss profile of
// target on the polytope's state space.
PriceBounds quote_bounds(const StatePolytope& polytope, const TrancheSpec& target,
                         std::span<const double> profile,
                         const PaymentSchedule& schedule,
                         const DiscountCurve& discount,
                         const opt::LpBackend& backend = opt::default_backend());

// Arbitrage-free bounds for a tranche with arbitrary attachment points given
// every quoted tranche of the snapshot.
PriceBounds weak_tranche_bounds(
    const MarketSnapshot& snapshot, const TrancheSpec& target,
    const opt::LpBackend& backend = opt::default_backend());

void check_bid_ask(const MarketSnapshot& snapshot);

}  // namespace cdofit
