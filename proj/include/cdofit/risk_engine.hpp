#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cdofit/dpm.hpp"
#include "cdofit/market_model.hpp"
#include "cdofit/strong_compat.hpp"

namespace cdofit {

// Relative-entropy projection of prior onto DPMs whose mean default counts
// match n F(T_i) for the given marginal values F(T_1..T_m).
Dpm posterior_dpm(const Dpm& prior, std::span<const double> shifted_marginal,
                  double eps = 1e-20);

Dpm posterior_dpm(const Dpm& prior, const MarginalDefaultCurve& shifted_curve,
                  const PaymentSchedule& schedule, double eps = 1e-20);

// The DPM of maximal entropy among those repricing every quote of the
// snapshot; unique, so hedges built on it do not depend on the LP solver.
Dpm max_entropy_dpm(const MarketSnapshot& snapshot);

struct TrancheHedge {
  double attach;
  double detach;
  double dv;
  double delta;
};

struct HedgeReport {
  double shift;  // decimal spread shift
  double dv_cds;
  std::vector<TrancheHedge> tranches;
  Dpm prior;
  Dpm posterior;
};

// Index-spread deltas of every snapshot tranche. The prior must reprice the
// snapshot (|v| < 1e-6 per tranche).
HedgeReport spread_delta(const MarketSnapshot& snapshot, const Dpm& prior,
                         double shift = 1e-4, double eps = 1e-20);

struct NpvSummary {
  double mean = 0.0;
  double stddev = 0.0;
  double q01 = 0.0, q05 = 0.0, q50 = 0.0, q95 = 0.0, q99 = 0.0;
};

struct PathRecord {
  std::int64_t path_id;
  std::span<const int> counts;      // N_{T_1}, ..., N_{T_m}
  std::span<const double> values;   // V per tranche
  double portfolio;
};

struct SimulationOptions {
  std::int64_t paths = 100000;
  std::uint64_t seed = 1;
  std::vector<double> positions;  // one weight per tranche; empty means zeros
  int threads = 0;                // 0 picks hardware concurrency
  // Called on the calling thread in path order.
  std::function<void(const PathRecord&)> sink;
};

struct SimulationResult {
  std::int64_t paths = 0;
  std::vector<NpvSummary> tranches;
  NpvSummary portfolio;
  // Empirical P(N_{T_i} = j), rows i = 1..m.
  Eigen::MatrixXd count_frequency;
  // Paths on which a senior tranche took a loss while a tranche below it
  // was not yet wiped out.
  std::int64_t waterfall_violations = 0;
};

SimulationResult simulate_npv(const StrongSolution& solution,
                              const MarketSnapshot& snapshot,
                              const SimulationOptions& options);

}  // namespace cdofit
