#pragma once

#include <iosfwd>
#include <string>

#include "cdofit/dpm.hpp"
#include "cdofit/market_model.hpp"
#include "cdofit/strong_compat.hpp"

namespace cdofit {

// Snapshot JSON: index spread in bps, rate in %, attach/detach as fractions,
// quote_value in % for up-front tranches and bps for spread tranches.
// Optional per-tranche "bid"/"ask" use the same units as quote_value.
// Throws Error(MalformedSnapshot) on bad JSON or missing fields.
MarketSnapshot parse_snapshot(const std::string& json_text);
MarketSnapshot load_snapshot(const std::string& path);
std::string snapshot_to_json(const MarketSnapshot& snapshot);

// Header "time,q_0,...,q_n"; one row per payment date.
void write_dpm_csv(std::ostream& os, const Dpm& dpm,
                   const PaymentSchedule& schedule);
Dpm read_dpm_csv(std::istream& is);

// "# N=<N>" and "# as_of=<date>" lines, then "time,p_0,...,p_N".
void write_strong_csv(std::ostream& os, const StrongSolution& solution,
                      const PaymentSchedule& schedule);
StrongSolution read_strong_csv(std::istream& is);

}  // namespace cdofit
