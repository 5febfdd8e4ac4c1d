#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace cdofit::cli {

enum ExitCode { kCompatible = 0, kIncompatible = 1, kError = 2 };

struct RunConfig {
  std::string subcommand;
  std::string input;
  std::string out;                // artifact file; empty means none
  std::string format = "json";    // json | csv
  bool json = false;              // machine-readable report on stdout
  std::uint64_t seed = 1;
  std::int64_t paths = 100000;
  int threads = 0;
  std::vector<int> n_seq{50, 75, 100, 125, 150, 175, 200};
  std::optional<int> resolution;  // single N
  std::optional<double> eps;      // decimal, both quote kinds
  double shift_bps = 1.0;
  std::vector<double> positions;
  std::string mode = "weak";      // verify-bid-ask: weak | strong
  std::string prior = "maxent";   // hedge: maxent | weak | strong
  // bounds-tranche
  double attach = 0.0;
  std::optional<double> detach;
  std::vector<double> detach_sweep;
  std::string kind = "spread";
  double running_bps = 0.0;
  // bounds-names
  std::vector<int> names{50, 100, 150, 200};
  // simulate
  std::string solution;           // StrongSolution CSV; empty means calibrate
  std::string summary;            // summary JSON file
  std::string histogram;          // portfolio NPV histogram CSV
  int bins = 50;
};

// Runs one subcommand and returns its exit code. Library errors propagate.
int run(const RunConfig& config);

std::vector<double> parse_number_list(const std::string& text);

}  // namespace cdofit::cli
