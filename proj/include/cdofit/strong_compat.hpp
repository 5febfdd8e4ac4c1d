#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cdofit/dpm.hpp"
#include "cdofit/market_model.hpp"
#include "cdofit/opt_backend.hpp"
#include "cdofit/weak_compat.hpp"

namespace cdofit {

// h_{jk} = P(j of n names default | generator state k) for the
// gamma-distorted copula with resolution N; rows j = 0..n, columns k = 0..N.
Eigen::MatrixXd h_matrix(int names, int resolution);

// Loss profile over generator states: l_k = sum_j beta_j h_{jk}.
std::vector<double> state_profile(std::span<const double> beta,
                                  const Eigen::MatrixXd& h);

// Generator distribution p_{ik} = P(phi(F(T_i)) = k), i = 1..m, k = 0..N.
struct StrongSolution {
  int resolution;
  Eigen::MatrixXd p;
  std::string as_of;
};

// q = p h', the DPM implied by a generator distribution.
Dpm dpm_from_generator(const StrongSolution& solution, int names);

struct StrongResult : CompatibilityResult {
  int resolution = 0;
  std::optional<StrongSolution> solution;
};

StatePolytope strong_polytope(const MarketSnapshot& snapshot, int resolution,
                              std::span<const int> priced_tranches,
                              QuoteSide side = QuoteSide::Mid);

StrongResult verify_strong(const MarketSnapshot& snapshot, int resolution,
                           const opt::LpBackend& backend = opt::default_backend());

StrongResult verify_strong_bid_ask(
    const MarketSnapshot& snapshot, int resolution,
    const opt::LpBackend& backend = opt::default_backend());

// Quote range of tranche target given the listed tranches fixed at their
// quotes, over generator distributions with resolution N.
PriceBounds strong_tranche_range(
    const MarketSnapshot& snapshot, int target,
    std::span<const int> fixed_tranches, int resolution,
    const opt::LpBackend& backend = opt::default_backend());

// Bounds for a tranche on a portfolio of names_tilde names sharing the
// generator distribution calibrated to every quote of the snapshot.
PriceBounds strong_names_bounds(
    const MarketSnapshot& snapshot, int resolution, int names_tilde,
    const TrancheSpec& target,
    const opt::LpBackend& backend = opt::default_backend());

struct IterativeOptions {
  std::vector<int> resolutions{50, 75, 100, 125, 150, 175, 200};
  double eps_spread = 1e-6;    // 0.01bp
  double eps_upfront = 1e-5;   // 0.001%
};

struct RangeStep {
  int tranche;
  int resolution;
  PriceBounds bounds;
};

enum class IterativeOutcome { Compatible, NotStronglyCompatible, IterationLimit };

const char* to_string(IterativeOutcome outcome);

struct IterativeResult {
  IterativeOutcome outcome = IterativeOutcome::Compatible;
  int resolution = 0;      // N used for the final construction
  int failed_tranche = -1;
  std::vector<RangeStep> trace;
  std::optional<StrongSolution> solution;
};

IterativeResult verify_strong_iterative(
    const MarketSnapshot& snapshot, const IterativeOptions& options = {},
    const opt::LpBackend& backend = opt::default_backend());

// Samples the generator path phi(F(T_i)), i = 0..m+1, from one uniform.
class GeneratorSampler {
 public:
  explicit GeneratorSampler(const StrongSolution& solution);

  int resolution() const { return n_; }
  int periods() const { return static_cast<int>(cdf_.rows()) - 2; }
  // States for grid points 0..m+1 (first is 0, last is N).
  void sample(double u, std::span<int> states) const;
  // Cumulative p_{i,0} + ... + p_{ik} on the augmented grid.
  double cdf(int i, int k) const { return cdf_(i, k); }

 private:
  int n_;
  Eigen::MatrixXd cdf_;
};

// Generator value at an arbitrary u in [0,1], linear between grid points.
double interpolate_generator(std::span<const double> grid_u,
                             std::span<const int> grid_states, double u);

// xi_k / (xi_k + eta_{N-k}) with xi, eta cumulative sums of unit exponentials
// (xi[0] = eta[0] = 0). Equal to 0 at k = 0 and 1 at k = N.
double distortion_value(int k, int resolution, std::span<const double> xi,
                        std::span<const double> eta);

}  // namespace cdofit
