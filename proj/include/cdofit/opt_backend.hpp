#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cdofit::opt {

// Numerical tolerances shared by every feasibility and bounds problem.
struct Tolerances {
  double equality_slack = 1e-9;  // equality rows become [rhs - s, rhs + s]
  double primal_feasibility = 1e-10;
  double dual_feasibility = 1e-10;
  double clamp_negative = 1e-12;
  double homogenizer_floor = 1e-12;  // Charnes-Cooper t below this is degenerate
  double homogenizer_cap = 1e9;
  double time_limit_seconds = 600.0;
};

const Tolerances& default_tolerances();

constexpr double kInf = 1e30;

enum class Sense { Minimize, Maximize };

struct Row {
  std::vector<int> index;
  std::vector<double> value;
  double lower;
  double upper;
};

class LinearProgram {
 public:
  int add_variable(double lower = 0.0, double upper = kInf, double cost = 0.0);
  int add_variables(int count, double lower = 0.0, double upper = kInf);
  int add_row(std::vector<int> index, std::vector<double> value, double lower,
              double upper);
  // rhs +/- slack; pass slack = 0 for structural identities.
  int add_equality(std::vector<int> index, std::vector<double> value,
                   double rhs, double slack);
  int add_less_equal(std::vector<int> index, std::vector<double> value,
                     double rhs);

  void set_cost(int var, double cost) { cost_.at(var) = cost; }
  void set_objective(std::span<const int> index, std::span<const double> value,
                     double offset = 0.0);
  void set_sense(Sense sense) { sense_ = sense; }

  int num_variables() const { return static_cast<int>(lower_.size()); }
  int num_rows() const { return static_cast<int>(rows_.size()); }
  const std::vector<double>& cost() const { return cost_; }
  double offset() const { return offset_; }
  const std::vector<double>& lower() const { return lower_; }
  const std::vector<double>& upper() const { return upper_; }
  const std::vector<Row>& rows() const { return rows_; }
  Sense sense() const { return sense_; }

  // Largest violation of rows and bounds at x.
  double max_violation(std::span<const double> x) const;

 private:
  std::vector<double> cost_;
  std::vector<double> lower_;
  std::vector<double> upper_;
  std::vector<Row> rows_;
  double offset_ = 0.0;
  Sense sense_ = Sense::Minimize;
};

enum class SolveStatus {
  Optimal,
  Feasible,
  Infeasible,
  Unbounded,
  NumericalFailure,
  DegenerateDenominator,
};

const char* to_string(SolveStatus status);

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  double max_violation = 0.0;
  std::string detail;

  bool ok() const {
    return status == SolveStatus::Optimal || status == SolveStatus::Feasible;
  }
};

class LpBackend {
 public:
  virtual ~LpBackend() = default;
  virtual std::string_view name() const = 0;
  virtual SolveResult solve(const LinearProgram& lp,
                            const Tolerances& tol) const = 0;
};

// "simplex" (dual simplex) or "ipm" (interior point with crossover).
std::unique_ptr<LpBackend> make_backend(std::string_view name);
// Chosen by the CDO_COMPAT_SOLVER environment variable; simplex otherwise.
const LpBackend& default_backend();

SolveResult solve_lp(const LinearProgram& lp,
                     const LpBackend& backend = default_backend(),
                     const Tolerances& tol = default_tolerances());

// Pure feasibility check: the objective of lp is ignored.
SolveResult find_feasible(const LinearProgram& lp,
                          const LpBackend& backend = default_backend(),
                          const Tolerances& tol = default_tolerances());

struct Affine {
  std::vector<int> index;
  std::vector<double> value;
  double constant = 0.0;

  double operator()(std::span<const double> x) const;
};

// Optimizes numerator(x) / denominator(x) over the feasible set of lp via the
// Charnes-Cooper transformation. The denominator must be positive on the
// feasible set. On success x holds the original variables and objective the
// ratio.
SolveResult solve_lfp(const LinearProgram& lp, const Affine& numerator,
                      const Affine& denominator, Sense sense,
                      const LpBackend& backend = default_backend(),
                      const Tolerances& tol = default_tolerances());

// min sum_i x_i log(x_i / (prior_i + eps)) over the feasible set of lp
// (variable bounds must be [0, inf)).
struct EntropyOptions {
  double eps = 1e-20;
  double tolerance = 1e-10;
  int max_iterations = 200;
  std::vector<double> start;  // optional strictly positive starting point
};

struct EntropyResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  std::vector<double> x;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
};

EntropyResult solve_relative_entropy(const LinearProgram& lp,
                                     std::span<const double> prior,
                                     const EntropyOptions& options = {});

// Writes lp in CPLEX LP format when CDO_COMPAT_LP_DUMP names a directory.
void maybe_dump(const LinearProgram& lp, std::string_view tag);

}  // namespace cdofit::opt
