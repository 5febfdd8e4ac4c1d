#include "cdofit/opt_backend.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <stdexcept>

#include "Highs.h"

namespace cdofit::opt {

const Tolerances& default_tolerances() {
  static const Tolerances tol{};
  return tol;
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::NumericalFailure: return "NumericalFailure";
    case SolveStatus::DegenerateDenominator: return "DegenerateDenominator";
  }
  return "?";
}

int LinearProgram::add_variable(double lower, double upper, double cost) {
  lower_.push_back(lower);
  upper_.push_back(upper);
  cost_.push_back(cost);
  return num_variables() - 1;
}

int LinearProgram::add_variables(int count, double lower, double upper) {
  const int first = num_variables();
  lower_.insert(lower_.end(), count, lower);
  upper_.insert(upper_.end(), count, upper);
  cost_.insert(cost_.end(), count, 0.0);
  return first;
}

int LinearProgram::add_row(std::vector<int> index, std::vector<double> value,
                           double lower, double upper) {
  if (index.size() != value.size())
    throw std::invalid_argument("row index/value size mismatch");
  for (int j : index)
    if (j < 0 || j >= num_variables())
      throw std::out_of_range("row references unknown variable");
  rows_.push_back(Row{std::move(index), std::move(value), lower, upper});
  return num_rows() - 1;
}

int LinearProgram::add_equality(std::vector<int> index,
                                std::vector<double> value, double rhs,
                                double slack) {
  return add_row(std::move(index), std::move(value), rhs - slack, rhs + slack);
}

int LinearProgram::add_less_equal(std::vector<int> index,
                                  std::vector<double> value, double rhs) {
  return add_row(std::move(index), std::move(value), -kInf, rhs);
}

void LinearProgram::set_objective(std::span<const int> index,
                                  std::span<const double> value,
                                  double offset) {
  std::fill(cost_.begin(), cost_.end(), 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) cost_.at(index[k]) += value[k];
  offset_ = offset;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (int j = 0; j < num_variables(); ++j) {
    worst = std::max(worst, lower_[j] - x[j]);
    worst = std::max(worst, x[j] - upper_[j]);
  }
  for (const Row& r : rows_) {
    double a = 0.0;
    for (std::size_t k = 0; k < r.index.size(); ++k) a += r.value[k] * x[r.index[k]];
    worst = std::max(worst, r.lower - a);
    worst = std::max(worst, a - r.upper);
  }
  return worst;
}

double Affine::operator()(std::span<const double> x) const {
  double s = constant;
  for (std::size_t k = 0; k < index.size(); ++k) s += value[k] * x[index[k]];
  return s;
}

namespace {

HighsLp to_highs(const LinearProgram& lp) {
  HighsLp h;
  const int n = lp.num_variables();
  const int m = lp.num_rows();
  h.num_col_ = n;
  h.num_row_ = m;
  h.col_cost_ = lp.cost();
  h.offset_ = lp.offset();
  h.col_lower_ = lp.lower();
  h.col_upper_ = lp.upper();
  h.sense_ = lp.sense() == Sense::Maximize ? ObjSense::kMaximize
                                           : ObjSense::kMinimize;
  h.row_lower_.reserve(m);
  h.row_upper_.reserve(m);
  auto& a = h.a_matrix_;
  a.format_ = MatrixFormat::kRowwise;
  a.num_col_ = n;
  a.num_row_ = m;
  a.start_.assign(1, 0);
  for (const Row& r : lp.rows()) {
    h.row_lower_.push_back(r.lower);
    h.row_upper_.push_back(r.upper);
    a.index_.insert(a.index_.end(), r.index.begin(), r.index.end());
    a.value_.insert(a.value_.end(), r.value.begin(), r.value.end());
    a.start_.push_back(static_cast<HighsInt>(a.index_.size()));
  }
  a.ensureColwise();
  return h;
}

class HighsBackend final : public LpBackend {
 public:
  explicit HighsBackend(bool ipm) : ipm_(ipm) {}

  std::string_view name() const override { return ipm_ ? "ipm" : "simplex"; }

  SolveResult solve(const LinearProgram& lp,
                    const Tolerances& tol) const override {
    // Near-degenerate programs sometimes end in an inconclusive status; retry
    // with the other algorithm, then both without presolve, before giving up.
    const Attempt attempts[] = {
        {ipm_, true}, {!ipm_, true}, {!ipm_, false}, {ipm_, false}};
    SolveResult out;
    for (const Attempt& a : attempts) {
      out = run(lp, tol, a);
      if (out.status != SolveStatus::NumericalFailure) break;
    }
    return out;
  }

 private:
  struct Attempt {
    bool ipm;
    bool presolve;
  };

  SolveResult run(const LinearProgram& lp, const Tolerances& tol,
                  const Attempt& a) const {
    Highs highs;
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("threads", 1);
    highs.setOptionValue("random_seed", 0);
    highs.setOptionValue("primal_feasibility_tolerance", tol.primal_feasibility);
    highs.setOptionValue("dual_feasibility_tolerance", tol.dual_feasibility);
    highs.setOptionValue("time_limit", tol.time_limit_seconds);
    highs.setOptionValue("solver", a.ipm ? "ipm" : "simplex");
    if (!a.presolve) highs.setOptionValue("presolve", "off");
    if (!a.ipm) highs.setOptionValue("simplex_strategy", 1);  // dual
    if (a.ipm) highs.setOptionValue("run_crossover", "on");

    SolveResult out;
    if (highs.passModel(to_highs(lp)) == HighsStatus::kError) {
      out.detail = "model rejected by solver";
      return out;
    }
    const HighsStatus run = highs.run();
    const HighsModelStatus ms = highs.getModelStatus();
    switch (ms) {
      case HighsModelStatus::kOptimal:
        out.status = SolveStatus::Optimal;
        break;
      case HighsModelStatus::kInfeasible:
        out.status = SolveStatus::Infeasible;
        out.detail = "primal infeasible";
        return out;
      case HighsModelStatus::kUnbounded:
        out.status = SolveStatus::Unbounded;
        return out;
      case HighsModelStatus::kUnboundedOrInfeasible:
        out.status = retry_unbounded_or_infeasible(lp, tol);
        return out;
      default:
        out.status = SolveStatus::NumericalFailure;
        out.detail = highs.modelStatusToString(ms);
        if (run == HighsStatus::kError) out.detail += " (run error)";
        return out;
    }
    out.x = highs.getSolution().col_value;
    // Undo roundoff below zero on non-negative variables.
    for (int j = 0; j < lp.num_variables(); ++j)
      if (lp.lower()[j] == 0.0 && out.x[j] < 0.0 && out.x[j] > -tol.clamp_negative)
        out.x[j] = 0.0;
    out.objective = highs.getInfo().objective_function_value;
    out.max_violation = lp.max_violation(out.x);
    return out;
  }

  // Presolve cannot always tell which; a zero-objective solve decides.
  SolveStatus retry_unbounded_or_infeasible(const LinearProgram& lp,
                                            const Tolerances& tol) const {
    LinearProgram feas = lp;
    for (int j = 0; j < feas.num_variables(); ++j) feas.set_cost(j, 0.0);
    Highs highs;
    highs.setOptionValue("output_flag", false);
    highs.setOptionValue("presolve", "off");
    highs.setOptionValue("primal_feasibility_tolerance", tol.primal_feasibility);
    highs.passModel(to_highs(feas));
    highs.run();
    return highs.getModelStatus() == HighsModelStatus::kOptimal
               ? SolveStatus::Unbounded
               : SolveStatus::Infeasible;
  }

  bool ipm_;
};

}  // namespace

std::unique_ptr<LpBackend> make_backend(std::string_view name) {
  if (name.empty() || name == "simplex" || name == "highs")
    return std::make_unique<HighsBackend>(false);
  if (name == "ipm") return std::make_unique<HighsBackend>(true);
  throw std::invalid_argument("unknown LP backend: " + std::string(name));
}

const LpBackend& default_backend() {
  static const std::unique_ptr<LpBackend> backend = [] {
    const char* env = std::getenv("CDO_COMPAT_SOLVER");
    return make_backend(env ? env : "");
  }();
  return *backend;
}

SolveResult solve_lp(const LinearProgram& lp, const LpBackend& backend,
                     const Tolerances& tol) {
  maybe_dump(lp, "lp");
  return backend.solve(lp, tol);
}

SolveResult find_feasible(const LinearProgram& lp, const LpBackend& backend,
                          const Tolerances& tol) {
  LinearProgram feas = lp;
  for (int j = 0; j < feas.num_variables(); ++j) feas.set_cost(j, 0.0);
  SolveResult r = solve_lp(feas, backend, tol);
  if (r.status == SolveStatus::Optimal) r.status = SolveStatus::Feasible;
  return r;
}

SolveResult solve_lfp(const LinearProgram& lp, const Affine& numerator,
                      const Affine& denominator, Sense sense,
                      const LpBackend& backend, const Tolerances& tol) {
  // Variables y = x t followed by t = 1 / denominator(x). Zero and infinite
  // bounds survive the scaling unchanged; others become homogeneous rows.
  const int n = lp.num_variables();
  LinearProgram cc;
  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower()[j], hi = lp.upper()[j];
    cc.add_variable(lo == 0.0 ? 0.0 : -kInf, hi == 0.0 ? 0.0 : kInf);
  }
  const int t = cc.add_variable(0.0, tol.homogenizer_cap);

  auto homogeneous = [&](std::vector<int> idx, std::vector<double> val,
                         double lower, double upper) {
    if (lower > -kInf && lower == upper) {
      idx.push_back(t);
      val.push_back(-lower);
      cc.add_row(std::move(idx), std::move(val), 0.0, 0.0);
      return;
    }
    if (lower > -kInf) {
      auto i2 = idx;
      auto v2 = val;
      i2.push_back(t);
      v2.push_back(-lower);
      cc.add_row(std::move(i2), std::move(v2), 0.0, kInf);
    }
    if (upper < kInf) {
      idx.push_back(t);
      val.push_back(-upper);
      cc.add_row(std::move(idx), std::move(val), -kInf, 0.0);
    }
  };

  for (int j = 0; j < n; ++j) {
    const double lo = lp.lower()[j], hi = lp.upper()[j];
    if (lo != 0.0 && lo > -kInf) homogeneous({j}, {1.0}, lo, kInf);
    if (hi != 0.0 && hi < kInf) homogeneous({j}, {1.0}, -kInf, hi);
  }
  for (const Row& r : lp.rows()) homogeneous(r.index, r.value, r.lower, r.upper);

  std::vector<int> didx = denominator.index;
  std::vector<double> dval = denominator.value;
  didx.push_back(t);
  dval.push_back(denominator.constant);
  cc.add_row(std::move(didx), std::move(dval), 1.0, 1.0);

  std::vector<int> oidx = numerator.index;
  std::vector<double> oval = numerator.value;
  oidx.push_back(t);
  oval.push_back(numerator.constant);
  cc.set_objective(oidx, oval);
  cc.set_sense(sense);

  maybe_dump(cc, "lfp");
  SolveResult r = backend.solve(cc, tol);
  if (!r.ok()) return r;
  const double tv = r.x[t];
  if (!(tv > tol.homogenizer_floor)) {
    r.status = SolveStatus::DegenerateDenominator;
    r.detail = "homogenizing variable vanished";
    return r;
  }
  if (tv >= tol.homogenizer_cap * (1.0 - 1e-9)) {
    // t pinned at its cap: the denominator gets arbitrarily close to 0.
    r.status = SolveStatus::DegenerateDenominator;
    r.detail = "denominator approaches zero on the feasible set";
    return r;
  }
  std::vector<double> x(n);
  for (int j = 0; j < n; ++j) x[j] = r.x[j] / tv;
  for (int j = 0; j < n; ++j)
    if (lp.lower()[j] == 0.0 && x[j] < 0.0) x[j] = 0.0;
  SolveResult out;
  out.status = SolveStatus::Optimal;
  out.objective = r.objective;
  out.max_violation = lp.max_violation(x);
  out.x = std::move(x);
  return out;
}

void maybe_dump(const LinearProgram& lp, std::string_view tag) {
  const char* dir = std::getenv("CDO_COMPAT_LP_DUMP");
  if (!dir || !*dir) return;
  static int counter = 0;
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  const fs::path file =
      fs::path(dir) / (std::string(tag) + "_" + std::to_string(counter++) + ".lp");
  Highs highs;
  highs.setOptionValue("output_flag", false);
  highs.passModel(to_highs(lp));
  highs.writeModel(file.string());
}

}  // namespace cdofit::opt
