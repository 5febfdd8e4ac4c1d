// Primal-dual interior point for min sum x log(x / w) subject to linear
// equalities and inequalities, x > 0. Mehrotra predictor-corrector; the
// Newton system is solved in quasidefinite augmented form.

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cdofit/opt_backend.hpp"

namespace cdofit::opt {

namespace {

using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Vec = Eigen::VectorXd;

struct Split {
  SpMat a;  // equality rows
  Vec b;
  SpMat g;  // inequality rows g x <= h
  Vec h;
};

Split split_rows(const LinearProgram& lp, double equality_width) {
  std::vector<Eigen::Triplet<double>> ta, tg;
  std::vector<double> b, h;
  auto put = [](std::vector<Eigen::Triplet<double>>& t, int row, const Row& r,
                double sign) {
    for (std::size_t k = 0; k < r.index.size(); ++k)
      t.emplace_back(row, r.index[k], sign * r.value[k]);
  };
  for (const Row& r : lp.rows()) {
    const bool lo = r.lower > -kInf, hi = r.upper < kInf;
    if (lo && hi && r.upper - r.lower <= equality_width) {
      put(ta, static_cast<int>(b.size()), r, 1.0);
      b.push_back(0.5 * (r.lower + r.upper));
      continue;
    }
    if (hi) {
      put(tg, static_cast<int>(h.size()), r, 1.0);
      h.push_back(r.upper);
    }
    if (lo) {
      put(tg, static_cast<int>(h.size()), r, -1.0);
      h.push_back(-r.lower);
    }
  }
  const int n = lp.num_variables();
  Split s;
  s.a.resize(static_cast<int>(b.size()), n);
  s.a.setFromTriplets(ta.begin(), ta.end());
  s.g.resize(static_cast<int>(h.size()), n);
  s.g.setFromTriplets(tg.begin(), tg.end());
  s.b = Eigen::Map<Vec>(b.data(), static_cast<int>(b.size()));
  s.h = Eigen::Map<Vec>(h.data(), static_cast<int>(h.size()));
  return s;
}

double max_step(const Vec& v, const Vec& dv) {
  double alpha = 1.0;
  for (int k = 0; k < v.size(); ++k)
    if (dv[k] < 0.0) alpha = std::min(alpha, -v[k] / dv[k]);
  return alpha;
}

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

}  // namespace

EntropyResult solve_relative_entropy(const LinearProgram& lp,
                                     std::span<const double> prior,
                                     const EntropyOptions& options) {
  const int n = lp.num_variables();
  if (static_cast<int>(prior.size()) != n)
    throw std::invalid_argument("prior size does not match variables");
  for (int j = 0; j < n; ++j)
    if (lp.lower()[j] != 0.0 || lp.upper()[j] < kInf)
      throw std::invalid_argument("entropy problem needs bounds [0, inf)");

  EntropyResult out;
  Vec x(n);
  if (!options.start.empty()) {
    for (int j = 0; j < n; ++j) x[j] = options.start.at(j);
    if (x.minCoeff() <= 0.0)
      throw std::invalid_argument("starting point must be strictly positive");
  } else {
    // A feasible vertex, pulled into the interior.
    const SolveResult f = find_feasible(lp);
    if (f.status == SolveStatus::Infeasible) {
      out.status = SolveStatus::Infeasible;
      return out;
    }
    if (!f.ok()) return out;
    double avg = 0.0;
    for (double v : f.x) avg += std::abs(v);
    avg = std::max(avg / n, 1e-8);
    for (int j = 0; j < n; ++j) x[j] = 0.9 * std::max(f.x[j], 0.0) + 0.1 * avg;
  }

  const Split sp = split_rows(lp, 4.0 * default_tolerances().equality_slack);
  const SpMat& a = sp.a;
  const SpMat& g = sp.g;
  const SpMat at = a.transpose();
  const SpMat gt = g.transpose();
  const int me = static_cast<int>(a.rows());
  const int mi = static_cast<int>(g.rows());

  Vec w(n);
  for (int j = 0; j < n; ++j) w[j] = prior[j] + options.eps;
  Vec logw = w.array().log();

  Vec y = Vec::Zero(me);
  Vec s = (sp.h - g * x).cwiseMax(1e-2);
  Vec z = Vec::Ones(mi);
  // Bound duals for x >= 0; without them entries whose optimum is tiny
  // overshoot far below it and the log terms take many steps to recover.
  Vec v = Vec::Constant(n, 1e-2).cwiseQuotient(x).cwiseMin(1.0);

  // Quasidefinite augmented system in (dx, dy, dz):
  //   [ diag((1+v)/x)   A'    G'     ]
  //   [ A               -dI   0      ]
  //   [ G               0     -S/Z   ]
  // Keeping S/Z rather than Z/S avoids the huge entries of the reduced form
  // once inequalities become active.
  const int na = n + me + mi;
  constexpr double kReg = 1e-13;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(n + me + mi + 2 * (a.nonZeros() + g.nonZeros()));
  for (int j = 0; j < n; ++j) trip.emplace_back(j, j, 1.0);
  for (int r = 0; r < me; ++r) trip.emplace_back(n + r, n + r, -kReg);
  for (int r = 0; r < mi; ++r) trip.emplace_back(n + me + r, n + me + r, -1.0);
  for (int c = 0; c < n; ++c) {
    for (SpMat::InnerIterator itr(a, c); itr; ++itr) {
      trip.emplace_back(n + itr.row(), c, itr.value());
      trip.emplace_back(c, n + itr.row(), itr.value());
    }
    for (SpMat::InnerIterator itr(g, c); itr; ++itr) {
      trip.emplace_back(n + me + itr.row(), c, itr.value());
      trip.emplace_back(c, n + me + itr.row(), itr.value());
    }
  }
  SpMat kkt(na, na);
  kkt.setFromTriplets(trip.begin(), trip.end());
  kkt.makeCompressed();
  // Diagonal entries are rewritten in place every iteration.
  std::vector<double*> diag(na);
  for (int j = 0; j < na; ++j) diag[j] = &kkt.coeffRef(j, j);

  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> kfac;
  kfac.analyzePattern(kkt);
  const double tol = options.tolerance;
  const int mc = mi + n;

  for (int it = 0; it < options.max_iterations; ++it) {
    out.iterations = it;
    const Vec grad = (x.array().log() - logw.array() + 1.0).matrix();
    const Vec rd = grad + at * y + gt * z - v;
    const Vec re = a * x - sp.b;
    const Vec ri = g * x + s - sp.h;
    const double mu = (s.dot(z) + x.dot(v)) / mc;
    // Stationarity is measured in log coordinates, d/d(log x) = x * rd, so
    // entries sitting at the eps floor do not stall convergence.
    const double stat = inf_norm(x.cwiseProduct(rd));
    out.kkt_residual = std::max({stat, inf_norm(re), inf_norm(ri), mu});
    if (out.kkt_residual < tol) {
      out.status = SolveStatus::Optimal;
      break;
    }

    Vec hx(n), sz(mi);
    for (int j = 0; j < n; ++j) *diag[j] = hx[j] = (1.0 + v[j]) / x[j];
    for (int r = 0; r < mi; ++r) *diag[n + me + r] = -(sz[r] = s[r] / z[r]);
    kfac.factorize(kkt);
    if (kfac.info() != Eigen::Success) {
      out.status = SolveStatus::NumericalFailure;
      break;
    }
    // Residual of the unregularized system, for iterative refinement.
    auto apply = [&](const Vec& u) {
      Vec o(na);
      const auto ux = u.head(n), uy = u.segment(n, me), uz = u.tail(mi);
      o.head(n) = hx.cwiseProduct(ux) + at * uy + gt * uz;
      o.segment(n, me) = a * ux;
      o.tail(mi) = g * ux - sz.cwiseProduct(uz);
      return o;
    };
    auto solve = [&](const Vec& rhs) {
      Vec u = kfac.solve(rhs);
      for (int k = 0; k < 3; ++k) u += kfac.solve(rhs - apply(u));
      return u;
    };

    // rcz, rcx: complementarity residuals of the (s, z) and (x, v) pairs.
    auto newton = [&](const Vec& rcz, const Vec& rcx, Vec& dx, Vec& dy, Vec& ds,
                      Vec& dz, Vec& dv) {
      Vec rhs(na);
      rhs.head(n) = -rd - rcx.cwiseQuotient(x);
      rhs.segment(n, me) = -re;
      rhs.tail(mi) = -ri + rcz.cwiseQuotient(z);
      const Vec u = solve(rhs);
      dx = u.head(n);
      dy = u.segment(n, me);
      dz = u.tail(mi);
      ds = (-rcz - s.cwiseProduct(dz)).cwiseQuotient(z);
      dv = (-rcx - v.cwiseProduct(dx)).cwiseQuotient(x);
    };

    Vec dx, dy, ds, dz, dv;
    newton(s.cwiseProduct(z), x.cwiseProduct(v), dx, dy, ds, dz, dv);
    const double a_aff = std::min({max_step(s, ds), max_step(x, dx), max_step(z, dz),
                                   max_step(v, dv)});
    const double mu_aff = ((s + a_aff * ds).dot(z + a_aff * dz) +
                           (x + a_aff * dx).dot(v + a_aff * dv)) / mc;
    const double sigma = std::pow(std::clamp(mu_aff / std::max(mu, 1e-300), 0.0, 1.0), 3);
    newton(s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(mi, sigma * mu),
           x.cwiseProduct(v) + dx.cwiseProduct(dv) - Vec::Constant(n, sigma * mu),
           dx, dy, ds, dz, dv);

    // One step length for primal and dual: the gradient term of rd moves
    // with x, so independent lengths would break the linearization.
    const double frac = 0.995;
    const double alpha = std::min(
        1.0, frac * std::min({max_step(s, ds), max_step(x, dx), max_step(z, dz),
                              max_step(v, dv)}));
    x += alpha * dx;
    s += alpha * ds;
    y += alpha * dy;
    z += alpha * dz;
    v += alpha * dv;
    if (!x.allFinite() || !z.allFinite() || !v.allFinite()) {
      out.status = SolveStatus::NumericalFailure;
      break;
    }
  }

  out.x.assign(x.data(), x.data() + n);
  double obj = 0.0;
  for (int j = 0; j < n; ++j)
    if (x[j] > 0.0) obj += x[j] * (std::log(x[j]) - logw[j]);
  out.objective = obj;
  return out;
}

}  // namespace cdofit::opt
