#include "cdofit/risk_engine.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "cdofit/errors.hpp"
#include "cdofit/opt_backend.hpp"
#include "cdofit/tranche_valuation.hpp"

namespace cdofit {

namespace {

int dpm_var(int names, int i, int j) { return (i - 1) * (names + 1) + j; }

// DPM polytope in q-space: row sums, mean defaults n F(T_i) and monotone
// tails. The j = 0 tail is the row sum, so only j >= 1 is constrained.
opt::LinearProgram dpm_program(int m, int n, std::span<const double> f) {
  opt::LinearProgram lp;
  lp.add_variables(m * (n + 1), 0.0, opt::kInf);
  for (int i = 1; i <= m; ++i) {
    std::vector<int> idx(n + 1);
    std::vector<double> one(n + 1, 1.0), jj(n + 1);
    for (int j = 0; j <= n; ++j) {
      idx[j] = dpm_var(n, i, j);
      jj[j] = j;
    }
    lp.add_equality(idx, one, 1.0, 0.0);
    lp.add_equality(idx, jj, n * f[i - 1], 0.0);
  }
  for (int i = 1; i < m; ++i)
    for (int j = 1; j <= n; ++j) {
      std::vector<int> idx;
      std::vector<double> val;
      for (int k = j; k <= n; ++k) {
        idx.push_back(dpm_var(n, i, k));
        val.push_back(1.0);
        idx.push_back(dpm_var(n, i + 1, k));
        val.push_back(-1.0);
      }
      lp.add_less_equal(std::move(idx), std::move(val), 0.0);
    }
  return lp;
}

Dpm solve_dpm_entropy(const opt::LinearProgram& lp, int m, int n,
                      const std::vector<double>& weights,
                      const std::vector<double>& start, double eps) {
  opt::EntropyOptions opts;
  opts.eps = eps;
  opts.start = start;
  const opt::EntropyResult r = opt::solve_relative_entropy(lp, weights, opts);
  if (r.status == opt::SolveStatus::Infeasible)
    fail(ErrorCode::InvalidInput, "constraints admit no DPM");
  if (r.status != opt::SolveStatus::Optimal)
    fail(ErrorCode::SolverFailure,
         "entropy projection did not converge (KKT residual " +
             std::to_string(r.kkt_residual) + ")");
  Eigen::MatrixXd q(m, n + 1);
  for (int i = 1; i <= m; ++i)
    for (int j = 0; j <= n; ++j) q(i - 1, j) = std::max(r.x[dpm_var(n, i, j)], 0.0);
  for (int i = 0; i < m; ++i) q.row(i) /= q.row(i).sum();
  return Dpm(std::move(q));
}

}  // namespace

Dpm posterior_dpm(const Dpm& prior, std::span<const double> f, double eps) {
  const int m = prior.periods(), n = prior.names();
  if (static_cast<int>(f.size()) != m)
    fail(ErrorCode::ShapeMismatch, "one shifted marginal value per period");
  if (!(eps > 0.0)) fail(ErrorCode::InvalidInput, "regularization must be > 0");

  const opt::LinearProgram lp = dpm_program(m, n, f);
  std::vector<double> w(m * (n + 1)), start(w.size());
  for (int i = 1; i <= m; ++i)
    for (int j = 0; j <= n; ++j) {
      w[dpm_var(n, i, j)] = prior(i, j);
      start[dpm_var(n, i, j)] = 0.5 * prior(i, j) + 0.5 / (n + 1);
    }
  return solve_dpm_entropy(lp, m, n, w, start, eps);
}

Dpm max_entropy_dpm(const MarketSnapshot& s) {
  const int m = s.periods(), n = s.portfolio.names;
  const std::vector<double> grid = s.marginal_grid();
  opt::LinearProgram lp = dpm_program(m, n, std::span(grid).subspan(1, m));
  for (int l = 0; l < static_cast<int>(s.tranches.size()); ++l) {
    const TrancheCoefficients c = tranche_coefficients(s, l);
    std::vector<int> idx;
    std::vector<double> val;
    for (int i = 1; i <= m; ++i)
      for (int j = 0; j <= n; ++j) {
        idx.push_back(dpm_var(n, i, j));
        val.push_back(c.lambda[i - 1] * c.beta[j]);
      }
    lp.add_equality(std::move(idx), std::move(val), c.gamma, 0.0);
  }
  const std::vector<double> ones(m * (n + 1), 1.0);
  const std::vector<double> start(ones.size(), 1.0 / (n + 1));
  return solve_dpm_entropy(lp, m, n, ones, start, 0.0);
}

Dpm posterior_dpm(const Dpm& prior, const MarginalDefaultCurve& curve,
                  const PaymentSchedule& schedule, double eps) {
  const std::vector<double> grid = curve.on_grid(schedule);
  return posterior_dpm(prior, std::span(grid).subspan(1, schedule.size()), eps);
}

HedgeReport spread_delta(const MarketSnapshot& s, const Dpm& prior,
                         double shift, double eps) {
  if (shift == 0.0) fail(ErrorCode::InvalidInput, "spread shift must be non-zero");
  if (prior.periods() != s.periods() || prior.names() != s.portfolio.names)
    fail(ErrorCode::ShapeMismatch, "prior DPM does not match the snapshot");
  for (std::size_t l = 0; l < s.tranches.size(); ++l) {
    const double v = expected_npv(prior, tranche_coefficients(s, static_cast<int>(l)));
    if (std::abs(v) >= 1e-6)
      fail(ErrorCode::InvalidInput,
           "prior DPM misprices tranche " + s.tranches[l].label());
  }
  const MarketSnapshot shifted = s.with_index_spread(s.index_spread + shift);
  Dpm post = posterior_dpm(prior, shifted.marginal, s.schedule, eps);
  const double dv_cds = cds_value_change(shifted.marginal, s.schedule, s.discount, shift);

  HedgeReport rep{shift, dv_cds, {}, prior, post};
  const Eigen::MatrixXd dq = post.matrix() - prior.matrix();
  for (std::size_t l = 0; l < s.tranches.size(); ++l) {
    const TrancheCoefficients c = tranche_coefficients(s, static_cast<int>(l));
    const Eigen::Map<const Eigen::VectorXd> lam(c.lambda.data(), c.lambda.size());
    const Eigen::Map<const Eigen::VectorXd> beta(c.beta.data(), c.beta.size());
    const double dv = lam.dot(dq * beta);
    rep.tranches.push_back({s.tranches[l].attach, s.tranches[l].detach, dv, dv / dv_cds});
  }
  return rep;
}

namespace {

constexpr std::int64_t kChunk = 4096;

struct ChunkOutput {
  std::vector<int> counts;      // paths x m
  std::vector<double> values;   // paths x M
  std::vector<double> portfolio;
};

NpvSummary summarize(std::vector<double>& v) {
  NpvSummary s;
  if (v.empty()) return s;
  double mean = 0.0, m2 = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    const double d = v[k] - mean;
    mean += d / static_cast<double>(k + 1);
    m2 += d * (v[k] - mean);
  }
  s.mean = mean;
  s.stddev = v.size() > 1 ? std::sqrt(m2 / static_cast<double>(v.size() - 1)) : 0.0;
  auto q = [&v](double p) {
    const std::size_t k = std::min(v.size() - 1, static_cast<std::size_t>(
                                                     p * static_cast<double>(v.size())));
    std::nth_element(v.begin(), v.begin() + static_cast<long>(k), v.end());
    return v[k];
  };
  s.q01 = q(0.01);
  s.q05 = q(0.05);
  s.q50 = q(0.50);
  s.q95 = q(0.95);
  s.q99 = q(0.99);
  return s;
}

}  // namespace

SimulationResult simulate_npv(const StrongSolution& sol, const MarketSnapshot& s,
                              const SimulationOptions& opt) {
  const int m = s.periods(), n = s.portfolio.names, big_n = sol.resolution;
  const int tranches = static_cast<int>(s.tranches.size());
  if (opt.paths < 1) fail(ErrorCode::InvalidInput, "need at least one path");
  if (sol.p.rows() != m)
    fail(ErrorCode::ShapeMismatch, "generator rows differ from the schedule");
  std::vector<double> pos = opt.positions;
  if (pos.empty()) pos.assign(tranches, 0.0);
  if (static_cast<int>(pos.size()) != tranches)
    fail(ErrorCode::ShapeMismatch, "one position weight per tranche");

  std::vector<TrancheCoefficients> coeff;
  {
    const Dpm q = dpm_from_generator(sol, n);
    for (int l = 0; l < tranches; ++l) {
      coeff.push_back(tranche_coefficients(s, l));
      if (std::abs(expected_npv(q, coeff.back())) >= 1e-6)
        fail(ErrorCode::InvalidInput,
             "generator solution does not price tranche " + s.tranches[l].label());
    }
  }
  const GeneratorSampler sampler(sol);

  auto run_chunk = [&](std::int64_t chunk, std::int64_t count) {
    std::seed_seq seq{static_cast<std::uint32_t>(opt.seed),
                      static_cast<std::uint32_t>(opt.seed >> 32),
                      static_cast<std::uint32_t>(chunk),
                      static_cast<std::uint32_t>(chunk >> 32)};
    std::mt19937_64 rng(seq);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::exponential_distribution<double> expo(1.0);
    ChunkOutput out;
    out.counts.resize(count * m);
    out.values.resize(count * tranches);
    out.portfolio.resize(count);
    std::vector<int> states(m + 2);
    std::vector<double> xi(big_n + 1), eta(big_n + 1), u(n);
    for (std::int64_t p = 0; p < count; ++p) {
      // U in (0, 1]: the generator inverts a right-continuous CDF.
      const double ug = 1.0 - unif(rng);
      sampler.sample(ug, states);
      xi[0] = eta[0] = 0.0;
      for (int k = 1; k <= big_n; ++k) xi[k] = xi[k - 1] + expo(rng);
      for (int k = 1; k <= big_n; ++k) eta[k] = eta[k - 1] + expo(rng);
      for (int j = 0; j < n; ++j) u[j] = unif(rng);
      std::sort(u.begin(), u.end());
      int* cnt = &out.counts[p * m];
      for (int i = 1; i <= m; ++i) {
        const double x = distortion_value(states[i], big_n, xi, eta);
        cnt[i - 1] = static_cast<int>(std::upper_bound(u.begin(), u.end(), x) - u.begin());
      }
      double port = 0.0;
      for (int l = 0; l < tranches; ++l) {
        const double v = realized_npv(std::span<const int>(cnt, m), coeff[l]);
        out.values[p * tranches + l] = v;
        port += pos[l] * v;
      }
      out.portfolio[p] = port;
    }
    return out;
  };

  SimulationResult res;
  res.paths = opt.paths;
  res.count_frequency = Eigen::MatrixXd::Zero(m, n + 1);
  std::vector<std::vector<double>> tv(tranches);
  for (auto& v : tv) v.reserve(opt.paths);
  std::vector<double> pv;
  pv.reserve(opt.paths);

  // Pairs (junior, senior) of non-overlapping tranches for the waterfall check.
  std::vector<std::pair<int, int>> stack;
  for (int a = 0; a < tranches; ++a)
    for (int b = 0; b < tranches; ++b)
      if (s.tranches[a].detach <= s.tranches[b].attach) stack.emplace_back(a, b);

  const int threads = std::max(1, opt.threads > 0 ? opt.threads
                                                  : static_cast<int>(std::thread::hardware_concurrency()));
  const std::int64_t chunks = (opt.paths + kChunk - 1) / kChunk;
  for (std::int64_t base = 0; base < chunks; base += threads) {
    const std::int64_t batch = std::min<std::int64_t>(threads, chunks - base);
    std::vector<ChunkOutput> outs(batch);
    auto work = [&](std::int64_t b) {
      const std::int64_t c = base + b;
      const std::int64_t first = c * kChunk;
      outs[b] = run_chunk(c, std::min(kChunk, opt.paths - first));
    };
    if (batch == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (std::int64_t b = 0; b < batch; ++b) pool.emplace_back(work, b);
      for (auto& t : pool) t.join();
    }
    for (std::int64_t b = 0; b < batch; ++b) {
      const ChunkOutput& o = outs[b];
      const std::int64_t count = static_cast<std::int64_t>(o.portfolio.size());
      const std::int64_t first = (base + b) * kChunk;
      for (std::int64_t p = 0; p < count; ++p) {
        const int* cnt = &o.counts[p * m];
        for (int i = 0; i < m; ++i) res.count_frequency(i, cnt[i]) += 1.0;
        const double* val = &o.values[p * tranches];
        for (int l = 0; l < tranches; ++l) tv[l].push_back(val[l]);
        pv.push_back(o.portfolio[p]);
        for (auto [jr, sr] : stack) {
          const auto& bj = coeff[jr].beta;
          const auto& bs = coeff[sr].beta;
          const double wj = s.tranches[jr].width();
          bool bad = false;
          for (int i = 0; i < m && !bad; ++i)
            bad = bs[cnt[i]] > 0.0 && bj[cnt[i]] < wj - 1e-15;
          if (bad) {
            ++res.waterfall_violations;
            break;
          }
        }
        if (opt.sink)
          opt.sink(PathRecord{first + p, std::span<const int>(cnt, m),
                              std::span<const double>(val, tranches), o.portfolio[p]});
      }
    }
  }
  res.count_frequency /= static_cast<double>(opt.paths);
  for (int l = 0; l < tranches; ++l) res.tranches.push_back(summarize(tv[l]));
  res.portfolio = summarize(pv);
  return res;
}

}  // namespace cdofit
