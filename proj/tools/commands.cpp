#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "json.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/risk_engine.hpp"
#include "cdofit/snapshot_io.hpp"
#include "cdofit/strong_compat.hpp"
#include "cdofit/weak_compat.hpp"

namespace cdofit::cli {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* units(QuoteKind kind) { return kind == QuoteKind::Upfront ? "pct" : "bps"; }

double display(QuoteKind kind, double v) {
  return kind == QuoteKind::Upfront ? v * 100.0 : v * 10000.0;
}

ordered_json bounds_json(const TrancheSpec& t, const PriceBounds& b) {
  ordered_json j{{"tranche", t.label()},
                 {"attach", t.attach},
                 {"detach", t.detach},
                 {"kind", to_string(t.kind)},
                 {"status", opt::to_string(b.status)}};
  if (b.ok()) {
    j["lower"] = display(t.kind, b.lower);
    j["upper"] = display(t.kind, b.upper);
  } else {
    j["lower"] = nullptr;
    j["upper"] = nullptr;
  }
  j["units"] = units(t.kind);
  return j;
}

std::string fmt_bound(const TrancheSpec& t, const PriceBounds& b) {
  if (!b.ok()) return std::string("(") + opt::to_string(b.status) + ")";
  std::ostringstream os;
  os << std::fixed << std::setprecision(t.kind == QuoteKind::Upfront ? 3 : 2)
     << '[' << display(t.kind, b.lower) << ", " << display(t.kind, b.upper) << "] "
     << (t.kind == QuoteKind::Upfront ? "%" : "bp");
  return os.str();
}

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path);
  if (!f) fail(ErrorCode::InvalidInput, "cannot write " + path);
  f << std::setprecision(17);
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  auto f = open_out(path);
  f << text;
}

// Rows of a flat table written as CSV; values already in display units.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  auto f = open_out(path);
  for (std::size_t k = 0; k < header.size(); ++k) f << (k ? "," : "") << header[k];
  f << '\n';
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < r.size(); ++k) f << (k ? "," : "") << r[k];
    f << '\n';
  }
}

std::string num(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

std::string num_or_empty(bool ok, double v) { return ok ? num(v) : ""; }

// Report to stdout as JSON under --json, otherwise the human lines.
void emit(const RunConfig& c, const ordered_json& report, const std::string& human) {
  if (c.json)
    std::cout << report.dump(2) << '\n';
  else
    std::cout << human;
}

IterativeOptions iterative_options(const RunConfig& c) {
  IterativeOptions o;
  o.resolutions = c.n_seq;
  if (c.eps) o.eps_spread = o.eps_upfront = *c.eps;
  return o;
}

std::vector<int> all_but(int n, int skip) {
  std::vector<int> v;
  for (int l = 0; l < n; ++l)
    if (l != skip) v.push_back(l);
  return v;
}

// --- calibrate -------------------------------------------------------------

int cmd_calibrate(const RunConfig& c, const MarketSnapshot& s) {
  const double mu = s.marginal.hazard();
  const double repriced =
      implied_index_spread(mu, s.schedule, s.discount, s.portfolio.recovery);
  const std::vector<double> f = s.marginal_grid();
  ordered_json rep{{"as_of", s.as_of},
                   {"index_spread_bps", s.index_spread * 1e4},
                   {"hazard", mu},
                   {"pv01", pv01(s.marginal, s.schedule, s.discount)},
                   {"repriced_spread_bps", repriced * 1e4}};
  ordered_json grid = ordered_json::array();
  for (int i = 0; i <= s.periods(); ++i)
    grid.push_back({{"time", s.schedule.time(i)}, {"F", f[i]}});
  rep["marginal"] = grid;

  if (!c.out.empty()) {
    if (c.format == "csv") {
      std::vector<std::vector<std::string>> rows;
      for (int i = 0; i <= s.periods(); ++i) rows.push_back({num(s.schedule.time(i)), num(f[i])});
      write_csv(c.out, {"time", "F"}, rows);
    } else {
      write_text(c.out, rep.dump(2) + "\n");
    }
  }
  std::ostringstream h;
  h << std::setprecision(10) << "hazard " << mu << "\nindex spread "
    << s.index_spread * 1e4 << " bp, repriced " << repriced * 1e4 << " bp\n";
  for (int i = 0; i <= s.periods(); ++i)
    h << "  T=" << s.schedule.time(i) << "  F=" << f[i] << '\n';
  emit(c, rep, h.str());
  return kCompatible;
}

// --- verification ----------------------------------------------------------

ordered_json weak_report(const CompatibilityResult& r, const MarketSnapshot& s) {
  ordered_json rep{{"compatible", r.compatible}, {"status", opt::to_string(r.status)}};
  if (!r.compatible) {
    ordered_json conflict = ordered_json::array();
    for (int l : r.conflicting_tranches) conflict.push_back(s.tranches[l].label());
    rep["conflicting_tranches"] = conflict;
    rep["message"] = r.message;
  }
  return rep;
}

int finish_weak(const RunConfig& c, const MarketSnapshot& s,
                const CompatibilityResult& r, const char* mode) {
  ordered_json rep{{"mode", mode}};
  rep.update(weak_report(r, s));
  if (!c.out.empty()) {
    if (r.compatible) {
      auto f = open_out(c.out);
      write_dpm_csv(f, *r.dpm, s.schedule);
    } else {
      write_text(c.out, rep.dump(2) + "\n");
    }
    rep["artifact"] = c.out;
  }
  std::ostringstream h;
  h << mode << ": " << (r.compatible ? "compatible" : "incompatible") << '\n';
  if (!r.compatible) h << "  " << r.message << '\n';
  emit(c, rep, h.str());
  return r.compatible ? kCompatible : kIncompatible;
}

int finish_strong(const RunConfig& c, const MarketSnapshot& s, const StrongResult& r,
                  const char* mode) {
  ordered_json rep{{"mode", mode}, {"resolution", r.resolution}};
  rep.update(weak_report(r, s));
  if (!c.out.empty()) {
    if (r.compatible) {
      auto f = open_out(c.out);
      write_strong_csv(f, *r.solution, s.schedule);
    } else {
      write_text(c.out, rep.dump(2) + "\n");
    }
    rep["artifact"] = c.out;
  }
  std::ostringstream h;
  h << mode << " (N=" << r.resolution << "): "
    << (r.compatible ? "compatible" : "incompatible") << '\n';
  if (!r.compatible) h << "  " << r.message << '\n';
  emit(c, rep, h.str());
  return r.compatible ? kCompatible : kIncompatible;
}

int cmd_verify_weak(const RunConfig& c, const MarketSnapshot& s) {
  return finish_weak(c, s, verify_weak(s), "weak");
}

int cmd_verify_strong(const RunConfig& c, const MarketSnapshot& s) {
  if (c.resolution) return finish_strong(c, s, verify_strong(s, *c.resolution), "strong");

  const IterativeResult r = verify_strong_iterative(s, iterative_options(c));
  const bool ok = r.outcome == IterativeOutcome::Compatible;
  ordered_json rep{{"mode", "strong-iterative"},
                   {"compatible", ok},
                   {"outcome", to_string(r.outcome)},
                   {"resolution", r.resolution}};
  ordered_json trace = ordered_json::array();
  for (const RangeStep& st : r.trace) {
    ordered_json j = bounds_json(s.tranches[st.tranche], st.bounds);
    j["resolution"] = st.resolution;
    trace.push_back(j);
  }
  rep["trace"] = trace;
  if (!ok && r.failed_tranche >= 0) {
    const TrancheSpec& t = s.tranches[r.failed_tranche];
    rep["failed_tranche"] = {{"index", r.failed_tranche},
                             {"tranche", t.label()},
                             {"quote", display(t.kind, quoted_value(t, s.quotes[r.failed_tranche]))},
                             {"units", units(t.kind)}};
  }
  if (!c.out.empty()) {
    if (ok) {
      auto f = open_out(c.out);
      write_strong_csv(f, *r.solution, s.schedule);
    } else {
      write_text(c.out, rep.dump(2) + "\n");
    }
    rep["artifact"] = c.out;
  }
  std::ostringstream h;
  h << "strong: " << to_string(r.outcome);
  if (ok) h << " at N=" << r.resolution;
  h << '\n';
  for (const RangeStep& st : r.trace)
    h << "  N=" << std::setw(4) << st.resolution << "  " << std::setw(10)
      << s.tranches[st.tranche].label() << "  " << fmt_bound(s.tranches[st.tranche], st.bounds)
      << '\n';
  if (!ok && r.failed_tranche >= 0)
    h << "  first failing tranche: " << s.tranches[r.failed_tranche].label() << '\n';
  emit(c, rep, h.str());
  return ok ? kCompatible : kIncompatible;
}

int cmd_verify_bid_ask(const RunConfig& c, const MarketSnapshot& s) {
  if (!s.bid || !s.ask) fail(ErrorCode::InvalidQuotes, "snapshot has no bid/ask quotes");
  if (c.mode == "weak") return finish_weak(c, s, verify_weak_bid_ask(s), "weak-bid-ask");
  if (c.mode == "strong")
    return finish_strong(c, s, verify_strong_bid_ask(s, c.resolution.value_or(100)),
                         "strong-bid-ask");
  fail(ErrorCode::InvalidInput, "--mode must be weak or strong");
}

// --- ranges and bounds -----------------------------------------------------

int cmd_ranges(const RunConfig& c, const MarketSnapshot& s) {
  const int mt = static_cast<int>(s.tranches.size());
  ordered_json rows = ordered_json::array();
  std::vector<std::vector<std::string>> csv;
  std::ostringstream h;
  bool all_ok = true;
  for (int big_n : c.n_seq) {
    h << "N=" << big_n << '\n';
    for (int l = 0; l < mt; ++l) {
      const TrancheSpec& t = s.tranches[l];
      const PriceBounds b = strong_tranche_range(s, l, all_but(mt, l), big_n);
      all_ok = all_ok && b.ok();
      ordered_json j = bounds_json(t, b);
      j["resolution"] = big_n;
      rows.push_back(j);
      csv.push_back({std::to_string(big_n), t.label(), num(t.attach), num(t.detach),
                     num_or_empty(b.ok(), display(t.kind, b.lower)),
                     num_or_empty(b.ok(), display(t.kind, b.upper)), units(t.kind)});
      h << "  " << std::setw(10) << t.label() << "  " << fmt_bound(t, b) << '\n';
    }
  }
  if (!c.out.empty()) {
    if (c.format == "csv")
      write_csv(c.out, {"N", "tranche", "attach", "detach", "lower", "upper", "units"}, csv);
    else
      write_text(c.out, rows.dump(2) + "\n");
  }
  emit(c, rows, h.str());
  return all_ok ? kCompatible : kIncompatible;
}

int cmd_bounds_tranche(const RunConfig& c, const MarketSnapshot& s) {
  const QuoteKind kind = c.kind == "upfront" ? QuoteKind::Upfront : QuoteKind::Spread;
  if (c.kind != "upfront" && c.kind != "spread")
    fail(ErrorCode::InvalidInput, "--kind must be spread or upfront");
  std::vector<double> detaches = c.detach_sweep;
  if (c.detach) detaches.insert(detaches.begin(), *c.detach);
  if (detaches.empty()) fail(ErrorCode::InvalidInput, "--detach or --detach-sweep required");

  ordered_json rows = ordered_json::array();
  std::vector<std::vector<std::string>> csv;
  std::ostringstream h;
  bool all_ok = true;
  for (double b : detaches) {
    const TrancheSpec t(c.attach, b, kind, c.running_bps / 1e4);
    const PriceBounds pb = weak_tranche_bounds(s, t);
    all_ok = all_ok && pb.ok();
    rows.push_back(bounds_json(t, pb));
    csv.push_back({num(t.attach), num(t.detach), num_or_empty(pb.ok(), display(kind, pb.lower)),
                   num_or_empty(pb.ok(), display(kind, pb.upper)), units(kind)});
    h << std::setw(10) << t.label() << "  " << fmt_bound(t, pb) << '\n';
  }
  if (!c.out.empty()) {
    if (c.format == "csv")
      write_csv(c.out, {"attach", "detach", "lower", "upper", "units"}, csv);
    else
      write_text(c.out, rows.dump(2) + "\n");
  }
  emit(c, rows.size() == 1 ? rows[0] : rows, h.str());
  return all_ok ? kCompatible : kIncompatible;
}

int cmd_bounds_names(const RunConfig& c, const MarketSnapshot& s) {
  const int big_n = c.resolution.value_or(100);
  std::vector<TrancheSpec> targets = s.tranches;
  if (c.detach) {
    const QuoteKind kind = c.kind == "upfront" ? QuoteKind::Upfront : QuoteKind::Spread;
    targets = {TrancheSpec(c.attach, *c.detach, kind, c.running_bps / 1e4)};
  }
  ordered_json rows = ordered_json::array();
  std::vector<std::vector<std::string>> csv;
  std::ostringstream h;
  bool all_ok = true;
  for (int names : c.names) {
    h << "names=" << names << '\n';
    for (const TrancheSpec& t : targets) {
      const PriceBounds b = strong_names_bounds(s, big_n, names, t);
      all_ok = all_ok && b.ok();
      ordered_json j = bounds_json(t, b);
      j["names"] = names;
      j["resolution"] = big_n;
      rows.push_back(j);
      csv.push_back({std::to_string(names), t.label(), num(t.attach), num(t.detach),
                     num_or_empty(b.ok(), display(t.kind, b.lower)),
                     num_or_empty(b.ok(), display(t.kind, b.upper)), units(t.kind)});
      h << "  " << std::setw(10) << t.label() << "  " << fmt_bound(t, b) << '\n';
    }
  }
  if (!c.out.empty()) {
    if (c.format == "csv")
      write_csv(c.out, {"names", "tranche", "attach", "detach", "lower", "upper", "units"}, csv);
    else
      write_text(c.out, rows.dump(2) + "\n");
  }
  emit(c, rows, h.str());
  return all_ok ? kCompatible : kIncompatible;
}

// --- hedge and simulation --------------------------------------------------

std::optional<StrongSolution> strong_solution(const RunConfig& c, const MarketSnapshot& s,
                                              std::string* message) {
  if (!c.solution.empty()) {
    std::ifstream in(c.solution);
    if (!in) fail(ErrorCode::InvalidInput, "cannot open " + c.solution);
    return read_strong_csv(in);
  }
  StrongResult r = verify_strong(s, c.resolution.value_or(100));
  if (!r.compatible) {
    *message = r.message;
    return std::nullopt;
  }
  return r.solution;
}

int cmd_hedge(const RunConfig& c, const MarketSnapshot& s) {
  std::optional<Dpm> prior;
  std::string message;
  if (c.prior == "maxent") {
    prior = max_entropy_dpm(s);
  } else if (c.prior == "weak") {
    CompatibilityResult r = verify_weak(s);
    if (r.compatible) prior = *r.dpm;
    message = r.message;
  } else if (c.prior == "strong") {
    if (auto sol = strong_solution(c, s, &message))
      prior = dpm_from_generator(*sol, s.portfolio.names);
  } else {
    fail(ErrorCode::InvalidInput, "--prior must be maxent, weak or strong");
  }
  if (!prior) {
    ordered_json rep{{"compatible", false}, {"message", message}};
    if (!c.out.empty()) write_text(c.out, rep.dump(2) + "\n");
    emit(c, rep, "hedge: no prior DPM; " + message + "\n");
    return kIncompatible;
  }

  const HedgeReport h = spread_delta(s, *prior, c.shift_bps / 1e4);
  ordered_json rep{{"prior", c.prior}, {"shift_bps", c.shift_bps}, {"dv_cds", h.dv_cds}};
  ordered_json rows = ordered_json::array();
  std::vector<std::vector<std::string>> csv;
  double sum = 0.0;
  std::ostringstream txt;
  txt << std::fixed << std::setprecision(4) << "shift " << c.shift_bps << " bp, dV_cds "
      << std::setprecision(8) << h.dv_cds << '\n';
  for (std::size_t l = 0; l < h.tranches.size(); ++l) {
    const TrancheHedge& t = h.tranches[l];
    const double width = t.detach - t.attach;
    sum += t.delta;
    rows.push_back({{"tranche", s.tranches[l].label()},
                    {"attach", t.attach},
                    {"detach", t.detach},
                    {"dv", t.dv},
                    {"delta", t.delta},
                    {"delta_per_width", t.delta / width}});
    csv.push_back({s.tranches[l].label(), num(t.attach), num(t.detach), num(t.dv),
                   num(t.delta), num(t.delta / width)});
    txt << "  " << std::setw(10) << s.tranches[l].label() << "  delta "
        << std::setprecision(4) << t.delta << "  per unit width " << t.delta / width << '\n';
  }
  rep["tranches"] = rows;
  rep["delta_sum"] = sum;
  txt << "  sum " << sum << '\n';
  if (!c.out.empty()) {
    if (c.format == "csv")
      write_csv(c.out, {"tranche", "attach", "detach", "dv", "delta", "delta_per_width"}, csv);
    else
      write_text(c.out, rep.dump(2) + "\n");
  }
  emit(c, rep, txt.str());
  return kCompatible;
}

ordered_json summary_json(const NpvSummary& n) {
  return {{"mean", n.mean}, {"stddev", n.stddev}, {"q01", n.q01}, {"q05", n.q05},
          {"q50", n.q50},   {"q95", n.q95},       {"q99", n.q99}};
}

int cmd_simulate(const RunConfig& c, const MarketSnapshot& s) {
  std::string message;
  const auto sol = strong_solution(c, s, &message);
  if (!sol) {
    ordered_json rep{{"compatible", false}, {"message", message}};
    emit(c, rep, "simulate: no generator distribution; " + message + "\n");
    return kIncompatible;
  }
  const int m = s.periods();
  const int mt = static_cast<int>(s.tranches.size());

  SimulationOptions opt;
  opt.paths = c.paths;
  opt.seed = c.seed;
  opt.threads = c.threads;
  opt.positions = c.positions;

  std::ofstream samples;
  if (!c.out.empty()) {
    samples = open_out(c.out);
    samples << "path_id";
    for (int i = 1; i <= m; ++i) samples << ",N_T" << i;
    for (int l = 1; l <= mt; ++l) samples << ",V_tranche_" << l;
    samples << ",V_portfolio\n";
  }
  std::vector<double> portfolio;
  if (!c.histogram.empty()) portfolio.reserve(static_cast<std::size_t>(c.paths));
  if (samples.is_open() || !c.histogram.empty()) {
    opt.sink = [&](const PathRecord& p) {
      if (samples.is_open()) {
        samples << p.path_id;
        for (int k : p.counts) samples << ',' << k;
        for (double v : p.values) samples << ',' << v;
        samples << ',' << p.portfolio << '\n';
      }
      if (!c.histogram.empty()) portfolio.push_back(p.portfolio);
    };
  }
  const SimulationResult r = simulate_npv(*sol, s, opt);

  ordered_json rep{{"paths", r.paths},
                   {"seed", c.seed},
                   {"resolution", sol->resolution},
                   {"positions", c.positions}};
  ordered_json tr = ordered_json::array();
  for (int l = 0; l < mt; ++l) {
    ordered_json j = summary_json(r.tranches[l]);
    j["tranche"] = s.tranches[l].label();
    tr.push_back(j);
  }
  rep["tranches"] = tr;
  rep["portfolio"] = summary_json(r.portfolio);
  rep["waterfall_violations"] = r.waterfall_violations;
  if (!c.summary.empty()) write_text(c.summary, rep.dump(2) + "\n");

  if (!c.histogram.empty() && !portfolio.empty()) {
    const auto [lo_it, hi_it] = std::minmax_element(portfolio.begin(), portfolio.end());
    const double lo = *lo_it;
    const double width = std::max(*hi_it - lo, 1e-300) / c.bins;
    std::vector<std::int64_t> counts(c.bins, 0);
    for (double v : portfolio)
      ++counts[std::min(c.bins - 1, static_cast<int>((v - lo) / width))];
    std::vector<std::vector<std::string>> rows;
    for (int b = 0; b < c.bins; ++b)
      rows.push_back({num(lo + b * width), num(lo + (b + 1) * width), std::to_string(counts[b])});
    write_csv(c.histogram, {"bin_lo", "bin_hi", "count"}, rows);
  }

  std::ostringstream h;
  h << std::setprecision(6) << r.paths << " paths, N=" << sol->resolution << '\n';
  for (int l = 0; l < mt; ++l)
    h << "  " << std::setw(10) << s.tranches[l].label() << "  mean " << std::setw(12)
      << r.tranches[l].mean << "  sd " << r.tranches[l].stddev << '\n';
  h << "  portfolio   mean " << std::setw(12) << r.portfolio.mean << "  sd "
    << r.portfolio.stddev << "  q01 " << r.portfolio.q01 << "  q99 " << r.portfolio.q99 << '\n';
  emit(c, rep, h.str());
  return kCompatible;
}

}  // namespace

std::vector<double> parse_number_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || cell.find_first_not_of(" \t", used) != std::string::npos)
      fail(ErrorCode::InvalidInput, "not a number list: '" + text + "'");
    out.push_back(v);
  }
  return out;
}

int run(const RunConfig& c) {
  if (c.format != "json" && c.format != "csv")
    fail(ErrorCode::InvalidInput, "--format must be json or csv");
  if (c.input.empty()) fail(ErrorCode::InvalidInput, "--input is required");
  const MarketSnapshot s = load_snapshot(c.input);
  if (!c.positions.empty() && c.positions.size() != s.tranches.size())
    fail(ErrorCode::ShapeMismatch, "--positions needs one weight per tranche");

  const std::string& cmd = c.subcommand;
  if (cmd == "calibrate") return cmd_calibrate(c, s);
  if (cmd == "verify-weak") return cmd_verify_weak(c, s);
  if (cmd == "verify-strong") return cmd_verify_strong(c, s);
  if (cmd == "verify-bid-ask") return cmd_verify_bid_ask(c, s);
  if (cmd == "ranges") return cmd_ranges(c, s);
  if (cmd == "bounds-tranche") return cmd_bounds_tranche(c, s);
  if (cmd == "bounds-names") return cmd_bounds_names(c, s);
  if (cmd == "hedge") return cmd_hedge(c, s);
  if (cmd == "simulate") return cmd_simulate(c, s);
  fail(ErrorCode::InvalidInput, "unknown subcommand " + cmd);
}

}  // namespace cdofit::cli
