#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cdofit/errors.hpp"
#include "cdofit/risk_engine.hpp"
#include "cdofit/snapshot_io.hpp"
#include "cdofit/strong_compat.hpp"
#include "cdofit/weak_compat.hpp"

namespace py = pybind11;
using namespace cdofit;

namespace {

py::dict bounds_dict(const TrancheSpec& t, const PriceBounds& b) {
  py::dict d;
  d["tranche"] = t.label();
  d["kind"] = to_string(t.kind);
  d["status"] = opt::to_string(b.status);
  // Decimals, as everywhere in the module.
  d["lower"] = b.ok() ? py::cast(b.lower) : py::none();
  d["upper"] = b.ok() ? py::cast(b.upper) : py::none();
  return d;
}

py::dict compat_dict(const CompatibilityResult& r) {
  py::dict d;
  d["compatible"] = r.compatible;
  d["status"] = opt::to_string(r.status);
  d["conflicting_tranches"] = r.conflicting_tranches;
  d["message"] = r.message;
  return d;
}

TrancheSpec make_tranche(double attach, double detach, const std::string& kind,
                         double running) {
  if (kind != "spread" && kind != "upfront")
    fail(ErrorCode::InvalidInput, "kind must be 'spread' or 'upfront'");
  return TrancheSpec(attach, detach, kind == "upfront" ? QuoteKind::Upfront : QuoteKind::Spread,
                     running);
}

std::vector<int> all_but(int n, int skip) {
  std::vector<int> v;
  for (int l = 0; l < n; ++l)
    if (l != skip) v.push_back(l);
  return v;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Copula compatibility checks, price bounds and hedges for CDO tranches";

  static py::exception<Error> error(m, "Error", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, e.what());
    }
  });

  py::class_<MarketSnapshot>(m, "Snapshot")
      .def_readonly("as_of", &MarketSnapshot::as_of)
      .def_readonly("index_spread", &MarketSnapshot::index_spread)
      .def_property_readonly("names", [](const MarketSnapshot& s) { return s.portfolio.names; })
      .def_property_readonly("recovery",
                             [](const MarketSnapshot& s) { return s.portfolio.recovery; })
      .def_property_readonly("periods", &MarketSnapshot::periods)
      .def_property_readonly("payment_dates",
                             [](const MarketSnapshot& s) { return s.schedule.dates(); })
      .def_property_readonly("hazard",
                             [](const MarketSnapshot& s) { return s.marginal.hazard(); })
      .def_property_readonly("marginal", &MarketSnapshot::marginal_grid)
      .def_property_readonly("tranches",
                             [](const MarketSnapshot& s) {
                               py::list out;
                               for (std::size_t l = 0; l < s.tranches.size(); ++l) {
                                 const TrancheSpec& t = s.tranches[l];
                                 py::dict d;
                                 d["attach"] = t.attach;
                                 d["detach"] = t.detach;
                                 d["kind"] = to_string(t.kind);
                                 d["running_spread"] = t.fixed_running_spread;
                                 d["quote"] = quoted_value(t, s.quotes[l]);
                                 out.append(d);
                               }
                               return out;
                             })
      .def("with_index_spread", &MarketSnapshot::with_index_spread, py::arg("spread"))
      .def("to_json", [](const MarketSnapshot& s) { return snapshot_to_json(s); });

  m.def("load_snapshot", &load_snapshot, py::arg("path"));
  m.def("parse_snapshot", &parse_snapshot, py::arg("json_text"));

  m.def(
      "implied_index_spread",
      [](const MarketSnapshot& s, double hazard) {
        return implied_index_spread(hazard, s.schedule, s.discount, s.portfolio.recovery);
      },
      py::arg("snapshot"), py::arg("hazard"));

  m.def(
      "verify_weak",
      [](const MarketSnapshot& s, bool bid_ask) {
        CompatibilityResult r = bid_ask ? verify_weak_bid_ask(s) : verify_weak(s);
        py::dict d = compat_dict(r);
        d["dpm"] = r.dpm ? py::cast(r.dpm->matrix()) : py::none();
        return d;
      },
      py::arg("snapshot"), py::arg("bid_ask") = false,
      "Returns a dict; 'dpm' is the m x (n+1) default probability matrix when compatible.");

  m.def(
      "verify_strong",
      [](const MarketSnapshot& s, int resolution, bool bid_ask) {
        StrongResult r = bid_ask ? verify_strong_bid_ask(s, resolution)
                                 : verify_strong(s, resolution);
        py::dict d = compat_dict(r);
        d["resolution"] = r.resolution;
        d["generator"] = r.solution ? py::cast(r.solution->p) : py::none();
        return d;
      },
      py::arg("snapshot"), py::arg("resolution") = 100, py::arg("bid_ask") = false);

  m.def(
      "verify_strong_iterative",
      [](const MarketSnapshot& s, std::vector<int> resolutions, std::optional<double> eps) {
        IterativeOptions o;
        o.resolutions = std::move(resolutions);
        if (eps) o.eps_spread = o.eps_upfront = *eps;
        IterativeResult r = verify_strong_iterative(s, o);
        py::dict d;
        d["outcome"] = to_string(r.outcome);
        d["compatible"] = r.outcome == IterativeOutcome::Compatible;
        d["resolution"] = r.resolution;
        d["failed_tranche"] = r.failed_tranche;
        py::list trace;
        for (const RangeStep& st : r.trace) {
          py::dict e = bounds_dict(s.tranches[st.tranche], st.bounds);
          e["index"] = st.tranche;
          e["resolution"] = st.resolution;
          trace.append(e);
        }
        d["trace"] = trace;
        d["generator"] = r.solution ? py::cast(r.solution->p) : py::none();
        return d;
      },
      py::arg("snapshot"),
      py::arg("resolutions") = std::vector<int>{50, 75, 100, 125, 150, 175, 200},
      py::arg("eps") = py::none());

  m.def(
      "tranche_bounds",
      [](const MarketSnapshot& s, double attach, double detach, const std::string& kind,
         double running) {
        const TrancheSpec t = make_tranche(attach, detach, kind, running);
        return bounds_dict(t, weak_tranche_bounds(s, t));
      },
      py::arg("snapshot"), py::arg("attach"), py::arg("detach"), py::arg("kind") = "spread",
      py::arg("running_spread") = 0.0,
      "Bounds for a tranche with arbitrary attachment points given every quote.");

  m.def(
      "tranche_range",
      [](const MarketSnapshot& s, int tranche, int resolution) {
        const int mt = static_cast<int>(s.tranches.size());
        if (tranche < 0 || tranche >= mt) fail(ErrorCode::InvalidInput, "tranche out of range");
        return bounds_dict(s.tranches[tranche],
                           strong_tranche_range(s, tranche, all_but(mt, tranche), resolution));
      },
      py::arg("snapshot"), py::arg("tranche"), py::arg("resolution") = 100,
      "Range of one quoted tranche given the others, at resolution N.");

  m.def(
      "names_bounds",
      [](const MarketSnapshot& s, int names, double attach, double detach,
         const std::string& kind, double running, int resolution) {
        const TrancheSpec t = make_tranche(attach, detach, kind, running);
        return bounds_dict(t, strong_names_bounds(s, resolution, names, t));
      },
      py::arg("snapshot"), py::arg("names"), py::arg("attach"), py::arg("detach"),
      py::arg("kind") = "spread", py::arg("running_spread") = 0.0,
      py::arg("resolution") = 100);

  m.def(
      "max_entropy_dpm",
      [](const MarketSnapshot& s) { return max_entropy_dpm(s).matrix(); },
      py::arg("snapshot"));

  m.def(
      "posterior_dpm",
      [](const Eigen::MatrixXd& prior, const std::vector<double>& marginal) {
        return posterior_dpm(Dpm(prior), marginal).matrix();
      },
      py::arg("prior"), py::arg("marginal"),
      "Relative-entropy projection of prior onto DPMs with marginal F(T_1..T_m).");

  m.def(
      "spread_delta",
      [](const MarketSnapshot& s, std::optional<Eigen::MatrixXd> prior, double shift) {
        const Dpm q = prior ? Dpm(*prior) : max_entropy_dpm(s);
        const HedgeReport h = spread_delta(s, q, shift);
        py::dict d;
        d["shift"] = h.shift;
        d["dv_cds"] = h.dv_cds;
        std::vector<double> dv, delta;
        for (const TrancheHedge& t : h.tranches) {
          dv.push_back(t.dv);
          delta.push_back(t.delta);
        }
        d["dv"] = dv;
        d["delta"] = delta;
        d["posterior"] = h.posterior.matrix();
        return d;
      },
      py::arg("snapshot"), py::arg("prior") = py::none(), py::arg("shift") = 1e-4,
      "Index-spread deltas; the prior defaults to the maximum-entropy DPM.");

  m.def(
      "simulate",
      [](const MarketSnapshot& s, const Eigen::MatrixXd& generator, std::int64_t paths,
         std::uint64_t seed, std::vector<double> positions, int threads) {
        const StrongSolution sol{static_cast<int>(generator.cols()) - 1, generator, s.as_of};
        SimulationOptions o;
        o.paths = paths;
        o.seed = seed;
        o.positions = std::move(positions);
        o.threads = threads;
        SimulationResult r;
        {
          py::gil_scoped_release release;
          r = simulate_npv(sol, s, o);
        }
        auto summary = [](const NpvSummary& n) {
          py::dict d;
          d["mean"] = n.mean;
          d["stddev"] = n.stddev;
          d["q01"] = n.q01;
          d["q05"] = n.q05;
          d["q50"] = n.q50;
          d["q95"] = n.q95;
          d["q99"] = n.q99;
          return d;
        };
        py::dict d;
        d["paths"] = r.paths;
        py::list tr;
        for (const NpvSummary& n : r.tranches) tr.append(summary(n));
        d["tranches"] = tr;
        d["portfolio"] = summary(r.portfolio);
        d["count_frequency"] = r.count_frequency;
        d["waterfall_violations"] = r.waterfall_violations;
        return d;
      },
      py::arg("snapshot"), py::arg("generator"), py::arg("paths") = 100000,
      py::arg("seed") = 1, py::arg("positions") = std::vector<double>{},
      py::arg("threads") = 0);
}
