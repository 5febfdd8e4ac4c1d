#include <cmath>
#include <iostream>

#include "CLI11.hpp"

#include "cdofit/errors.hpp"
#include "commands.hpp"

using cdofit::cli::RunConfig;

namespace {

std::vector<int> to_ints(const std::vector<double>& v, const char* flag) {
  std::vector<int> out;
  for (double x : v) {
    if (x <= 0 || x != std::floor(x))
      cdofit::fail(cdofit::ErrorCode::InvalidInput,
                   std::string(flag) + " expects positive integers");
    out.push_back(static_cast<int>(x));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Copula compatibility checks, price bounds and hedges for CDO tranches"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "cdofit 0.1.0");

  RunConfig c;
  std::string n_seq, positions, names, sweep;
  std::optional<int> resolution;
  std::optional<double> eps, detach;

  auto common = [&](CLI::App* sub) {
    sub->add_option("-i,--input", c.input, "market snapshot JSON")->required();
    sub->add_option("-o,--out", c.out, "artifact file");
    sub->add_option("--format", c.format, "artifact format")
        ->check(CLI::IsMember({"json", "csv"}));
    sub->add_flag("--json", c.json, "JSON report on stdout");
  };
  auto with_n = [&](CLI::App* sub, const char* help) {
    sub->add_option("-N,--n", resolution, help)->check(CLI::PositiveNumber);
  };
  auto with_target = [&](CLI::App* sub) {
    sub->add_option("--attach", c.attach, "target attachment, fraction")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--detach", detach, "target detachment, fraction")
        ->check(CLI::Range(0.0, 1.0));
    sub->add_option("--kind", c.kind, "spread or upfront")
        ->check(CLI::IsMember({"spread", "upfront"}));
    sub->add_option("--running-bps", c.running_bps, "running spread of an up-front target");
  };

  auto* cal = app.add_subcommand("calibrate", "flat hazard rate and marginal default curve");
  common(cal);

  auto* vw = app.add_subcommand("verify-weak", "weak compatibility; writes a DPM CSV");
  common(vw);

  auto* vs = app.add_subcommand("verify-strong",
                                "strong compatibility; writes a generator distribution CSV");
  common(vs);
  with_n(vs, "single resolution N instead of the iterative search");
  vs->add_option("--n-seq", n_seq, "resolutions for the iterative search, e.g. 50,100,200");
  vs->add_option("--eps", eps, "range tolerance, decimal")->check(CLI::NonNegativeNumber);

  auto* vb = app.add_subcommand("verify-bid-ask", "compatibility with bid-ask bands");
  common(vb);
  vb->add_option("--mode", c.mode, "weak or strong")->check(CLI::IsMember({"weak", "strong"}));
  with_n(vb, "resolution N for --mode strong (default 100)");

  auto* rg = app.add_subcommand("ranges", "price range of each tranche given the others");
  common(rg);
  rg->add_option("--n-seq", n_seq, "resolutions, e.g. 50,100,200");

  auto* bt = app.add_subcommand("bounds-tranche",
                                "bounds for a tranche with arbitrary attachment points");
  common(bt);
  with_target(bt);
  bt->add_option("--detach-sweep", sweep, "list of detachment points");

  auto* bn = app.add_subcommand("bounds-names", "bounds on portfolios of other sizes");
  common(bn);
  with_n(bn, "resolution N (default 100)");
  with_target(bn);
  bn->add_option("--names", names, "portfolio sizes, e.g. 50,100,150,200");

  auto* hd = app.add_subcommand("hedge", "index-spread deltas of the quoted tranches");
  common(hd);
  hd->add_option("--shift-bps", c.shift_bps, "index spread shift in bp");
  hd->add_option("--prior", c.prior, "prior DPM")
      ->check(CLI::IsMember({"maxent", "weak", "strong"}));
  with_n(hd, "resolution N for --prior strong (default 100)");

  auto* sm = app.add_subcommand("simulate", "Monte Carlo tranche and portfolio NPVs");
  common(sm);
  with_n(sm, "resolution N when calibrating (default 100)");
  sm->add_option("--solution", c.solution, "generator distribution CSV from verify-strong");
  sm->add_option("--paths", c.paths, "number of paths")->check(CLI::PositiveNumber);
  sm->add_option("--seed", c.seed, "RNG seed");
  sm->add_option("--threads", c.threads, "worker threads, 0 = all cores")
      ->check(CLI::NonNegativeNumber);
  sm->add_option("--positions", positions, "tranche weights, e.g. -4,2,-1,0");
  sm->add_option("--summary", c.summary, "summary JSON file");
  sm->add_option("--histogram", c.histogram, "portfolio NPV histogram CSV");
  sm->add_option("--bins", c.bins, "histogram bins")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return cdofit::cli::kError;
  }

  try {
    c.subcommand = app.get_subcommands().front()->get_name();
    c.resolution = resolution;
    c.eps = eps;
    c.detach = detach;
    if (!n_seq.empty()) c.n_seq = to_ints(cdofit::cli::parse_number_list(n_seq), "--n-seq");
    if (!names.empty()) c.names = to_ints(cdofit::cli::parse_number_list(names), "--names");
    if (!positions.empty()) c.positions = cdofit::cli::parse_number_list(positions);
    if (!sweep.empty()) c.detach_sweep = cdofit::cli::parse_number_list(sweep);
    return cdofit::cli::run(c);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return cdofit::cli::kError;
  }
}
