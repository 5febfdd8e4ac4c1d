#include "cdofit/snapshot_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "json.hpp"

#include "cdofit/errors.hpp"

namespace cdofit {

using nlohmann::json;

namespace {

double number(const json& j, const char* key) {
  if (!j.contains(key) || !j.at(key).is_number())
    fail(ErrorCode::MalformedSnapshot, std::string("missing numeric field '") + key + "'");
  return j.at(key).get<double>();
}

int payments_per_year(const std::string& freq) {
  if (freq == "quarterly") return 4;
  if (freq == "semiannual") return 2;
  if (freq == "annual") return 1;
  if (freq == "monthly") return 12;
  fail(ErrorCode::MalformedSnapshot, "unknown schedule frequency '" + freq + "'");
}

const char* frequency_name(int per_year) {
  switch (per_year) {
    case 1: return "annual";
    case 2: return "semiannual";
    case 12: return "monthly";
    default: return "quarterly";
  }
}

// Quoted value in file units to decimals.
double to_decimal(QuoteKind kind, double v) {
  return kind == QuoteKind::Upfront ? v / 100.0 : v / 10000.0;
}

double from_decimal(QuoteKind kind, double v) {
  return kind == QuoteKind::Upfront ? v * 100.0 : v * 10000.0;
}

}  // namespace

MarketSnapshot parse_snapshot(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::MalformedSnapshot, e.what());
  }
  if (!j.is_object()) fail(ErrorCode::MalformedSnapshot, "top level must be an object");
  try {
    const std::string as_of = j.value("as_of", "");
    const double spread = number(j, "index_spread_bps") / 10000.0;
    const double recovery = number(j, "recovery");
    const int names = static_cast<int>(number(j, "n_names"));
    if (!j.contains("schedule") || !j["schedule"].is_object())
      fail(ErrorCode::MalformedSnapshot, "missing 'schedule' object");
    const json& sj = j["schedule"];
    PaymentSchedule schedule = PaymentSchedule::regular(
        number(sj, "years"), payments_per_year(sj.value("freq", "quarterly")));

    DiscountCurve discount = DiscountCurve::flat(0.0);
    if (j.contains("discount_factors")) {
      const json& d = j["discount_factors"];
      discount = DiscountCurve::from_discount_factors(
          d.at("times").get<std::vector<double>>(),
          d.at("factors").get<std::vector<double>>());
    } else {
      discount = DiscountCurve::flat(number(j, "rate_pct") / 100.0);
    }

    if (!j.contains("tranches") || !j["tranches"].is_array())
      fail(ErrorCode::MalformedSnapshot, "missing 'tranches' array");
    std::vector<TrancheSpec> tranches;
    std::vector<TrancheQuote> quotes, bid, ask;
    bool has_bid_ask = !j["tranches"].empty();
    for (const json& t : j["tranches"]) {
      const std::string q = t.value("quote", "");
      QuoteKind kind;
      if (q == "upfront") kind = QuoteKind::Upfront;
      else if (q == "spread") kind = QuoteKind::Spread;
      else fail(ErrorCode::MalformedSnapshot, "tranche quote must be 'upfront' or 'spread'");
      const double running =
          kind == QuoteKind::Upfront ? number(t, "fixed_running_bps") / 10000.0 : 0.0;
      TrancheSpec spec(number(t, "attach"), number(t, "detach"), kind, running);
      quotes.push_back(make_quote(spec, to_decimal(kind, number(t, "quote_value"))));
      if (t.contains("bid") && t.contains("ask")) {
        bid.push_back(make_quote(spec, to_decimal(kind, number(t, "bid"))));
        ask.push_back(make_quote(spec, to_decimal(kind, number(t, "ask"))));
      } else {
        has_bid_ask = false;
      }
      tranches.push_back(spec);
    }
    MarketSnapshot s = make_snapshot(as_of, spread, std::move(schedule), discount,
                                     PortfolioSpec(names, recovery),
                                     std::move(tranches), std::move(quotes));
    if (has_bid_ask) {
      s.bid = std::move(bid);
      s.ask = std::move(ask);
    }
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::MalformedSnapshot, e.what());
  }
}

MarketSnapshot load_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::MalformedSnapshot, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_snapshot(buf.str());
}

std::string snapshot_to_json(const MarketSnapshot& s) {
  json j;
  j["as_of"] = s.as_of;
  j["index_spread_bps"] = s.index_spread * 10000.0;
  j["recovery"] = s.portfolio.recovery;
  j["n_names"] = s.portfolio.names;
  if (s.discount.is_flat()) {
    j["rate_pct"] = s.discount.flat_rate() * 100.0;
  } else {
    json d;
    for (double t : s.schedule.dates()) {
      if (t == 0.0) continue;
      d["times"].push_back(t);
      d["factors"].push_back(s.discount(t));
    }
    j["discount_factors"] = d;
  }
  const int per_year =
      static_cast<int>(std::lround(1.0 / s.schedule.accrual(1)));
  j["schedule"] = {{"freq", frequency_name(per_year)},
                   {"years", s.schedule.maturity()}};
  j["tranches"] = json::array();
  for (std::size_t l = 0; l < s.tranches.size(); ++l) {
    const TrancheSpec& t = s.tranches[l];
    json tj{{"attach", t.attach},
            {"detach", t.detach},
            {"quote", to_string(t.kind)},
            {"quote_value", from_decimal(t.kind, quoted_value(t, s.quotes[l]))}};
    if (t.kind == QuoteKind::Upfront)
      tj["fixed_running_bps"] = t.fixed_running_spread * 10000.0;
    if (s.bid && s.ask) {
      tj["bid"] = from_decimal(t.kind, quoted_value(t, s.bid->at(l)));
      tj["ask"] = from_decimal(t.kind, quoted_value(t, s.ask->at(l)));
    }
    j["tranches"].push_back(tj);
  }
  return j.dump(2);
}

namespace {

void write_matrix(std::ostream& os, const Eigen::MatrixXd& x,
                  const PaymentSchedule& schedule, const char* prefix) {
  os << "time";
  for (int k = 0; k < x.cols(); ++k) os << ',' << prefix << k;
  os << '\n' << std::setprecision(17);
  for (int i = 0; i < x.rows(); ++i) {
    os << schedule.time(i + 1);
    for (int k = 0; k < x.cols(); ++k) os << ',' << x(i, k);
    os << '\n';
  }
}

Eigen::MatrixXd read_matrix(std::istream& is, std::string* first_line) {
  std::string line;
  std::vector<std::vector<double>> rows;
  bool header = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (first_line) *first_line += line + '\n';
      continue;
    }
    if (!header) {
      header = true;
      continue;
    }
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    bool skip_time = true;
    while (std::getline(ls, cell, ',')) {
      if (skip_time) {
        skip_time = false;
        continue;
      }
      row.push_back(std::stod(cell));
    }
    if (!rows.empty() && row.size() != rows.front().size())
      fail(ErrorCode::ShapeMismatch, "ragged CSV matrix");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) fail(ErrorCode::ShapeMismatch, "empty CSV matrix");
  Eigen::MatrixXd x(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t k = 0; k < rows[i].size(); ++k) x(i, k) = rows[i][k];
  return x;
}

}  // namespace

void write_dpm_csv(std::ostream& os, const Dpm& dpm,
                   const PaymentSchedule& schedule) {
  write_matrix(os, dpm.matrix(), schedule, "q_");
}

Dpm read_dpm_csv(std::istream& is) { return Dpm(read_matrix(is, nullptr)); }

void write_strong_csv(std::ostream& os, const StrongSolution& sol,
                      const PaymentSchedule& schedule) {
  os << "# N=" << sol.resolution << '\n' << "# as_of=" << sol.as_of << '\n';
  write_matrix(os, sol.p, schedule, "p_");
}

StrongSolution read_strong_csv(std::istream& is) {
  std::string meta;
  Eigen::MatrixXd p = read_matrix(is, &meta);
  StrongSolution sol{static_cast<int>(p.cols()) - 1, std::move(p), ""};
  std::stringstream ms(meta);
  std::string line;
  while (std::getline(ms, line)) {
    if (line.rfind("# N=", 0) == 0) {
      if (std::stoi(line.substr(4)) != sol.resolution)
        fail(ErrorCode::ShapeMismatch, "N header disagrees with column count");
    } else if (line.rfind("# as_of=", 0) == 0) {
      sol.as_of = line.substr(8);
    }
  }
  return sol;
}

}  // namespace cdofit
