#include <sstream>

#include "doctest.h"
#include "fixtures.hpp"

#include "cdofit/errors.hpp"
#include "cdofit/snapshot_io.hpp"

using namespace cdofit;

TEST_SUITE("snapshot_io") {

TEST_CASE("bundled snapshot matches the in-code fixture") {
  const auto a = load_snapshot(CDOFIT_DATA_DIR "/itraxx_europe_s42_2025-03-28.json");
  const auto b = testing::itraxx_snapshot();
  CHECK(a.as_of == "2025-03-28");
  CHECK(a.index_spread == doctest::Approx(b.index_spread));
  CHECK(a.marginal.hazard() == doctest::Approx(b.marginal.hazard()).epsilon(1e-14));
  REQUIRE(a.tranches.size() == 4);
  for (int l = 0; l < 4; ++l) {
    CHECK(a.tranches[l].attach == b.tranches[l].attach);
    CHECK(a.quotes[l].upfront == doctest::Approx(b.quotes[l].upfront));
    CHECK(a.quotes[l].running_spread == doctest::Approx(b.quotes[l].running_spread));
  }
}

TEST_CASE("json round trip") {
  auto s = testing::itraxx_snapshot();
  s.bid = s.quotes;
  s.ask = s.quotes;
  const auto back = parse_snapshot(snapshot_to_json(s));
  CHECK(back.periods() == 20);
  CHECK(back.bid.has_value());
  CHECK(back.quotes[3].running_spread == doctest::Approx(27.44e-4));
  CHECK(snapshot_to_json(back) == snapshot_to_json(s));
}

TEST_CASE("malformed input") {
  auto code = [](const std::string& text) {
    try {
      parse_snapshot(text);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidInput;
  };
  CHECK(code("{not json") == ErrorCode::MalformedSnapshot);
  CHECK(code("[]") == ErrorCode::MalformedSnapshot);
  CHECK(code(R"({"index_spread_bps": 58})") == ErrorCode::MalformedSnapshot);
}

TEST_CASE("dpm csv round trip") {
  const auto s = PaymentSchedule::regular(1.0, 2);
  Eigen::MatrixXd q(2, 3);
  q << 0.7, 0.2, 0.1, 0.5, 0.3, 0.2;
  std::stringstream io;
  write_dpm_csv(io, Dpm(q), s);
  CHECK(io.str().rfind("time,q_0,q_1,q_2\n0.5,", 0) == 0);
  const Dpm back = read_dpm_csv(io);
  CHECK(back.matrix() == q);
}

TEST_CASE("strong csv carries its header") {
  const auto s = PaymentSchedule::regular(1.0, 2);
  Eigen::MatrixXd p(2, 3);
  p << 0.6, 0.3, 0.1, 0.4, 0.4, 0.2;
  std::stringstream io;
  write_strong_csv(io, {2, p, "2025-03-28"}, s);
  const auto back = read_strong_csv(io);
  CHECK(back.resolution == 2);
  CHECK(back.as_of == "2025-03-28");
  CHECK(back.p == p);
}

}  // TEST_SUITE
