#include <stdexcept>
#include <string>

#include "doctest.h"
#include "gpal/external_oracle.hpp"
#include "gpal/sampling.hpp"

namespace {

using gpal::oracle::ExternalOracle;
using gpal::oracle::ExternalOracleConfig;

ExternalOracleConfig mock(const std::string& mode) {
  ExternalOracleConfig config;
  config.command = std::string(GPAL_MOCK_ORACLE) + " " + mode;
  config.timeout_seconds = 10.0;
  return config;
}

Eigen::VectorXd point1(double v) {
  Eigen::VectorXd x(1);
  x << v;
  return x;
}

}  // namespace

TEST_CASE("external oracle round-trips values through the line protocol") {
  ExternalOracle oracle(mock("echo0"));
  CHECK(oracle(point1(0.5)) == 0.5);
  // 17-significant-digit formatting survives the decimal round trip exactly.
  const double awkward = 0.12345678901234567;
  CHECK(oracle(point1(awkward)) == awkward);
  CHECK(oracle(point1(1e-17)) == 1e-17);
  CHECK(oracle(point1(0.0)) == 0.0);

  ExternalOracle sum(mock("sum"));
  Eigen::VectorXd x(3);
  x << 0.25, 0.5, 0.125;
  CHECK(sum(x) == 0.875);
}

TEST_CASE("external oracle serves repeated points from the cache") {
  ExternalOracle oracle(mock("counter"));
  const double first = oracle(point1(0.25));
  CHECK(first == 1.0);
  CHECK(oracle(point1(0.25)) == 1.0);  // cache hit, no second round trip
  CHECK(oracle.queries_sent() == 1);
  CHECK(oracle(point1(0.75)) == 2.0);
  CHECK(oracle.queries_sent() == 2);

  ExternalOracleConfig uncached = mock("counter");
  uncached.cache = false;
  ExternalOracle refetch(uncached);
  CHECK(refetch(point1(0.25)) == 1.0);
  CHECK(refetch(point1(0.25)) == 2.0);
  CHECK(refetch.queries_sent() == 2);
}

TEST_CASE("external oracle surfaces malformed responses with line content") {
  ExternalOracle oracle(mock("malformed"));
  CHECK_THROWS_WITH(oracle(point1(0.5)), doctest::Contains("not json at all"));
  // A poisoned adapter refuses further queries instead of hanging.
  CHECK_THROWS_WITH(oracle(point1(0.9)), doctest::Contains("already failed"));
}

TEST_CASE("external oracle surfaces protocol-level errors") {
  ExternalOracle oracle(mock("error"));
  CHECK_THROWS_WITH(oracle(point1(0.5)), doctest::Contains("boom"));
}

TEST_CASE("external oracle reports a dead process") {
  ExternalOracle oracle(mock("crash"));
  CHECK(oracle(point1(0.5)) == 0.5);  // first query is answered
  CHECK_THROWS_WITH(oracle(point1(0.75)), doctest::Contains("exited before responding"));
}

TEST_CASE("external oracle enforces the per-query timeout") {
  ExternalOracleConfig config = mock("slow");
  config.timeout_seconds = 0.3;
  ExternalOracle oracle(config);
  CHECK_THROWS_WITH(oracle(point1(0.5)), doctest::Contains("timed out"));
}

TEST_CASE("external oracle validates its configuration") {
  ExternalOracleConfig config;
  config.command = "";
  CHECK_THROWS_AS(ExternalOracle{config}, std::invalid_argument);
  config = mock("echo0");
  config.timeout_seconds = 0.0;
  CHECK_THROWS_AS(ExternalOracle{config}, std::invalid_argument);
}

TEST_CASE("active loop runs against an external oracle and aborts on its death") {
  const auto grid = gpal::sampling::regular_grid({17});
  gpal::loop::LoopConfig config;
  config.family = gpal::kernels::Family::SquaredExponential;
  config.t1 = 3;
  config.budget = 6;
  config.seed = 11;

  auto live = gpal::oracle::external_oracle(mock("echo0"));
  const auto result = gpal::loop::run(live, grid, config);
  CHECK(result.trace.terminal.status == "completed");
  for (const auto& record : result.trace.records) {
    CHECK(record.value == grid.points(record.grid_index, 0));
  }

  auto dying = gpal::oracle::external_oracle(mock("crash"));
  const auto aborted = gpal::loop::run(dying, grid, config);
  CHECK(aborted.trace.terminal.status == "aborted");
  CHECK(aborted.trace.terminal.message.find("external oracle") != std::string::npos);
  CHECK(aborted.trace.records.size() == 1);
}
