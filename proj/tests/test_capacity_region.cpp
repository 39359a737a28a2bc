#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "bwshare/capacity_region.hpp"
#include "test_support.hpp"

using namespace bwshare;
using namespace bwshare::testing;

TEST_CASE("minimal well-formed region validates") {
  const CapacityRegion region = single_link(1.0, 1);
  const ValidationReport report = validate(region);
  CHECK(report.ok);
  CHECK(report.violations.empty());
}

TEST_CASE("route covered by no link is reported unbounded") {
  CapacityRegion region = single_link(1.0, 2);
  region.incidence(0, 1) = 0.0;  // r1 crosses nothing
  const ValidationReport report = validate(region);
  CHECK_FALSE(report.ok);
  REQUIRE(report.violations.size() == 1);
  CHECK(report.violations[0].find("unbounded route r1") != std::string::npos);
}

TEST_CASE("zero capacity is reported degenerate") {
  CapacityRegion region = single_link(0.0, 1);
  const ValidationReport report = validate(region);
  CHECK_FALSE(report.ok);
  CHECK(report.violations[0].find("degenerate link l0") != std::string::npos);
}

TEST_CASE("dimension mismatches are caught") {
  CapacityRegion region = single_link(1.0, 2);
  region.capacities.resize(2);
  CHECK_FALSE(validate(region).ok);
  CHECK_THROWS_AS(require_valid(region), std::invalid_argument);
}

TEST_CASE("contains basics") {
  const CapacityRegion region = single_link(1.0, 1);
  CHECK(contains(region, Eigen::VectorXd::Zero(1), 0.0));
  CHECK(contains(region, Eigen::VectorXd::Ones(1), 0.0));  // closed boundary
  Eigen::VectorXd over(1);
  over << 1.5;
  CHECK_FALSE(contains(region, over, 1e-9));
  CHECK_THROWS_AS(contains(region, Eigen::VectorXd::Zero(2), 0.0),
                  std::invalid_argument);
}

TEST_CASE("interior membership") {
  const CapacityRegion region = single_link(1.0, 1);
  Eigen::VectorXd rho(1);
  rho << 0.5;
  CHECK(in_interior(region, rho));
  rho << 1.0;
  CHECK_FALSE(in_interior(region, rho));  // boundary excluded

  // Line network at rho = (0.4, 0.4, 0.4): both link loads are 0.8 < 1.
  const CapacityRegion line = line_network();
  CHECK(in_interior(line, Eigen::VectorXd::Constant(3, 0.4)));
  CHECK_FALSE(in_interior(line, Eigen::VectorXd::Constant(3, 0.5)));
  // zero components are allowed inside
  Eigen::VectorXd partial(3);
  partial << 0.0, 0.9, 0.0;
  CHECK(in_interior(line, partial));
}

TEST_CASE("interior_slack measures the largest feasible exponential shift") {
  const CapacityRegion region = single_link(1.0, 1);
  Eigen::VectorXd rho(1);
  rho << 0.5;
  CHECK(interior_slack(region, rho) == doctest::Approx(std::log(2.0)));
  rho << 1.0;
  CHECK(interior_slack(region, rho) == doctest::Approx(0.0));
  rho << 1.5;
  CHECK(interior_slack(region, rho) < 0.0);
}

TEST_CASE("region properties on random instances") {
  std::mt19937_64 rng(20240811);
  std::uniform_real_distribution<double> unit(0.1, 2.0);
  std::uniform_int_distribution<int> coin(0, 1);

  for (int trial = 0; trial < 50; ++trial) {
    const int links = 1 + static_cast<int>(rng() % 3);
    const int routes = 1 + static_cast<int>(rng() % 3);
    CapacityRegion region;
    region.incidence = Eigen::MatrixXd::Zero(links, routes);
    region.capacities.resize(links);
    for (int l = 0; l < links; ++l) {
      region.capacities[l] = unit(rng);
      region.link_ids.push_back("l" + std::to_string(l));
      for (int r = 0; r < routes; ++r)
        region.incidence(l, r) = coin(rng);
    }
    for (int r = 0; r < routes; ++r) {
      region.route_ids.push_back("r" + std::to_string(r));
      region.incidence(rng() % links, r) = 1.0;  // keep every route covered
    }
    require_valid(region);

    // 0 is always schedulable
    CHECK(contains(region, Eigen::VectorXd::Zero(routes), 0.0));

    // interior points are contained
    Eigen::VectorXd rho(routes);
    for (int r = 0; r < routes; ++r) rho[r] = 0.05 * unit(rng);
    if (in_interior(region, rho)) CHECK(contains(region, rho, 0.0));

    // convexity witness on sampled feasible pairs
    Eigen::VectorXd a(routes), b(routes);
    for (int r = 0; r < routes; ++r) {
      a[r] = 0.3 * unit(rng);
      b[r] = 0.3 * unit(rng);
    }
    if (contains(region, a, 0.0) && contains(region, b, 0.0)) {
      for (double t : {0.0, 0.25, 0.5, 0.75, 1.0}) {
        CHECK(contains(region, t * a + (1.0 - t) * b, 1e-12));
      }
    }
  }
}
