#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "bwshare/pf_solver.hpp"
#include "test_support.hpp"

using namespace bwshare;
using namespace bwshare::testing;

TEST_CASE("single link splits capacity in proportion to demand") {
  const CapacityRegion region = single_link(1.0, 2);
  Eigen::VectorXd n(2);
  n << 2, 1;

  // grid oracle confirms the closed form before freezing it
  const AllocationVector oracle = pf_grid_search(region, n, 1e-3);
  CHECK(oracle[0] == doctest::Approx(2.0 / 3.0).epsilon(5e-3));
  CHECK(oracle[1] == doctest::Approx(1.0 / 3.0).epsilon(5e-3));

  const PFSolution sol = solve_pf(region, n);
  CHECK(std::abs(sol.allocation[0] - 2.0 / 3.0) < 1e-9);
  CHECK(std::abs(sol.allocation[1] - 1.0 / 3.0) < 1e-9);
  CHECK(sol.kkt_residual <= 1e-9);
}

TEST_CASE("empty routes are pinned to zero") {
  const CapacityRegion region = single_link(1.0, 2);
  Eigen::VectorXd n(2);
  n << 1, 0;
  const PFSolution sol = solve_pf(region, n);
  CHECK(sol.allocation[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.allocation[1] == 0.0);  // exactly zero by construction
}

TEST_CASE("line network at n=(1,1,1)") {
  const CapacityRegion region = line_network();
  const Eigen::VectorXd n = Eigen::VectorXd::Ones(3);
  const PFSolution sol = solve_pf(region, n);

  // hand KKT: 1/rate_0 = 2/(1 - rate_0) gives rate_0 = 1/3
  CHECK(sol.allocation[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-7));
  CHECK(sol.allocation[1] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));
  CHECK(sol.allocation[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-7));

  // solver beats every grid point, up to its own tolerance
  const AllocationVector gridded = pf_grid_search(region, n, 1e-2);
  CHECK(pf_objective(n, sol.allocation) >=
        pf_objective(n, gridded) - 1e-8 * n.sum());
}

TEST_CASE("objective evaluation and conventions") {
  Eigen::VectorXd n(2), rates(2);
  n << 1, 1;
  rates << 0.5, 0.5;
  CHECK(pf_objective(n, rates) == doctest::Approx(-1.386294).epsilon(1e-6));

  n << 0, 3;
  rates << 0, 1;
  CHECK(pf_objective(n, rates) == 0.0);  // 0 log 0 = 0

  n << 2, 1;
  rates << 2.0 / 3.0, 1.0 / 3.0;
  CHECK(pf_objective(n, rates) == doctest::Approx(-1.909543).epsilon(1e-6));

  n << 1, 1;
  rates << 0.0, 0.5;
  CHECK_THROWS_WITH_AS(pf_objective(n, rates),
                       doctest::Contains("log of zero"),
                       std::invalid_argument);
}

TEST_CASE("rate function values") {
  const CapacityRegion one = single_link(1.0, 1);
  Eigen::VectorXd n1(1), rho1(1);
  n1 << 1;
  rho1 << 0.5;
  CHECK(rate_function(one, n1, rho1) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-9));

  const CapacityRegion two = single_link(1.0, 2);
  Eigen::VectorXd n2(2), rho2(2);
  n2 << 2, 1;
  rho2 << 2.0 / 3.0 * 0.999, 1.0 / 3.0 * 0.999;  // interior copy of the optimum
  const double expected = 3.0 * std::log(1.0 / 0.999);
  CHECK(rate_function(two, n2, rho2) == doctest::Approx(expected).epsilon(1e-6));

  const CapacityRegion line = line_network();
  Eigen::VectorXd n3 = Eigen::VectorXd::Ones(3);
  Eigen::VectorXd rho3 = Eigen::VectorXd::Constant(3, 0.2);
  const double line_rate =
      std::log((1.0 / 3.0) / 0.2) + 2.0 * std::log((2.0 / 3.0) / 0.2);
  CHECK(rate_function(line, n3, rho3) ==
        doctest::Approx(line_rate).epsilon(1e-6));
  CHECK(line_rate == doctest::Approx(2.918771).epsilon(1e-6));

  Eigen::VectorXd boundary = Eigen::VectorXd::Constant(3, 0.5);
  CHECK_THROWS_WITH_AS(rate_function(line, n3, boundary),
                       doctest::Contains("rho not interior"),
                       std::invalid_argument);
}

TEST_CASE("error paths") {
  const CapacityRegion region = single_link(1.0, 2);
  CHECK_THROWS_WITH_AS(solve_pf(region, Eigen::VectorXd::Zero(2)),
                       doctest::Contains("zero state"),
                       std::invalid_argument);
  CHECK_THROWS_AS(solve_pf(region, Eigen::VectorXd::Ones(3)),
                  std::invalid_argument);
  CHECK_THROWS_AS(solve_pf(region, Eigen::VectorXd::Ones(2), 0.0),
                  std::invalid_argument);
}

TEST_CASE("scale-separated disjoint routes converge") {
  // one route demands 16 orders of magnitude more than the other and they
  // share nothing; the optimum saturates each private bottleneck
  CapacityRegion region;
  region.incidence.resize(3, 2);
  region.incidence << 1, 0,
                      1, 0,
                      0, 1;
  region.capacities.resize(3);
  region.capacities << 1654.365, 8283.284, 5736.152;
  region.link_ids = {"l0", "l1", "l2"};
  region.route_ids = {"r0", "r1"};
  Eigen::VectorXd n(2);
  n << 1e8, 1e-8;
  const PFSolution sol = solve_pf(region, n);
  CHECK(sol.allocation[0] == doctest::Approx(1654.365).epsilon(1e-8));
  CHECK(sol.allocation[1] == doctest::Approx(5736.152).epsilon(1e-8));
  CHECK(sol.kkt_residual <= 1e-9);
}

TEST_CASE("an instance with every link active converges tightly") {
  CapacityRegion region;
  region.incidence.resize(3, 5);
  region.incidence << 0, 1, 0, 1, 1,
                      1, 1, 1, 0, 0,
                      1, 0, 1, 1, 1;
  region.capacities.resize(3);
  region.capacities << 908.2536, 609.5004, 993.8427;
  region.link_ids = {"l0", "l1", "l2"};
  region.route_ids = {"r0", "r1", "r2", "r3", "r4"};
  Eigen::VectorXd n(5);
  n << 30.6699, 29.8312, 13.5747, 47.5497, 21.4352;
  const PFSolution sol = solve_pf(region, n, 1e-12);
  CHECK(sol.kkt_residual <= 1e-12);
  CHECK(contains(region, sol.allocation, 1e-9));
  CHECK((sol.link_prices.array() > 0.0).all());  // all links priced
}

TEST_CASE("solver properties on random networks") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> demand(0.0, 5.0);

  const std::vector<CapacityRegion> regions = {
      single_link(1.0, 2), single_link(2.5, 3), line_network()};
  for (const auto& region : regions) {
    for (int trial = 0; trial < 10; ++trial) {
      Eigen::VectorXd n(region.num_routes());
      for (Eigen::Index r = 0; r < n.size(); ++r) n[r] = demand(rng);
      if (!(n.array() > 0).any()) n[0] = 1.0;

      const PFSolution sol = solve_pf(region, n);
      CHECK(contains(region, sol.allocation, 1e-9));
      CHECK(sol.kkt_residual <= 1e-9);
      // the reported residual is the recomputable one
      CHECK(pf_kkt_residual(region, n, sol.allocation, sol.link_prices) ==
            doctest::Approx(sol.kkt_residual).epsilon(1e-12));

      // scale invariance of the maximizer
      for (double scale : {0.5, 3.0}) {
        const PFSolution scaled = solve_pf(region, scale * n);
        CHECK((scaled.allocation - sol.allocation).cwiseAbs().maxCoeff() <
              1e-7);
      }

      // determinism
      const PFSolution again = solve_pf(region, n);
      CHECK(again.allocation == sol.allocation);
      CHECK(again.iterations == sol.iterations);

      // optimality against a coarse grid
      const AllocationVector gridded = pf_grid_search(region, n, 5e-2);
      CHECK(pf_objective(n, sol.allocation) >=
            pf_objective(n, gridded) - 1e-8 * n.sum());
    }
  }
}
