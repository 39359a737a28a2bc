#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "bwshare/potentials.hpp"
#include "bwshare/simulator.hpp"
#include "test_support.hpp"

using namespace bwshare;
using namespace bwshare::testing;

namespace {

TrafficSpec single_route_traffic(double nu, StageDistribution stages,
                                 double delta) {
  TrafficSpec traffic;
  traffic.stage_mean = delta;
  traffic.routes.push_back({"r0", nu, stages});
  return traffic;
}

AllocationPolicy full_service_policy() {
  return [](const FlowState& n) {
    return AllocationVector::Ones(n.size());
  };
}

}  // namespace

TEST_CASE("traffic spec derived quantities") {
  TrafficSpec traffic;
  traffic.stage_mean = 0.25;
  traffic.routes.push_back({"a", 0.5, StageDistribution::two_point(1, 9, 0.625)});
  traffic.routes.push_back({"b", 2.0, StageDistribution::geometric(0.5)});
  require_valid(traffic);

  CHECK(traffic.routes[0].stages.mean() == doctest::Approx(4.0));
  CHECK(traffic.routes[1].stages.mean() == doctest::Approx(2.0));
  const Eigen::VectorXd rho = traffic.intensities();
  CHECK(rho[0] == doctest::Approx(0.5 * 0.25 * 4.0));
  CHECK(rho[1] == doctest::Approx(2.0 * 0.25 * 2.0));
  const Eigen::VectorXd mu = traffic.service_rates();
  CHECK(mu[0] == doctest::Approx(1.0));

  CHECK_THROWS_AS(StageDistribution::deterministic(0), std::invalid_argument);
  CHECK_THROWS_AS(StageDistribution::geometric(0.0), std::invalid_argument);
  CHECK_THROWS_AS(StageDistribution::two_point(1, 2, 1.5),
                  std::invalid_argument);

  TrafficSpec bad;
  bad.stage_mean = -1;
  bad.routes.push_back({"x", 1.0, StageDistribution::deterministic(1)});
  CHECK_THROWS_AS(require_valid(bad), std::invalid_argument);
}

TEST_CASE("stage distribution sampling matches the law") {
  std::mt19937_64 rng(99);
  const StageDistribution geo = StageDistribution::geometric(0.5);
  double sum = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) sum += static_cast<double>(geo.sample(rng));
  CHECK(sum / draws == doctest::Approx(2.0).epsilon(0.02));

  const StageDistribution tp = StageDistribution::two_point(1, 9, 0.875);
  CHECK(tp.mean() == doctest::Approx(2.0));
  long ones = 0;
  for (int i = 0; i < draws; ++i)
    if (tp.sample(rng) == 1) ++ones;
  CHECK(static_cast<double>(ones) / draws == doctest::Approx(0.875).epsilon(0.01));

  double mass = 0.0;
  for (const auto& [stage, prob] : geo.pmf(1e-12)) {
    CHECK(prob == doctest::Approx(0.5 * std::pow(0.5, stage - 1)));
    mass += prob;
  }
  CHECK(mass == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("transition enumeration") {
  const TrafficSpec two_routes = [] {
    TrafficSpec t;
    t.stage_mean = 1.0;
    t.routes.push_back({"r0", 0.3, StageDistribution::deterministic(1)});
    t.routes.push_back({"r1", 0.7, StageDistribution::deterministic(2)});
    return t;
  }();
  const AllocationPolicy policy = full_service_policy();

  SUBCASE("empty state has only arrivals") {
    DetailedState state(2);
    const auto transitions = transition_rates(state, policy, two_routes);
    double total = 0.0;
    for (const auto& t : transitions) {
      CHECK(t.kind == Transition::Kind::arrival);
      total += t.rate;
    }
    CHECK(total == doctest::Approx(1.0));
  }

  SUBCASE("two last-stage documents depart at the full shared rate") {
    const TrafficSpec one = single_route_traffic(
        0.5, StageDistribution::deterministic(1), 1.0);
    DetailedState state(1);
    state.add_document(0, 1);
    state.add_document(0, 1);
    const auto transitions = transition_rates(state, policy, one);
    int departures = 0;
    for (const auto& t : transitions) {
      if (t.kind == Transition::Kind::departure) {
        ++departures;
        CHECK(t.rate == doctest::Approx(1.0));  // 1 * (2/2) / 1
        const DetailedState next = t.apply(state);
        CHECK(next.population() == 1);
      }
    }
    CHECK(departures == 1);
  }

  SUBCASE("a stage-2 document advances instead of departing") {
    const TrafficSpec one = single_route_traffic(
        0.5, StageDistribution::deterministic(2), 1.0);
    DetailedState state(1);
    state.add_document(0, 2);
    const auto transitions = transition_rates(state, policy, one);
    for (const auto& t : transitions) {
      CHECK(t.kind != Transition::Kind::departure);
      if (t.kind == Transition::Kind::stage_advance) {
        const DetailedState next = t.apply(state);
        CHECK(next.population() == 1);
        CHECK(next.count(0, 1) == 1);
        CHECK(next.count(0, 2) == 0);
      }
    }
  }

  SUBCASE("literal rate convention multiplies by the stage mean") {
    const TrafficSpec one = single_route_traffic(
        0.5, StageDistribution::deterministic(1), 0.5);
    DetailedState state(1);
    state.add_document(0, 1);
    const auto standard = transition_rates(state, policy, one, false);
    const auto literal = transition_rates(state, policy, one, true);
    for (std::size_t i = 0; i < standard.size(); ++i) {
      if (standard[i].kind == Transition::Kind::departure) {
        CHECK(standard[i].rate == doctest::Approx(2.0));
        CHECK(literal[i].rate == doctest::Approx(0.5));
      }
    }
  }
}

TEST_CASE("fixed seed reproduces the trajectory bit for bit") {
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 256);
  const AllocationPolicy policy = potential_policy(phi);
  const TrafficSpec traffic = single_route_traffic(
      0.5, StageDistribution::deterministic(1), 1.0);

  SimOptions options;
  options.end_time = 20000;
  options.seed = 1234;
  const EmpiricalDistribution a = simulate(policy, traffic, options);
  const EmpiricalDistribution b = simulate(policy, traffic, options);
  CHECK(a.total_events == b.total_events);
  CHECK(a.occupancy == b.occupancy);

  options.seed = 1235;
  const EmpiricalDistribution c = simulate(policy, traffic, options);
  CHECK(a.occupancy != c.occupancy);
}

TEST_CASE("empirical occupancy approaches the geometric law") {
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 256);
  const TrafficSpec traffic = single_route_traffic(
      0.5, StageDistribution::deterministic(1), 1.0);
  const StationaryTable table =
      stationary_pi(phi, traffic.intensities(), 256);

  SimOptions options;
  options.end_time = 300000;
  options.seed = 31;
  const EmpiricalDistribution emp =
      simulate(potential_policy(phi), traffic, options);
  CHECK(emp.events > 100000);
  CHECK(tv_distance(emp, table) < 0.03);
}

TEST_CASE("two-route sharing matches the product-form law") {
  const CapacityRegion region = single_link(1.0, 2);
  const LogPotential phi = LogPotential::balanced_fairness(region, 256);
  TrafficSpec traffic;
  traffic.stage_mean = 1.0;
  traffic.routes.push_back({"r0", 0.3, StageDistribution::deterministic(1)});
  traffic.routes.push_back({"r1", 0.3, StageDistribution::geometric(0.5)});
  // rho = (0.3, 0.6): the geometric route offers twice the work
  const StationaryTable table =
      stationary_pi(phi, traffic.intensities(), 256);

  SimOptions options;
  options.end_time = 400000;
  options.seed = 12;
  const EmpiricalDistribution emp =
      simulate(potential_policy(phi), traffic, options);
  CHECK(tv_distance(emp, table) < 0.04);
}

TEST_CASE("insensitivity to the stage structure at fixed intensity") {
  // doubling the stage count while halving the stage mean keeps rho at 0.5
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 256);
  const AllocationPolicy policy = potential_policy(phi);
  const TrafficSpec one_stage = single_route_traffic(
      0.5, StageDistribution::deterministic(1), 1.0);
  const TrafficSpec two_stages = single_route_traffic(
      0.5, StageDistribution::deterministic(2), 0.5);
  REQUIRE(one_stage.intensities() == two_stages.intensities());

  SimOptions options;
  options.end_time = 300000;
  options.seed = 77;
  const EmpiricalDistribution a = simulate(policy, one_stage, options);
  options.seed = 78;
  const EmpiricalDistribution b = simulate(policy, two_stages, options);
  CHECK(tv_distance(a, b) < 0.03);
}

TEST_CASE("arrivals form a Poisson stream") {
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 256);
  const TrafficSpec traffic = single_route_traffic(
      0.5, StageDistribution::deterministic(1), 1.0);

  SimOptions options;
  options.end_time = 10000;
  options.warmup = 0.0;
  options.seed = 5;
  options.record_arrival_log = true;
  const EmpiricalDistribution emp =
      simulate(potential_policy(phi), traffic, options);

  // counts over disjoint windows of length 20: mean and variance near 10
  const double window = 20.0;
  const int windows = 500;
  std::vector<double> counts(windows, 0.0);
  for (const auto& [time, route] : emp.arrival_log) {
    const int w = static_cast<int>(time / window);
    if (w < windows) counts[w] += 1.0;
  }
  double mean = 0.0;
  for (double c : counts) mean += c;
  mean /= windows;
  double var = 0.0;
  for (double c : counts) var += (c - mean) * (c - mean);
  var /= windows - 1;

  const double expected = 0.5 * window;
  CHECK(std::abs(mean - expected) < 3.0 * std::sqrt(expected / windows));
  CHECK(std::abs(var - expected) <
        3.0 * expected * std::sqrt(2.0 / (windows - 1)));
}

TEST_CASE("instability trips the population guard") {
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 600);
  const TrafficSpec overload = single_route_traffic(
      1.2, StageDistribution::deterministic(1), 1.0);

  SimOptions options;
  options.end_time = 1000000;
  options.seed = 9;
  options.max_population = 500;
  CHECK_THROWS_WITH_AS(simulate(potential_policy(phi), overload, options),
                       doctest::Contains("state explosion"), NumericalError);

  const TrafficSpec stable = single_route_traffic(
      0.9, StageDistribution::deterministic(1), 1.0);
  options.end_time = 50000;
  const EmpiricalDistribution emp =
      simulate(potential_policy(phi), stable, options);
  CHECK(emp.events > 10000);
}

TEST_CASE("policy domain errors are reported as policy undefined") {
  const CapacityRegion region = single_link(1.0, 1);
  const LogPotential phi = LogPotential::balanced_fairness(region, 3);
  const TrafficSpec overload = single_route_traffic(
      1.5, StageDistribution::deterministic(1), 1.0);
  SimOptions options;
  options.end_time = 100000;
  options.seed = 2;
  CHECK_THROWS_WITH_AS(simulate(potential_policy(phi), overload, options),
                       doctest::Contains("policy undefined"),
                       OutsideDomainError);
}

TEST_CASE("total variation distance") {
  using Map = std::map<FlowState, double, FlowStateLess>;
  Map p, q;
  FlowState s0 = FlowState::Zero(1);
  FlowState s1 = FlowState::Constant(1, 1);
  FlowState s2 = FlowState::Constant(1, 2);

  p[s0] = 0.6;
  p[s1] = 0.4;
  q = p;
  CHECK(tv_distance(p, q) == 0.0);

  q[s0] = 0.5;
  q[s1] = 0.5;
  CHECK(tv_distance(p, q) == doctest::Approx(0.1));

  Map disjoint;
  disjoint[s2] = 1.0;
  CHECK(tv_distance(p, disjoint) == doctest::Approx(1.0));
}

TEST_CASE("replica merge is a time-weighted average") {
  EmpiricalDistribution a, b;
  FlowState s = FlowState::Zero(1);
  a.occupancy[s] = 1.0;
  a.observed_time = 100.0;
  a.events = 10;
  b.occupancy[s] = 0.5;
  b.observed_time = 300.0;
  b.events = 20;
  const EmpiricalDistribution merged = merge_replicas({a, b});
  CHECK(merged.occupancy.at(s) == doctest::Approx((100.0 + 150.0) / 400.0));
  CHECK(merged.events == 30);
}
