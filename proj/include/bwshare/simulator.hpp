#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "bwshare/common.hpp"
#include "bwshare/stationary.hpp"
#include "bwshare/traffic.hpp"

namespace bwshare {

/// Stage-resolved occupancy: counts[r][s-1] documents on route r with s
/// stages remaining.
class DetailedState {
 public:
  explicit DetailedState(Eigen::Index routes);

  const FlowState& route_counts() const { return totals_; }
  std::int64_t population() const { return population_; }
  long count(Eigen::Index route, long stage) const;
  long max_stage(Eigen::Index route) const;

  void add_document(Eigen::Index route, long stages);
  /// Stage 1 completes and the document departs; stage s >= 2 moves to s-1.
  void complete_stage(Eigen::Index route, long stage);

 private:
  std::vector<std::vector<long>> counts_;
  FlowState totals_;
  std::int64_t population_ = 0;
};

struct SimOptions {
  double end_time = 0.0;
  double warmup = -1.0;  // negative: default to 20% of end_time
  std::uint64_t seed = 0;
  std::int64_t max_population = 100000;  // state-explosion guard on |n|
  // Literal reading of the service rates with the stage mean multiplying the
  // allocation instead of dividing it; kept for comparison.
  bool literal_delta_rates = false;
  bool record_arrival_log = false;
};

/// Time-weighted route-level occupancy observed after warmup.
struct EmpiricalDistribution {
  std::map<FlowState, double, FlowStateLess> occupancy;  // normalized
  double observed_time = 0.0;
  std::int64_t events = 0;        // jumps after warmup
  std::int64_t total_events = 0;  // jumps including warmup
  std::vector<std::pair<double, int>> arrival_log;  // (time, route) if enabled
};

struct Transition {
  enum class Kind { arrival, departure, stage_advance };
  Kind kind;
  Eigen::Index route = 0;
  long stage = 0;  // arrival: initial stage count; otherwise the stage acted on
  double rate = 0.0;

  DetailedState apply(const DetailedState& state) const;
};

/// Enumerates the nonzero transitions out of a state: arrivals at rate
/// nu_r P(L_r = s) and stage completions at rate
/// rate_r(n) (n_rs / n_r) / stage_mean. Geometric stage laws are enumerated
/// up to a 1e-12 tail. The literal-rate option multiplies by the stage mean
/// instead.
std::vector<Transition> transition_rates(const DetailedState& state,
                                         const AllocationPolicy& policy,
                                         const TrafficSpec& traffic,
                                         bool literal_delta_rates = false);

/// Event-driven jump-chain simulation from the empty state. Deterministic
/// given the seed. Throws NumericalError "state explosion" when |n| exceeds
/// the guard, and OutsideDomainError "policy undefined" when the policy
/// cannot be evaluated at a visited state.
EmpiricalDistribution simulate(const AllocationPolicy& policy,
                               const TrafficSpec& traffic,
                               const SimOptions& options);

/// Total variation distance, half the L1 gap over the union support.
double tv_distance(const std::map<FlowState, double, FlowStateLess>& p,
                   const std::map<FlowState, double, FlowStateLess>& q);
double tv_distance(const EmpiricalDistribution& p,
                   const EmpiricalDistribution& q);
double tv_distance(const EmpiricalDistribution& p, const StationaryTable& q);

/// Weighted-by-time merge of replica runs; inputs are consumed in order.
EmpiricalDistribution merge_replicas(
    const std::vector<EmpiricalDistribution>& replicas);

}  // namespace bwshare
