#pragma once

#include <optional>
#include <string>
#include <vector>

#include "bwshare/capacity_region.hpp"
#include "bwshare/common.hpp"
#include "bwshare/pf_solver.hpp"
#include "bwshare/potentials.hpp"
#include "bwshare/simulator.hpp"
#include "bwshare/stationary.hpp"
#include "bwshare/traffic.hpp"

namespace bwshare {

struct SimParams {
  double end_time = 0.0;
  double warmup = -1.0;
  std::uint64_t seed = 0;
  int replicas = 3;
  std::int64_t max_population = 100000;
  int workers = 1;
  bool literal_delta_rates = false;
};

struct InsensitivityVariant {
  std::string label;
  Eigen::VectorXd rho;
  EmpiricalDistribution merged;
  std::vector<std::int64_t> events_per_replica;
  double tv_to_oracle = 0.0;
};

struct InsensitivityReport {
  Eigen::VectorXd rho;
  std::vector<InsensitivityVariant> variants;
  Eigen::MatrixXd pairwise_tv;
  double max_pairwise_tv = 0.0;
  double max_oracle_tv = 0.0;
};

/// Simulates every traffic variant under the potential's allocation and
/// compares the empirical occupancy laws pairwise and against the analytic
/// stationary law. All variants must share the same intensity vector;
/// otherwise the experiment is rejected before any simulation.
InsensitivityReport insensitivity_experiment(
    const LogPotential& phi, const std::vector<TrafficSpec>& variants,
    int oracle_max_shell, double oracle_tail_tol, const SimParams& params);

struct ConvergenceRow {
  double c = 0.0;
  FlowState offset;
  FlowState state;  // floor(c * n) + offset
  AllocationVector allocation;
  double l1_gap = 0.0;
};

struct ConvergenceReport {
  AllocationVector pf_allocation;
  std::vector<ConvergenceRow> rows;
};

/// Evaluates the policy along floor(c n) + offset for each c and offset and
/// reports the L1 gap to the proportionally fair allocation at n.
ConvergenceReport limit_convergence_experiment(
    const CapacityRegion& region, const AllocationPolicy& policy,
    const Eigen::VectorXd& n, const std::vector<double>& c_list,
    const std::vector<FlowState>& offsets = {});

struct LdpRow {
  double c = 0.0;
  FlowState state;
  double log_pi_over_c = 0.0;
  double neg_rate = 0.0;
  double error = 0.0;
};

struct LdpReport {
  double rate = 0.0;
  double log_B = 0.0;
  double tail_bound = 0.0;
  std::vector<LdpRow> rows;
};

/// Compares (1/c) log pi(floor(c n)) against the negated rate function. The
/// stationary law is shell-summed exactly up to ceil(max c * |n|) + slack;
/// the potential's domain box must cover that simplex.
LdpReport ldp_experiment(const CapacityRegion& region, const LogPotential& phi,
                         const Eigen::VectorXd& rho, const Eigen::VectorXd& n,
                         const std::vector<double>& c_list,
                         int shell_slack = 40, double tail_tol = 1e-10);

struct OscillationRow {
  int k = 0;
  FlowState state;
  AllocationVector allocation;
  double gap_to_pf = 0.0;
  double gap_to_pf_over_alpha = 0.0;
};

struct OscillationReport {
  double alpha = 0.0;
  AllocationVector pf;
  // States c_k n with c_k = 2^k, so the population is a power of two.
  std::vector<OscillationRow> power_rows;
  // Ray states with population 2^k - 1 (floor plus a bounded correction).
  std::vector<OscillationRow> off_power_rows;
  // L1 distance between the final allocations of the two subsequences.
  double final_separation = 0.0;
  // (1 - 1/alpha) * sum of the fair shares on loaded routes: the predicted
  // lower bound on the power-of-two subsequence's gap to the fair point.
  double separation_lower_bound = 0.0;
};

/// Evaluates the bucket-transformed policy along the two subsequences of the
/// oscillation construction. Requires |n| to be a power of two and alpha > 1.
OscillationReport counterexample_oscillation(const CapacityRegion& region,
                                             const LogPotential& base,
                                             double alpha, const FlowState& n,
                                             const std::vector<int>& k_list);

struct BhatReport {
  double alpha = 0.0;
  double epsilon = 0.0;
  // Least N with alpha^(log2 m) < e^(eps m) for every m >= N.
  int crossover = 0;
  std::vector<double> log_shell_sums;   // transformed shells S_hat_m
  std::vector<double> bucket_log_sums;  // complete power-of-two buckets
  std::vector<double> bucket_ratios;
  double max_bucket_ratio_past_crossover = 0.0;
  bool geometric_decay = false;
  double log_B_hat = 0.0;  // truncated normalizing constant of the transform
};

/// Finiteness evidence for the transformed normalizing constant: reports the
/// pointwise crossover of alpha^(log2 |n|) against e^(eps |n|) and the decay
/// of the transformed shell sums. When epsilon is not given, half the
/// interior slack of rho is used; throws "no interior slack" when rho has
/// none.
BhatReport bhat_finiteness_check(const CapacityRegion& region,
                                 const LogPotential& base,
                                 const Eigen::VectorXd& rho, double alpha,
                                 std::optional<double> epsilon, int max_shell);

}  // namespace bwshare
