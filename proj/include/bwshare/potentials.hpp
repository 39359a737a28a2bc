#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "bwshare/capacity_region.hpp"
#include "bwshare/common.hpp"

namespace bwshare {

/// A potential function evaluated in log domain. log_phi(0) = 0, log_phi is
/// -inf outside the nonnegative orthant, and evaluation beyond the
/// precomputed domain box throws OutsideDomainError. Instances are immutable
/// after construction and cheap to copy (the value grid is shared).
class LogPotential {
 public:
  enum class Kind { balanced_fairness, counterexample, table };

  /// Balanced fairness on a polytope region: the grid over [0, cap] is
  /// filled by the saturation recursion
  ///   phi(n) = max_l (1/C_l) sum_r A_lr phi(n - e_r),
  /// computed with log-sum-exp so the values stay representable when phi
  /// spans hundreds of orders of magnitude.
  static LogPotential balanced_fairness(const CapacityRegion& region,
                                        const FlowState& domain_cap);
  static LogPotential balanced_fairness(const CapacityRegion& region,
                                        int uniform_cap);

  /// Bucket transform: multiplies the base potential by alpha^k on the shell
  /// bucket 2^k <= |n| < 2^(k+1), leaving phi(0) = 1. Requires alpha > 1.
  static LogPotential counterexample(LogPotential base, double alpha);

  /// User-supplied table of log phi values over [0, cap], row-major with the
  /// last route index fastest. The entry at n = 0 must be 0.
  static LogPotential from_table(const FlowState& domain_cap,
                                 std::vector<double> log_values);

  double log_phi(const FlowState& n) const;

  /// Insensitive allocation rate_r(n) = phi(n - e_r) / phi(n); zero on empty
  /// routes. Throws std::invalid_argument at n = 0.
  AllocationVector allocation(const FlowState& n) const;

  Kind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  Eigen::Index num_routes() const { return grid_->cap.size(); }
  const FlowState& domain_cap() const { return grid_->cap; }
  /// The region the potential was built from; null for table potentials.
  const CapacityRegion* region() const;

 private:
  struct Grid {
    FlowState cap;
    std::vector<std::int64_t> strides;
    std::vector<double> values;
    std::optional<CapacityRegion> region;
  };

  LogPotential(std::shared_ptr<const Grid> grid, Kind kind, double alpha)
      : grid_(std::move(grid)), kind_(kind), alpha_(alpha) {}

  std::int64_t index_of(const FlowState& n) const;
  static std::shared_ptr<Grid> make_grid(const FlowState& cap);

  std::shared_ptr<const Grid> grid_;
  Kind kind_;
  double alpha_ = 0.0;  // counterexample multiplier; unused otherwise
};

/// k with 2^k <= |n| < 2^(k+1), by integer comparison. Requires |n| >= 1.
int bucket_index(std::int64_t pop);
int bucket_index(const FlowState& n);

/// One-shot balanced fairness evaluation (builds the pyramid below n).
double balanced_fairness_log_phi(const CapacityRegion& region,
                                 const FlowState& n);

/// log of alpha^k phi(n) with k the bucket index of |n|; 0 at n = 0.
double counterexample_log_phi(const LogPotential& base, double alpha,
                              const FlowState& n);

AllocationVector allocation_from_potential(const LogPotential& phi,
                                           const FlowState& n);

/// Allocation policy view of a potential; shares the underlying grid.
AllocationPolicy potential_policy(const LogPotential& phi);

}  // namespace bwshare
