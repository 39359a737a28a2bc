#pragma once

#include <string>
#include <vector>

#include "bwshare/common.hpp"

namespace bwshare {

// Schedulable region {rates >= 0 : incidence * rates <= capacities}: a
// bounded polytope with nonempty interior when valid.
struct CapacityRegion {
  std::vector<std::string> route_ids;
  std::vector<std::string> link_ids;
  Eigen::MatrixXd incidence;   // links x routes, nonnegative coefficients
  Eigen::VectorXd capacities;  // per link, strictly positive

  Eigen::Index num_routes() const { return incidence.cols(); }
  Eigen::Index num_links() const { return incidence.rows(); }
};

struct ValidationReport {
  bool ok = true;
  std::vector<std::string> violations;
};

/// Checks the structural invariants: positive capacities (interior nonempty),
/// every route covered by some link (boundedness), matching dimensions.
ValidationReport validate(const CapacityRegion& region);

/// Throws std::invalid_argument listing every violation.
void require_valid(const CapacityRegion& region);

/// Feasibility with tolerance: rates >= -tol componentwise and
/// (A*rates) <= capacities + tol on every link.
bool contains(const CapacityRegion& region, const AllocationVector& rates,
              double tol);

/// Strict interior test on the link rows. Components of rho may be zero;
/// the comparison on each link is exact (no tolerance).
bool in_interior(const CapacityRegion& region, const Eigen::VectorXd& rho);

/// Largest eps such that rho * e^eps stays strictly inside the region;
/// <= 0 when rho is on or outside the boundary, +inf when A*rho == 0.
double interior_slack(const CapacityRegion& region, const Eigen::VectorXd& rho);

}  // namespace bwshare
