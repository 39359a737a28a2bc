#pragma once

#include "bwshare/capacity_region.hpp"
#include "bwshare/common.hpp"

namespace bwshare {

struct PFSolution {
  AllocationVector allocation;   // feasible in the region
  Eigen::VectorXd link_prices;   // dual prices, >= 0 per link
  double kkt_residual = 0.0;
  long iterations = 0;
};

/// Solves max sum_r n_r log(rate_r) over the region, with rate_r pinned to 0
/// on every route with n_r == 0. Deterministic; the returned allocation is
/// feasible and the KKT residual is at most tol.
///
/// Throws std::invalid_argument for n == 0 ("zero state") and NumericalError
/// ("no convergence") if the residual does not reach tol within the
/// iteration cap.
PFSolution solve_pf(const CapacityRegion& region, const Eigen::VectorXd& n,
                    double tol = 1e-9);

/// sum over {r : n_r > 0} of n_r log(rate_r), with the 0 log 0 = 0 convention.
/// Throws if some n_r > 0 has rate_r <= 0.
double pf_objective(const Eigen::VectorXd& n, const AllocationVector& rates);

/// max over feasible rates of sum_r n_r log(rate_r / rho_r), evaluated as
/// pf_objective(n, optimum) - sum n_r log rho_r. Requires rho strictly inside
/// the region and rho_r > 0 wherever n_r > 0.
double rate_function(const CapacityRegion& region, const Eigen::VectorXd& n,
                     const Eigen::VectorXd& rho);

/// Relative KKT residual of an (allocation, prices) pair: the maximum of the
/// stationarity gap |n_r/rate_r - sum_l A_lr p_l| / (n_r/rate_r), the relative
/// capacity violation, and the complementary slackness gap
/// |p_l (C_l - load_l)| / (C_l max(p_l, 1)).
double pf_kkt_residual(const CapacityRegion& region, const Eigen::VectorXd& n,
                       const AllocationVector& rates,
                       const Eigen::VectorXd& prices);

/// Allocation policy backed by the solver, memoizing one solution per state.
/// The returned callable is safe to share across threads.
AllocationPolicy pf_policy(const CapacityRegion& region, double tol = 1e-9);

}  // namespace bwshare
