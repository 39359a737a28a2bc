#pragma once

#include <vector>

#include "bwshare/common.hpp"
#include "bwshare/potentials.hpp"
#include "bwshare/traffic.hpp"

namespace bwshare {

struct NormalizingConstant {
  double log_B = 0.0;       // log of the truncated sum over |n| <= max_shell
  double tail_bound = 0.0;  // upper estimate of the omitted relative mass
  double decay_ratio = 0.0; // largest shell ratio among the last five
  int shells = 0;
};

/// log sum over {|n| <= max_shell} of phi(n) prod_r rho_r^n_r, by stable
/// log-sum-exp over simplex shells. The tail is bounded geometrically from
/// the last five shell ratios. Throws NumericalError "divergence suspected"
/// when the shell sums are not decaying at the box edge (rho outside the
/// stability region, or the box too small) and "truncation insufficient"
/// when the tail bound exceeds tail_tol. Requires the potential's domain box
/// to cover the simplex (cap >= max_shell on every route).
NormalizingConstant log_normalizing_constant(const LogPotential& phi,
                                             const Eigen::VectorXd& rho,
                                             int max_shell,
                                             double tail_tol = 1e-10);

/// Per-shell log sums log S_m, m = 0..max_shell, without tail policing.
std::vector<double> log_shell_sums(const LogPotential& phi,
                                   const Eigen::VectorXd& rho, int max_shell);

/// Product-form stationary law pi(n) = phi(n) prod rho_r^n_r / B over the
/// truncated simplex. Deterministic; depends on traffic only through rho.
class StationaryTable {
 public:
  StationaryTable(const LogPotential& phi, const Eigen::VectorXd& rho,
                  int max_shell, double tail_tol);

  double pi(const FlowState& n) const;      // 0 outside the truncation
  double log_pi(const FlowState& n) const;  // -inf outside the truncation

  double log_B() const { return normalization_.log_B; }
  double tail_bound() const { return normalization_.tail_bound; }
  int max_shell() const { return max_shell_; }
  const FlowState& cap() const { return cap_; }

  /// Visits every state with |n| <= max_shell in a fixed row-major order.
  template <typename F>
  void for_each(F&& visit) const {
    FlowState n = FlowState::Zero(cap_.size());
    for (std::int64_t idx = 0; idx < static_cast<std::int64_t>(log_pi_.size());
         ++idx) {
      if (log_pi_[idx] != kNegInf) visit(n, std::exp(log_pi_[idx]));
      for (Eigen::Index r = cap_.size() - 1; r >= 0; --r) {
        if (++n[r] <= cap_[r]) break;
        n[r] = 0;
      }
    }
  }

  double total_probability() const;

 private:
  FlowState cap_;
  int max_shell_;
  std::vector<std::int64_t> strides_;
  std::vector<double> log_pi_;
  NormalizingConstant normalization_;
};

inline StationaryTable stationary_pi(const LogPotential& phi,
                                     const Eigen::VectorXd& rho, int max_shell,
                                     double tail_tol = 1e-10) {
  return StationaryTable(phi, rho, max_shell, tail_tol);
}

/// Reversibility check for exponential document sizes: the largest relative
/// gap, over loaded routes, between pi(n) mu_r rate_r(n) and
/// pi(n - e_r) nu_r, computed in log domain. Zero up to rounding for any
/// potential-derived policy. The policy argument overrides the potential's
/// own allocation (used to detect deliberately perturbed policies).
double detailed_balance_residual(const LogPotential& phi,
                                 const TrafficSpec& traffic,
                                 const FlowState& n);
double detailed_balance_residual(const LogPotential& phi,
                                 const TrafficSpec& traffic, const FlowState& n,
                                 const AllocationPolicy& policy);

}  // namespace bwshare
