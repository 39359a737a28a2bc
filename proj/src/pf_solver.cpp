#include "bwshare/pf_solver.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>

namespace bwshare {

namespace {

constexpr long kIterationCap = 1000000;

void check_demand(const CapacityRegion& region, const Eigen::VectorXd& n) {
  if (n.size() != region.num_routes())
    throw std::invalid_argument(
        "dimension mismatch: state has " + std::to_string(n.size()) +
        " entries for " + std::to_string(region.num_routes()) + " routes");
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (!(n[r] >= 0.0) || !std::isfinite(n[r]))
      throw std::invalid_argument("demand must be nonnegative and finite");
  }
}

// A collapsed price denominator sends the Lagrangian maximizer to infinity.
// Flooring it at n_r / (kRateSlack * cap_r), with cap_r the tightest covering
// link, keeps rates within kRateSlack of any feasible value: the overload
// signal stays enormous (prices get pushed back up) but every intermediate
// quantity remains representable. The floor sits far below any optimum
// (where den_r = n_r / rate_r >= n_r / cap_r), so it never binds at the end.
constexpr double kRateSlack = 1e6;

Eigen::VectorXd route_rate_caps(const CapacityRegion& region) {
  Eigen::VectorXd caps(region.num_routes());
  for (Eigen::Index r = 0; r < region.num_routes(); ++r) {
    double cap = std::numeric_limits<double>::infinity();
    for (Eigen::Index l = 0; l < region.num_links(); ++l) {
      if (region.incidence(l, r) > 0.0)
        cap = std::min(cap,
                       region.capacities[l] / region.incidence(l, r));
    }
    caps[r] = cap;
  }
  return caps;
}

// Maximizer of the Lagrangian at fixed prices: rate_r = n_r / den_r with the
// floored denominator; empty routes pinned to zero.
Eigen::VectorXd rates_for_prices(const Eigen::MatrixXd& A,
                                 const Eigen::VectorXd& n,
                                 const Eigen::VectorXd& caps,
                                 const Eigen::VectorXd& prices) {
  const Eigen::VectorXd denom = A.transpose() * prices;
  Eigen::VectorXd rates = Eigen::VectorXd::Zero(n.size());
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] > 0.0)
      rates[r] = n[r] / std::max(denom[r], n[r] / (kRateSlack * caps[r]));
  }
  return rates;
}

double dual_value(const Eigen::MatrixXd& A, const Eigen::VectorXd& C,
                  const Eigen::VectorXd& n, const Eigen::VectorXd& prices) {
  const Eigen::VectorXd denom = A.transpose() * prices;
  double value = prices.dot(C) - n.sum();
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] > 0.0)
      value += n[r] *
               (std::log(n[r]) - std::log(std::max(denom[r], 1e-300)));
  }
  return value;
}

}  // namespace

double pf_kkt_residual(const CapacityRegion& region, const Eigen::VectorXd& n,
                       const AllocationVector& rates,
                       const Eigen::VectorXd& prices) {
  const Eigen::MatrixXd& A = region.incidence;
  const Eigen::VectorXd& C = region.capacities;
  const Eigen::VectorXd denom = A.transpose() * prices;
  const Eigen::VectorXd load = A * rates;

  double residual = 0.0;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] <= 0.0) continue;
    if (!(rates[r] > 0.0)) return std::numeric_limits<double>::infinity();
    const double target = n[r] / rates[r];
    residual = std::max(residual, std::abs(target - denom[r]) / target);
  }
  for (Eigen::Index r = 0; r < rates.size(); ++r) {
    residual = std::max(residual,
                        std::max(0.0, -rates[r]) / std::max(1.0, std::abs(rates[r])));
  }
  for (Eigen::Index l = 0; l < C.size(); ++l) {
    residual = std::max(residual, (load[l] - C[l]) / C[l]);
    residual = std::max(residual, std::abs(prices[l] * (C[l] - load[l])) /
                                      (C[l] * std::max(prices[l], 1.0)));
  }
  return std::max(residual, 0.0);
}

PFSolution solve_pf(const CapacityRegion& region, const Eigen::VectorXd& n,
                    double tol) {
  require_valid(region);
  check_demand(region, n);
  if (!(n.array() > 0.0).any())
    throw std::invalid_argument(
        "zero state: the proportional fairness objective is degenerate at n = 0");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");

  const Eigen::MatrixXd& A = region.incidence;
  const Eigen::VectorXd& C = region.capacities;
  const Eigen::Index links = region.num_links();
  const Eigen::VectorXd caps = route_rate_caps(region);

  // Dual decomposition: projected gradient on link prices, diagonally
  // preconditioned, with a step that shrinks whenever the dual value would
  // increase and then stays put. Price start p_l = |n| / C_l is exact for a
  // single link.
  //
  // The diagonal preconditioner counts a route's curvature once per link it
  // crosses, so a unit step overshoots by up to that multiplicity; capping
  // the step at its reciprocal (Gershgorin bound on the preconditioned
  // Hessian) keeps the final phase contractive instead of cycling across
  // the dual valley.
  int multiplicity = 1;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    int crossed = 0;
    for (Eigen::Index l = 0; l < links; ++l)
      if (A(l, r) > 0.0) ++crossed;
    multiplicity = std::max(multiplicity, crossed);
  }
  const double step_cap = 1.0 / multiplicity;

  Eigen::VectorXd prices = n.sum() * C.cwiseInverse();
  double dual = dual_value(A, C, n, prices);
  double step = step_cap;
  int accept_streak = 0;

  for (long iter = 1; iter <= kIterationCap; ++iter) {
    const Eigen::VectorXd rates = rates_for_prices(A, n, caps, prices);
    const Eigen::VectorXd load = A * rates;

    // Candidate answer: the current primal point scaled into the polytope.
    double overload = 1.0;
    for (Eigen::Index l = 0; l < links; ++l)
      overload = std::max(overload, load[l] / C[l]);
    const AllocationVector candidate = rates / overload;
    const double residual = pf_kkt_residual(region, n, candidate, prices);
    if (residual <= tol) return {candidate, prices, residual, iter};

    // Diagonal of the dual Hessian, used as a preconditioner.
    const Eigen::VectorXd denom = A.transpose() * prices;
    Eigen::VectorXd curvature = Eigen::VectorXd::Zero(links);
    for (Eigen::Index r = 0; r < n.size(); ++r) {
      if (n[r] <= 0.0) continue;
      const double d = std::max(denom[r], n[r] / (kRateSlack * caps[r]));
      const double w = n[r] / (d * d);
      for (Eigen::Index l = 0; l < links; ++l) {
        if (A(l, r) > 0.0) curvature[l] += A(l, r) * A(l, r) * w;
      }
    }
    // A link whose curvature vanishes carries no loaded route, so its
    // gradient is -C_l < 0 and the projection lands the price at zero; the
    // denormal floor only keeps the division defined.
    curvature = curvature.cwiseMax(std::numeric_limits<double>::min());

    const Eigen::VectorXd gradient = load - C;  // raise overloaded prices
    while (true) {
      const Eigen::VectorXd trial =
          (prices + step * gradient.cwiseQuotient(curvature)).cwiseMax(0.0);
      const double trial_dual = dual_value(A, C, n, trial);
      if (trial_dual <= dual + 1e-12 * std::max(1.0, std::abs(dual)) ||
          step < 1e-18) {
        prices = trial;
        dual = trial_dual;
        if (++accept_streak >= 4) {
          step = std::min(step_cap, 2.0 * step);
          accept_streak = 0;
        }
        break;
      }
      step *= 0.5;
      accept_streak = 0;
    }
  }
  throw NumericalError("no convergence: KKT residual above " +
                       std::to_string(tol) + " after " +
                       std::to_string(kIterationCap) + " iterations");
}

double pf_objective(const Eigen::VectorXd& n, const AllocationVector& rates) {
  if (n.size() != rates.size())
    throw std::invalid_argument("dimension mismatch in pf_objective");
  double value = 0.0;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] <= 0.0) continue;  // 0 log 0 = 0 convention
    if (!(rates[r] > 0.0))
      throw std::invalid_argument("log of zero: route " + std::to_string(r) +
                                  " has demand but no rate");
    value += n[r] * std::log(rates[r]);
  }
  return value;
}

double rate_function(const CapacityRegion& region, const Eigen::VectorXd& n,
                     const Eigen::VectorXd& rho) {
  check_demand(region, n);
  if (rho.size() != n.size())
    throw std::invalid_argument("dimension mismatch: rho vs state");
  if (!in_interior(region, rho))
    throw std::invalid_argument("rho not interior to the capacity region");
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] > 0.0 && !(rho[r] > 0.0))
      throw std::invalid_argument(
          "rho not interior: zero intensity on a loaded route");
  }
  const PFSolution sol = solve_pf(region, n);
  double value = pf_objective(n, sol.allocation);
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] > 0.0) value -= n[r] * std::log(rho[r]);
  }
  return value;
}

AllocationPolicy pf_policy(const CapacityRegion& region, double tol) {
  require_valid(region);
  struct Cache {
    std::mutex mutex;
    std::map<FlowState, AllocationVector, FlowStateLess> solutions;
  };
  auto cache = std::make_shared<Cache>();
  return [region, tol, cache](const FlowState& n) -> AllocationVector {
    {
      std::lock_guard<std::mutex> lock(cache->mutex);
      auto it = cache->solutions.find(n);
      if (it != cache->solutions.end()) return it->second;
    }
    AllocationVector rates = solve_pf(region, n.cast<double>(), tol).allocation;
    std::lock_guard<std::mutex> lock(cache->mutex);
    cache->solutions.emplace(n, rates);
    return rates;
  };
}

}  // namespace bwshare
