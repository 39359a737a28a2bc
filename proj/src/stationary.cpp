#include "bwshare/stationary.hpp"

#include <cmath>

namespace bwshare {

namespace {

// Streaming log-sum-exp accumulator.
struct RunningLse {
  double peak = kNegInf;
  double sum = 0.0;

  void add(double term) {
    if (term == kNegInf) return;
    if (term <= peak) {
      sum += std::exp(term - peak);
    } else {
      sum = sum * std::exp(peak - term) + 1.0;
      peak = term;
    }
  }
  double value() const {
    return sum > 0.0 ? peak + std::log(sum) : kNegInf;
  }
};

void check_rho(const LogPotential& phi, const Eigen::VectorXd& rho) {
  if (rho.size() != phi.num_routes())
    throw std::invalid_argument("dimension mismatch: rho vs potential routes");
  for (Eigen::Index r = 0; r < rho.size(); ++r) {
    if (!(rho[r] >= 0.0) || !std::isfinite(rho[r]))
      throw std::invalid_argument(
          "rho not interior: intensities must be nonnegative and finite");
  }
}

// Walks the domain box restricted to |n| <= max_shell, calling
// visit(n, log phi(n) + sum_r n_r log rho_r).
template <typename F>
void sweep_terms(const LogPotential& phi, const Eigen::VectorXd& rho,
                 int max_shell, F&& visit) {
  const FlowState& cap = phi.domain_cap();
  if (max_shell < 0) throw std::invalid_argument("max shell must be >= 0");
  if (cap.minCoeff() < max_shell)
    throw std::invalid_argument(
        "truncation insufficient: domain box smaller than the simplex "
        "|n| <= max shell");
  const Eigen::Index routes = cap.size();
  Eigen::VectorXd log_rho(routes);
  for (Eigen::Index r = 0; r < routes; ++r)
    log_rho[r] = rho[r] > 0.0 ? std::log(rho[r]) : kNegInf;

  FlowState n = FlowState::Zero(routes);
  std::int64_t cells = 1;
  for (Eigen::Index r = 0; r < routes; ++r) cells *= cap[r] + 1;
  for (std::int64_t idx = 0; idx < cells; ++idx) {
    const std::int64_t pop = population(n);
    if (pop <= max_shell) {
      double weight = 0.0;
      for (Eigen::Index r = 0; r < routes; ++r) {
        if (n[r] == 0) continue;
        if (log_rho[r] == kNegInf) {
          weight = kNegInf;
          break;
        }
        weight += n[r] * log_rho[r];
      }
      const double term =
          weight == kNegInf ? kNegInf : phi.log_phi(n) + weight;
      visit(n, static_cast<int>(pop), term);
    }
    for (Eigen::Index r = routes - 1; r >= 0; --r) {
      if (++n[r] <= cap[r]) break;
      n[r] = 0;
    }
  }
}

NormalizingConstant finish_normalization(const std::vector<double>& shells,
                                         double tail_tol) {
  const int max_shell = static_cast<int>(shells.size()) - 1;
  if (max_shell < 5)
    throw std::invalid_argument(
        "max shell too small for the five-shell tail estimate");

  NormalizingConstant out;
  out.shells = max_shell;
  RunningLse total;
  for (double s : shells) total.add(s);
  out.log_B = total.value();

  double q = 0.0;
  for (int m = max_shell - 5; m < max_shell; ++m) {
    double ratio;
    if (shells[m] == kNegInf)
      ratio = shells[m + 1] == kNegInf ? 0.0
                                       : std::numeric_limits<double>::infinity();
    else
      ratio = std::exp(shells[m + 1] - shells[m]);
    q = std::max(q, ratio);
  }
  out.decay_ratio = q;
  if (!(q < 1.0))
    throw NumericalError(
        "divergence suspected: shell sums are not decaying at the box edge "
        "(ratio " +
        std::to_string(q) +
        "); rho may lie outside the stability region, or the truncation is "
        "too small");
  if (q > 0.0 && shells[max_shell] != kNegInf) {
    const double log_tail =
        shells[max_shell] + std::log(q) - std::log1p(-q);
    out.tail_bound = std::exp(log_tail - out.log_B);
  }
  if (out.tail_bound > tail_tol)
    throw NumericalError("truncation insufficient: tail bound " +
                         std::to_string(out.tail_bound) + " exceeds " +
                         std::to_string(tail_tol));
  return out;
}

}  // namespace

std::vector<double> log_shell_sums(const LogPotential& phi,
                                   const Eigen::VectorXd& rho, int max_shell) {
  check_rho(phi, rho);
  std::vector<RunningLse> acc(max_shell + 1);
  sweep_terms(phi, rho, max_shell,
              [&acc](const FlowState&, int shell, double term) {
                acc[shell].add(term);
              });
  std::vector<double> shells(max_shell + 1);
  for (int m = 0; m <= max_shell; ++m) shells[m] = acc[m].value();
  return shells;
}

NormalizingConstant log_normalizing_constant(const LogPotential& phi,
                                             const Eigen::VectorXd& rho,
                                             int max_shell, double tail_tol) {
  return finish_normalization(log_shell_sums(phi, rho, max_shell), tail_tol);
}

StationaryTable::StationaryTable(const LogPotential& phi,
                                 const Eigen::VectorXd& rho, int max_shell,
                                 double tail_tol)
    : cap_(phi.domain_cap()), max_shell_(max_shell) {
  check_rho(phi, rho);
  strides_.assign(cap_.size(), 1);
  std::int64_t cells = 1;
  for (Eigen::Index r = cap_.size() - 1; r >= 0; --r) {
    strides_[r] = cells;
    cells *= cap_[r] + 1;
  }
  log_pi_.assign(cells, kNegInf);

  std::vector<RunningLse> acc(max_shell + 1);
  sweep_terms(phi, rho, max_shell,
              [this, &acc](const FlowState& n, int shell, double term) {
                std::int64_t idx = 0;
                for (Eigen::Index r = 0; r < n.size(); ++r)
                  idx += n[r] * strides_[r];
                log_pi_[idx] = term;
                acc[shell].add(term);
              });
  std::vector<double> shells(max_shell + 1);
  for (int m = 0; m <= max_shell; ++m) shells[m] = acc[m].value();
  normalization_ = finish_normalization(shells, tail_tol);
  for (double& v : log_pi_) {
    if (v != kNegInf) v -= normalization_.log_B;
  }
}

double StationaryTable::log_pi(const FlowState& n) const {
  if (n.size() != cap_.size())
    throw std::invalid_argument("dimension mismatch in log_pi");
  std::int64_t idx = 0;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] < 0 || n[r] > cap_[r]) return kNegInf;
    idx += n[r] * strides_[r];
  }
  return log_pi_[idx];
}

double StationaryTable::pi(const FlowState& n) const {
  const double lp = log_pi(n);
  return lp == kNegInf ? 0.0 : std::exp(lp);
}

double StationaryTable::total_probability() const {
  RunningLse total;
  for (double v : log_pi_) total.add(v);
  return std::exp(total.value());
}

double detailed_balance_residual(const LogPotential& phi,
                                 const TrafficSpec& traffic,
                                 const FlowState& n) {
  return detailed_balance_residual(phi, traffic, n, potential_policy(phi));
}

double detailed_balance_residual(const LogPotential& phi,
                                 const TrafficSpec& traffic, const FlowState& n,
                                 const AllocationPolicy& policy) {
  require_valid(traffic);
  if (traffic.num_routes() != phi.num_routes())
    throw std::invalid_argument("traffic vs potential dimension mismatch");
  if (population(n) == 0)
    throw std::invalid_argument("detailed balance undefined at n = 0");

  const Eigen::VectorXd nu = traffic.arrival_rates();
  const Eigen::VectorXd mu = traffic.service_rates();
  const Eigen::VectorXd rho = traffic.intensities();
  const double log_phi_n = phi.log_phi(n);
  const AllocationVector rates = policy(n);

  // log pi(n) - log pi(n - e_r) = log phi(n) - log phi(n - e_r) + log rho_r;
  // the normalizing constant cancels.
  double residual = 0.0;
  FlowState prev = n;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] == 0) continue;
    if (!(rates[r] > 0.0)) return 1.0;  // flow with no service: maximally off
    prev[r] -= 1;
    const double delta = log_phi_n - phi.log_phi(prev) + std::log(rho[r]) +
                         std::log(mu[r]) + std::log(rates[r]) -
                         std::log(nu[r]);
    prev[r] += 1;
    residual = std::max(residual, std::abs(std::expm1(delta)));
  }
  return residual;
}

}  // namespace bwshare
