#include "bwshare/potentials.hpp"

#include <bit>
#include <cmath>
#include <string>

namespace bwshare {

namespace {

// Grid cell budget; a box beyond this would not fit in memory.
constexpr std::int64_t kMaxGridCells = std::int64_t{1} << 26;

std::string state_string(const FlowState& n) {
  std::string out = "(";
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (r) out += ",";
    out += std::to_string(n[r]);
  }
  return out + ")";
}

}  // namespace

std::shared_ptr<LogPotential::Grid> LogPotential::make_grid(
    const FlowState& cap) {
  if (cap.size() == 0) throw std::invalid_argument("empty domain box");
  if ((cap.array() < 0).any())
    throw std::invalid_argument("domain box cap must be nonnegative");
  auto grid = std::make_shared<Grid>();
  grid->cap = cap;
  grid->strides.assign(cap.size(), 1);
  std::int64_t cells = 1;
  for (Eigen::Index r = cap.size() - 1; r >= 0; --r) {
    grid->strides[r] = cells;
    cells *= cap[r] + 1;
    if (cells > kMaxGridCells)
      throw std::invalid_argument(
          "domain box too large: more than 2^26 states; shrink the cap");
  }
  grid->values.assign(cells, kNegInf);
  return grid;
}

std::int64_t LogPotential::index_of(const FlowState& n) const {
  std::int64_t idx = 0;
  for (Eigen::Index r = 0; r < n.size(); ++r) idx += n[r] * grid_->strides[r];
  return idx;
}

LogPotential LogPotential::balanced_fairness(const CapacityRegion& region,
                                             const FlowState& domain_cap) {
  require_valid(region);
  if (domain_cap.size() != region.num_routes())
    throw std::invalid_argument("domain box dimension does not match routes");
  auto grid = make_grid(domain_cap);
  grid->region = region;

  const Eigen::Index routes = region.num_routes();
  const Eigen::Index links = region.num_links();
  Eigen::MatrixXd log_coeff(links, routes);
  for (Eigen::Index l = 0; l < links; ++l)
    for (Eigen::Index r = 0; r < routes; ++r)
      log_coeff(l, r) = region.incidence(l, r) > 0.0
                            ? std::log(region.incidence(l, r))
                            : kNegInf;
  const Eigen::VectorXd log_cap = region.capacities.array().log();

  // Row-major sweep: n - e_r always precedes n, so plain iteration respects
  // the recursion's dependencies.
  FlowState n = FlowState::Zero(routes);
  std::vector<double> terms(routes);
  const std::int64_t cells = static_cast<std::int64_t>(grid->values.size());
  for (std::int64_t idx = 0; idx < cells; ++idx) {
    if (idx == 0) {
      grid->values[0] = 0.0;
    } else {
      double best = kNegInf;
      for (Eigen::Index l = 0; l < links; ++l) {
        int count = 0;
        double peak = kNegInf;
        for (Eigen::Index r = 0; r < routes; ++r) {
          if (n[r] == 0 || log_coeff(l, r) == kNegInf) continue;
          const double t = log_coeff(l, r) + grid->values[idx - grid->strides[r]];
          terms[count++] = t;
          peak = std::max(peak, t);
        }
        if (count == 0) continue;
        double sum = 0.0;
        for (int i = 0; i < count; ++i) sum += std::exp(terms[i] - peak);
        best = std::max(best, peak + std::log(sum) - log_cap[l]);
      }
      grid->values[idx] = best;
    }
    // odometer increment, last route fastest
    for (Eigen::Index r = routes - 1; r >= 0; --r) {
      if (++n[r] <= domain_cap[r]) break;
      n[r] = 0;
    }
  }
  return LogPotential(std::move(grid), Kind::balanced_fairness, 0.0);
}

LogPotential LogPotential::balanced_fairness(const CapacityRegion& region,
                                             int uniform_cap) {
  return balanced_fairness(
      region, FlowState::Constant(region.num_routes(), uniform_cap));
}

LogPotential LogPotential::counterexample(LogPotential base, double alpha) {
  if (!(alpha > 1.0))
    throw std::invalid_argument("counterexample requires alpha > 1");
  const double combined =
      base.kind_ == Kind::counterexample ? base.alpha_ * alpha : alpha;
  return LogPotential(std::move(base.grid_), Kind::counterexample, combined);
}

LogPotential LogPotential::from_table(const FlowState& domain_cap,
                                      std::vector<double> log_values) {
  auto grid = make_grid(domain_cap);
  if (log_values.size() != grid->values.size())
    throw std::invalid_argument(
        "table size does not match the domain box: expected " +
        std::to_string(grid->values.size()) + " values, got " +
        std::to_string(log_values.size()));
  if (log_values[0] != 0.0)
    throw std::invalid_argument("table must have log phi(0) = 0");
  grid->values = std::move(log_values);
  return LogPotential(std::move(grid), Kind::table, 0.0);
}

double LogPotential::log_phi(const FlowState& n) const {
  if (n.size() != grid_->cap.size())
    throw std::invalid_argument("dimension mismatch in log_phi");
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] < 0) return kNegInf;  // phi vanishes outside the orthant
  }
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] > grid_->cap[r])
      throw OutsideDomainError("outside domain box: state " + state_string(n) +
                               " exceeds cap " + state_string(grid_->cap));
  }
  double value = grid_->values[index_of(n)];
  if (kind_ == Kind::counterexample) {
    const std::int64_t pop = population(n);
    if (pop >= 1) value += bucket_index(pop) * std::log(alpha_);
  }
  return value;
}

AllocationVector LogPotential::allocation(const FlowState& n) const {
  if (n.size() != grid_->cap.size())
    throw std::invalid_argument("dimension mismatch in allocation");
  if ((n.array() < 0).any())
    throw std::invalid_argument("allocation undefined for negative counts");
  if (population(n) == 0)
    throw std::invalid_argument("zero state: allocation undefined at n = 0");
  const double log_here = log_phi(n);
  AllocationVector rates = AllocationVector::Zero(n.size());
  FlowState prev = n;
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n[r] == 0) continue;
    prev[r] -= 1;
    rates[r] = std::exp(log_phi(prev) - log_here);
    prev[r] += 1;
  }
  return rates;
}

const CapacityRegion* LogPotential::region() const {
  return grid_->region ? &*grid_->region : nullptr;
}

int bucket_index(std::int64_t pop) {
  if (pop < 1)
    throw std::invalid_argument("bucket index undefined at zero population");
  return std::bit_width(static_cast<std::uint64_t>(pop)) - 1;
}

int bucket_index(const FlowState& n) { return bucket_index(population(n)); }

double balanced_fairness_log_phi(const CapacityRegion& region,
                                 const FlowState& n) {
  if ((n.array() < 0).any()) return kNegInf;
  return LogPotential::balanced_fairness(region, n).log_phi(n);
}

double counterexample_log_phi(const LogPotential& base, double alpha,
                              const FlowState& n) {
  return LogPotential::counterexample(base, alpha).log_phi(n);
}

AllocationVector allocation_from_potential(const LogPotential& phi,
                                           const FlowState& n) {
  return phi.allocation(n);
}

AllocationPolicy potential_policy(const LogPotential& phi) {
  return [phi](const FlowState& n) { return phi.allocation(n); };
}

}  // namespace bwshare
