#include "bwshare/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

namespace bwshare {

namespace {

double l1_gap(const AllocationVector& a, const AllocationVector& b) {
  return (a - b).cwiseAbs().sum();
}

FlowState floored_state(const Eigen::VectorXd& n, double c,
                        const FlowState& offset) {
  FlowState state(n.size());
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    const long long floored = static_cast<long long>(std::floor(c * n[r]));
    const long long value = floored + (offset.size() ? offset[r] : 0);
    if (value < 0)
      throw std::invalid_argument(
          "offset produces a negative component at c = " + std::to_string(c));
    state[r] = static_cast<int>(value);
  }
  return state;
}

}  // namespace

InsensitivityReport insensitivity_experiment(
    const LogPotential& phi, const std::vector<TrafficSpec>& variants,
    int oracle_max_shell, double oracle_tail_tol, const SimParams& params) {
  if (variants.empty()) throw std::invalid_argument("no traffic variants");
  for (const auto& variant : variants) require_valid(variant);

  const Eigen::VectorXd rho = variants.front().intensities();
  for (const auto& variant : variants) {
    const Eigen::VectorXd other = variant.intensities();
    if (other.size() != rho.size() ||
        ((other - rho).cwiseAbs().array() >
         1e-9 * rho.cwiseAbs().array().max(1e-30))
            .any())
      throw std::invalid_argument(
          "variants differ in rho: all stage laws must present the same "
          "intensity vector");
  }

  const StationaryTable oracle =
      stationary_pi(phi, rho, oracle_max_shell, oracle_tail_tol);
  const AllocationPolicy policy = potential_policy(phi);

  // One task per (variant, replica); replica i of variant v runs with seed
  // seed + 1000 v + i. Results land in a fixed slot, so the merge order does
  // not depend on scheduling.
  const int replicas = std::max(1, params.replicas);
  const int tasks = static_cast<int>(variants.size()) * replicas;
  std::vector<EmpiricalDistribution> runs(tasks);
  std::atomic<int> next{0};
  auto worker = [&]() {
    for (int task = next.fetch_add(1); task < tasks;
         task = next.fetch_add(1)) {
      const int v = task / replicas;
      const int i = task % replicas;
      SimOptions options;
      options.end_time = params.end_time;
      options.warmup = params.warmup;
      options.seed = params.seed + 1000ull * v + i;
      options.max_population = params.max_population;
      options.literal_delta_rates = params.literal_delta_rates;
      runs[task] = simulate(policy, variants[v], options);
    }
  };
  const int threads = std::max(1, std::min(params.workers, tasks));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  InsensitivityReport report;
  report.rho = rho;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    InsensitivityVariant out;
    out.rho = variants[v].intensities();
    out.label = "delta=" + std::to_string(variants[v].stage_mean);
    for (const auto& route : variants[v].routes)
      out.label += " " + route.stages.describe();
    std::vector<EmpiricalDistribution> mine(
        runs.begin() + v * replicas, runs.begin() + (v + 1) * replicas);
    for (const auto& rep : mine) out.events_per_replica.push_back(rep.events);
    out.merged = merge_replicas(mine);
    out.tv_to_oracle = tv_distance(out.merged, oracle);
    report.max_oracle_tv = std::max(report.max_oracle_tv, out.tv_to_oracle);
    report.variants.push_back(std::move(out));
  }

  const int count = static_cast<int>(report.variants.size());
  report.pairwise_tv = Eigen::MatrixXd::Zero(count, count);
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      const double tv = tv_distance(report.variants[i].merged,
                                    report.variants[j].merged);
      report.pairwise_tv(i, j) = tv;
      report.pairwise_tv(j, i) = tv;
      report.max_pairwise_tv = std::max(report.max_pairwise_tv, tv);
    }
  }
  return report;
}

ConvergenceReport limit_convergence_experiment(
    const CapacityRegion& region, const AllocationPolicy& policy,
    const Eigen::VectorXd& n, const std::vector<double>& c_list,
    const std::vector<FlowState>& offsets) {
  ConvergenceReport report;
  report.pf_allocation = solve_pf(region, n).allocation;

  std::vector<FlowState> offset_list = offsets;
  if (offset_list.empty())
    offset_list.push_back(FlowState::Zero(n.size()));

  for (double c : c_list) {
    for (const auto& offset : offset_list) {
      if (offset.size() != n.size())
        throw std::invalid_argument("offset dimension mismatch");
      ConvergenceRow row;
      row.c = c;
      row.offset = offset;
      row.state = floored_state(n, c, offset);
      row.allocation = policy(row.state);
      row.l1_gap = l1_gap(row.allocation, report.pf_allocation);
      report.rows.push_back(std::move(row));
    }
  }
  return report;
}

LdpReport ldp_experiment(const CapacityRegion& region, const LogPotential& phi,
                         const Eigen::VectorXd& rho, const Eigen::VectorXd& n,
                         const std::vector<double>& c_list, int shell_slack,
                         double tail_tol) {
  if (c_list.empty()) throw std::invalid_argument("empty c grid");
  LdpReport report;
  report.rate = rate_function(region, n, rho);

  double c_max = 0.0;
  for (double c : c_list) c_max = std::max(c_max, c);
  const int max_shell =
      static_cast<int>(std::ceil(c_max * n.sum())) + shell_slack;
  const StationaryTable table = stationary_pi(phi, rho, max_shell, tail_tol);
  report.log_B = table.log_B();
  report.tail_bound = table.tail_bound();

  const FlowState no_offset = FlowState::Zero(n.size());
  for (double c : c_list) {
    LdpRow row;
    row.c = c;
    row.state = floored_state(n, c, no_offset);
    const double log_pi = table.log_pi(row.state);
    if (log_pi == kNegInf)
      throw NumericalError("truncation insufficient: state outside the "
                           "stationary table at c = " +
                           std::to_string(c));
    row.log_pi_over_c = log_pi / c;
    row.neg_rate = -report.rate;
    row.error = std::abs(row.log_pi_over_c - row.neg_rate);
    report.rows.push_back(std::move(row));
  }
  return report;
}

OscillationReport counterexample_oscillation(const CapacityRegion& region,
                                             const LogPotential& base,
                                             double alpha, const FlowState& n,
                                             const std::vector<int>& k_list) {
  if (!(alpha > 1.0))
    throw std::invalid_argument("oscillation requires alpha > 1");
  const std::int64_t pop = population(n);
  if (pop < 1 || (pop & (pop - 1)) != 0)
    throw std::invalid_argument("|n| not a power of two");
  if (k_list.empty()) throw std::invalid_argument("empty k list");

  const LogPotential transformed = LogPotential::counterexample(base, alpha);
  OscillationReport report;
  report.alpha = alpha;
  report.pf = solve_pf(region, n.cast<double>()).allocation;
  const AllocationVector pf_scaled = report.pf / alpha;
  for (Eigen::Index r = 0; r < n.size(); ++r)
    if (n[r] > 0)
      report.separation_lower_bound += (1.0 - 1.0 / alpha) * report.pf[r];

  for (int k : k_list) {
    if (k < 1) throw std::invalid_argument("k must be >= 1");

    OscillationRow power;
    power.k = k;
    power.state = n * (1 << k);  // population 2^(k+m), a power of two
    power.allocation = transformed.allocation(power.state);
    power.gap_to_pf = l1_gap(power.allocation, report.pf);
    power.gap_to_pf_over_alpha = l1_gap(power.allocation, pf_scaled);
    report.power_rows.push_back(std::move(power));

    // Ray state with population 2^k - 1: componentwise floor of
    // ((2^k - 1)/|n|) n, then the deficit spread by largest remainder.
    const std::int64_t target = (std::int64_t{1} << k) - 1;
    const double scale = static_cast<double>(target) / pop;
    FlowState state(n.size());
    std::vector<std::pair<double, Eigen::Index>> remainders;
    std::int64_t assigned = 0;
    for (Eigen::Index r = 0; r < n.size(); ++r) {
      const double exact = scale * n[r];
      state[r] = static_cast<int>(std::floor(exact));
      assigned += state[r];
      remainders.emplace_back(exact - state[r], r);
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) {
                       return a.first > b.first;
                     });
    for (std::int64_t d = 0; d < target - assigned; ++d)
      state[remainders[d % remainders.size()].second] += 1;

    OscillationRow off;
    off.k = k;
    off.state = state;
    off.allocation = transformed.allocation(off.state);
    off.gap_to_pf = l1_gap(off.allocation, report.pf);
    off.gap_to_pf_over_alpha = l1_gap(off.allocation, pf_scaled);
    report.off_power_rows.push_back(std::move(off));
  }

  report.final_separation = l1_gap(report.power_rows.back().allocation,
                                   report.off_power_rows.back().allocation);
  return report;
}

BhatReport bhat_finiteness_check(const CapacityRegion& region,
                                 const LogPotential& base,
                                 const Eigen::VectorXd& rho, double alpha,
                                 std::optional<double> epsilon,
                                 int max_shell) {
  if (!(alpha > 1.0)) throw std::invalid_argument("alpha must exceed 1");
  require_valid(region);
  const double slack = interior_slack(region, rho);
  if (!(slack > 0.0))
    throw std::invalid_argument(
        "no interior slack: rho is on or outside the boundary");
  BhatReport report;
  report.alpha = alpha;
  report.epsilon = epsilon.value_or(0.5 * slack);
  if (!(report.epsilon > 0.0) || report.epsilon >= slack)
    throw std::invalid_argument(
        "epsilon must keep rho e^eps inside the region (slack " +
        std::to_string(slack) + ")");

  // Crossover of alpha^(log2 m) = m^(log2 alpha) against e^(eps m): scan the
  // integers; past ln(alpha)/(eps ln 2) the margin is increasing, so the
  // last violation is final.
  const double ln_alpha = std::log(alpha);
  const double turning = ln_alpha / (report.epsilon * std::log(2.0));
  const long horizon = std::max<long>(64, 8 * static_cast<long>(std::ceil(turning)));
  long last_violation = 0;
  for (long m = 1; m <= horizon; ++m) {
    const double lhs = std::log2(static_cast<double>(m)) * ln_alpha;
    if (!(lhs < report.epsilon * m)) last_violation = m;
  }
  if (last_violation >= horizon)
    throw NumericalError("crossover scan horizon too small");
  report.crossover = static_cast<int>(last_violation + 1);

  // Transformed shell sums: S_hat_m = alpha^floor(log2 m) S_m.
  const std::vector<double> shells = log_shell_sums(base, rho, max_shell);
  report.log_shell_sums.resize(shells.size());
  report.log_shell_sums[0] = shells[0];
  for (int m = 1; m < static_cast<int>(shells.size()); ++m)
    report.log_shell_sums[m] =
        shells[m] == kNegInf ? kNegInf
                             : shells[m] + bucket_index(m) * ln_alpha;

  struct Lse {
    double peak = kNegInf;
    double sum = 0.0;
    void add(double t) {
      if (t == kNegInf) return;
      if (t <= peak) {
        sum += std::exp(t - peak);
      } else {
        sum = sum * std::exp(peak - t) + 1.0;
        peak = t;
      }
    }
    double value() const { return sum > 0.0 ? peak + std::log(sum) : kNegInf; }
  };

  Lse total;
  for (double s : report.log_shell_sums) total.add(s);
  report.log_B_hat = total.value();

  // Complete power-of-two buckets [2^j, 2^(j+1)).
  for (int j = 0;; ++j) {
    const std::int64_t lo = std::int64_t{1} << j;
    const std::int64_t hi = (std::int64_t{1} << (j + 1)) - 1;
    if (hi > max_shell) break;
    Lse bucket;
    for (std::int64_t m = lo; m <= hi; ++m)
      bucket.add(report.log_shell_sums[static_cast<std::size_t>(m)]);
    report.bucket_log_sums.push_back(bucket.value());
  }
  for (std::size_t j = 0; j + 1 < report.bucket_log_sums.size(); ++j) {
    const double a = report.bucket_log_sums[j];
    const double b = report.bucket_log_sums[j + 1];
    report.bucket_ratios.push_back(
        a == kNegInf ? (b == kNegInf ? 0.0
                                     : std::numeric_limits<double>::infinity())
                     : std::exp(b - a));
  }

  const int crossover_bucket = bucket_index(report.crossover);
  bool seen = false;
  for (std::size_t j = 0; j < report.bucket_ratios.size(); ++j) {
    if (static_cast<int>(j) < crossover_bucket) continue;
    seen = true;
    report.max_bucket_ratio_past_crossover = std::max(
        report.max_bucket_ratio_past_crossover, report.bucket_ratios[j]);
  }
  report.geometric_decay =
      seen && report.max_bucket_ratio_past_crossover < 1.0;
  return report;
}

}  // namespace bwshare
