#include "bwshare/simulator.hpp"

#include <cmath>
#include <random>
#include <string>

namespace bwshare {

namespace {

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double sample_exponential(std::mt19937_64& rng, double rate) {
  return -std::log1p(-uniform01(rng)) / rate;
}

std::string state_string(const FlowState& n) {
  std::string out = "(";
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (r) out += ",";
    out += std::to_string(n[r]);
  }
  return out + ")";
}

}  // namespace

DetailedState::DetailedState(Eigen::Index routes)
    : counts_(routes), totals_(FlowState::Zero(routes)) {}

long DetailedState::count(Eigen::Index route, long stage) const {
  const auto& per_stage = counts_.at(route);
  if (stage < 1 || stage > static_cast<long>(per_stage.size())) return 0;
  return per_stage[stage - 1];
}

long DetailedState::max_stage(Eigen::Index route) const {
  return static_cast<long>(counts_.at(route).size());
}

void DetailedState::add_document(Eigen::Index route, long stages) {
  if (stages < 1) throw std::invalid_argument("stage count must be >= 1");
  auto& per_stage = counts_.at(route);
  if (stages > static_cast<long>(per_stage.size())) per_stage.resize(stages, 0);
  per_stage[stages - 1] += 1;
  totals_[route] += 1;
  population_ += 1;
}

void DetailedState::complete_stage(Eigen::Index route, long stage) {
  auto& per_stage = counts_.at(route);
  if (stage < 1 || stage > static_cast<long>(per_stage.size()) ||
      per_stage[stage - 1] == 0)
    throw std::invalid_argument("no document at the requested stage");
  per_stage[stage - 1] -= 1;
  if (stage == 1) {
    totals_[route] -= 1;
    population_ -= 1;
  } else {
    per_stage[stage - 2] += 1;
  }
}

DetailedState Transition::apply(const DetailedState& state) const {
  DetailedState next = state;
  if (kind == Kind::arrival)
    next.add_document(route, stage);
  else
    next.complete_stage(route, stage);
  return next;
}

std::vector<Transition> transition_rates(const DetailedState& state,
                                         const AllocationPolicy& policy,
                                         const TrafficSpec& traffic,
                                         bool literal_delta_rates) {
  require_valid(traffic);
  const Eigen::Index routes = traffic.num_routes();
  if (state.route_counts().size() != routes)
    throw std::invalid_argument("state vs traffic dimension mismatch");

  std::vector<Transition> out;
  for (Eigen::Index r = 0; r < routes; ++r) {
    for (const auto& [stages, prob] : traffic.routes[r].stages.pmf()) {
      out.push_back({Transition::Kind::arrival, r, stages,
                     traffic.routes[r].arrival_rate * prob});
    }
  }

  const FlowState& n = state.route_counts();
  if (state.population() == 0) return out;
  const AllocationVector rates = policy(n);
  for (Eigen::Index r = 0; r < routes; ++r) {
    if (n[r] == 0) continue;
    const double share = literal_delta_rates ? traffic.stage_mean * rates[r]
                                             : rates[r] / traffic.stage_mean;
    for (long s = 1; s <= state.max_stage(r); ++s) {
      const long docs = state.count(r, s);
      if (docs == 0) continue;
      const double rate = share * static_cast<double>(docs) / n[r];
      out.push_back({s == 1 ? Transition::Kind::departure
                            : Transition::Kind::stage_advance,
                     r, s, rate});
    }
  }
  return out;
}

EmpiricalDistribution simulate(const AllocationPolicy& policy,
                               const TrafficSpec& traffic,
                               const SimOptions& options) {
  require_valid(traffic);
  const double end = options.end_time;
  const double warmup = options.warmup < 0.0 ? 0.2 * end : options.warmup;
  if (!(end > 0.0) || !(end > warmup) || warmup < 0.0)
    throw std::invalid_argument("need end_time > warmup >= 0");

  const Eigen::Index routes = traffic.num_routes();
  const Eigen::VectorXd nu = traffic.arrival_rates();
  const double arrival_total = nu.sum();
  const double delta = traffic.stage_mean;

  std::mt19937_64 rng(options.seed);
  DetailedState state(routes);
  EmpiricalDistribution result;

  // The allocation changes only when route counts do, so cache it across
  // stage advances.
  AllocationVector cached_rates;
  FlowState cached_n;
  bool have_cache = false;
  auto rates_at = [&](const FlowState& n) -> const AllocationVector& {
    if (!have_cache || cached_n != n) {
      try {
        cached_rates = policy(n);
      } catch (const OutsideDomainError& e) {
        throw OutsideDomainError("policy undefined at state " +
                                 state_string(n) + ": " + e.what());
      }
      cached_n = n;
      have_cache = true;
    }
    return cached_rates;
  };

  Eigen::VectorXd service(routes);
  double now = 0.0;
  while (now < end) {
    const FlowState& n = state.route_counts();
    double total_rate = arrival_total;
    if (state.population() > 0) {
      const AllocationVector& rates = rates_at(n);
      for (Eigen::Index r = 0; r < routes; ++r) {
        service[r] =
            n[r] > 0
                ? (options.literal_delta_rates ? delta * rates[r]
                                               : rates[r] / delta)
                : 0.0;
        total_rate += service[r];
      }
    } else {
      service.setZero();
    }

    const double dt = sample_exponential(rng, total_rate);
    const double next_time = now + dt;
    const double lo = std::max(now, warmup);
    const double hi = std::min(next_time, end);
    if (hi > lo) result.occupancy[n] += hi - lo;
    if (next_time >= end) break;
    now = next_time;

    double u = uniform01(rng) * total_rate;
    bool applied = false;
    for (Eigen::Index r = 0; r < routes && !applied; ++r) {
      if (u < nu[r]) {
        const long stages = traffic.routes[r].stages.sample(rng);
        state.add_document(r, stages);
        if (options.record_arrival_log)
          result.arrival_log.emplace_back(now, static_cast<int>(r));
        applied = true;
      } else {
        u -= nu[r];
      }
    }
    for (Eigen::Index r = 0; r < routes && !applied; ++r) {
      if (u < service[r]) {
        // pick the stage acted on with probability n_rs / n_r
        const double per_doc = service[r] / n[r];
        long stage = 1;
        for (; stage < state.max_stage(r); ++stage) {
          const double chunk = per_doc * state.count(r, stage);
          if (u < chunk) break;
          u -= chunk;
        }
        if (state.count(r, stage) == 0) {
          // rounding pushed u past an empty boundary stage; n_r > 0
          // guarantees an occupied one exists in range
          long s = stage;
          while (s <= state.max_stage(r) && state.count(r, s) == 0) ++s;
          if (s > state.max_stage(r)) {
            s = std::min(stage, state.max_stage(r));
            while (s >= 1 && state.count(r, s) == 0) --s;
          }
          stage = s;
        }
        state.complete_stage(r, stage);
        applied = true;
      } else {
        u -= service[r];
      }
    }
    if (!applied) {
      // u landed at the very top of the rate interval; treat as the last
      // service event present, else the last arrival route.
      for (Eigen::Index r = routes - 1; r >= 0; --r) {
        if (service[r] > 0.0) {
          long stage = 1;
          while (state.count(r, stage) == 0) ++stage;
          state.complete_stage(r, stage);
          applied = true;
          break;
        }
      }
      if (!applied) {
        const long stages = traffic.routes[routes - 1].stages.sample(rng);
        state.add_document(routes - 1, stages);
      }
    }

    result.total_events += 1;
    if (now > warmup) result.events += 1;
    if (state.population() > options.max_population)
      throw NumericalError(
          "state explosion: population exceeds the guard of " +
          std::to_string(options.max_population) +
          " (rho outside the stable region?)");
  }

  result.observed_time = end - warmup;
  for (auto& [key, weight] : result.occupancy) weight /= result.observed_time;
  return result;
}

double tv_distance(const std::map<FlowState, double, FlowStateLess>& p,
                   const std::map<FlowState, double, FlowStateLess>& q) {
  double l1 = 0.0;
  for (const auto& [state, mass] : p) {
    auto it = q.find(state);
    l1 += std::abs(mass - (it == q.end() ? 0.0 : it->second));
  }
  for (const auto& [state, mass] : q) {
    if (p.find(state) == p.end()) l1 += mass;
  }
  return 0.5 * l1;
}

double tv_distance(const EmpiricalDistribution& p,
                   const EmpiricalDistribution& q) {
  return tv_distance(p.occupancy, q.occupancy);
}

double tv_distance(const EmpiricalDistribution& p, const StationaryTable& q) {
  double l1 = 0.0;
  for (const auto& [state, mass] : p.occupancy)
    l1 += std::abs(mass - q.pi(state));
  q.for_each([&](const FlowState& state, double mass) {
    if (p.occupancy.find(state) == p.occupancy.end()) l1 += mass;
  });
  return 0.5 * l1;
}

EmpiricalDistribution merge_replicas(
    const std::vector<EmpiricalDistribution>& replicas) {
  if (replicas.empty()) throw std::invalid_argument("no replicas to merge");
  EmpiricalDistribution merged;
  for (const auto& rep : replicas) {
    for (const auto& [state, mass] : rep.occupancy)
      merged.occupancy[state] += mass * rep.observed_time;
    merged.observed_time += rep.observed_time;
    merged.events += rep.events;
    merged.total_events += rep.total_events;
  }
  for (auto& [state, weight] : merged.occupancy)
    weight /= merged.observed_time;
  return merged;
}

}  // namespace bwshare
