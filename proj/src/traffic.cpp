#include "bwshare/traffic.hpp"

#include <cmath>

namespace bwshare {

namespace {

// Uniform in [0,1) from the top 53 bits; identical on every platform.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

StageDistribution StageDistribution::deterministic(long stages) {
  if (stages < 1)
    throw std::invalid_argument("deterministic stage count must be >= 1");
  StageDistribution d;
  d.kind = Kind::deterministic;
  d.k = stages;
  return d;
}

StageDistribution StageDistribution::geometric(double success) {
  if (!(success > 0.0) || !(success <= 1.0))
    throw std::invalid_argument("geometric parameter must be in (0, 1]");
  StageDistribution d;
  d.kind = Kind::geometric;
  d.p = success;
  return d;
}

StageDistribution StageDistribution::two_point(long a, long b, double w) {
  if (a < 1 || b < 1)
    throw std::invalid_argument("two_point stage counts must be >= 1");
  if (!(w >= 0.0) || !(w <= 1.0))
    throw std::invalid_argument("two_point weight must be in [0, 1]");
  StageDistribution d;
  d.kind = Kind::two_point;
  d.a = a;
  d.b = b;
  d.w = w;
  return d;
}

double StageDistribution::mean() const {
  switch (kind) {
    case Kind::deterministic:
      return static_cast<double>(k);
    case Kind::geometric:
      return 1.0 / p;
    case Kind::two_point:
      return w * static_cast<double>(a) + (1.0 - w) * static_cast<double>(b);
  }
  return 1.0;
}

long StageDistribution::sample(std::mt19937_64& rng) const {
  switch (kind) {
    case Kind::deterministic:
      return k;
    case Kind::geometric: {
      if (p >= 1.0) return 1;
      const double u = uniform01(rng);
      return 1 + static_cast<long>(std::floor(std::log1p(-u) / std::log1p(-p)));
    }
    case Kind::two_point:
      return uniform01(rng) < w ? a : b;
  }
  return 1;
}

std::vector<std::pair<long, double>> StageDistribution::pmf(
    double tail_eps) const {
  std::vector<std::pair<long, double>> out;
  switch (kind) {
    case Kind::deterministic:
      out.emplace_back(k, 1.0);
      break;
    case Kind::geometric: {
      if (p >= 1.0) {
        out.emplace_back(1, 1.0);
        break;
      }
      double mass = 0.0;
      double prob = p;
      for (long s = 1; mass < 1.0 - tail_eps; ++s) {
        out.emplace_back(s, prob);
        mass += prob;
        prob *= 1.0 - p;
      }
      break;
    }
    case Kind::two_point:
      if (a == b) {
        out.emplace_back(a, 1.0);
      } else {
        if (w > 0.0) out.emplace_back(a, w);
        if (w < 1.0) out.emplace_back(b, 1.0 - w);
      }
      break;
  }
  return out;
}

std::string StageDistribution::describe() const {
  switch (kind) {
    case Kind::deterministic:
      return "deterministic(" + std::to_string(k) + ")";
    case Kind::geometric:
      return "geometric(p=" + std::to_string(p) + ")";
    case Kind::two_point:
      return "two_point(a=" + std::to_string(a) + ",b=" + std::to_string(b) +
             ",w=" + std::to_string(w) + ")";
  }
  return "?";
}

Eigen::VectorXd TrafficSpec::arrival_rates() const {
  Eigen::VectorXd nu(num_routes());
  for (Eigen::Index r = 0; r < nu.size(); ++r) nu[r] = routes[r].arrival_rate;
  return nu;
}

Eigen::VectorXd TrafficSpec::mean_sizes() const {
  Eigen::VectorXd sizes(num_routes());
  for (Eigen::Index r = 0; r < sizes.size(); ++r)
    sizes[r] = stage_mean * routes[r].stages.mean();
  return sizes;
}

Eigen::VectorXd TrafficSpec::service_rates() const {
  return mean_sizes().cwiseInverse();
}

Eigen::VectorXd TrafficSpec::intensities() const {
  return arrival_rates().cwiseProduct(mean_sizes());
}

void require_valid(const TrafficSpec& traffic) {
  if (!(traffic.stage_mean > 0.0) || !std::isfinite(traffic.stage_mean))
    throw std::invalid_argument("stage mean delta must be positive");
  if (traffic.routes.empty())
    throw std::invalid_argument("traffic spec has no routes");
  for (const auto& route : traffic.routes) {
    if (!(route.arrival_rate > 0.0) || !std::isfinite(route.arrival_rate))
      throw std::invalid_argument("arrival rate must be positive on route " +
                                  route.id);
    const double mean = route.stages.mean();
    if (!(mean >= 1.0) || !std::isfinite(mean))
      throw std::invalid_argument("stage mean must be finite and >= 1");
  }
}

}  // namespace bwshare
