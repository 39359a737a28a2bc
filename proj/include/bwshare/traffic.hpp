#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "bwshare/common.hpp"

namespace bwshare {

/// Law of the number of exponential stages making up one document.
/// Support is {1, 2, ...} with finite mean.
struct StageDistribution {
  enum class Kind { deterministic, geometric, two_point };

  Kind kind = Kind::deterministic;
  long k = 1;      // deterministic: exactly k stages
  double p = 1.0;  // geometric on {1,2,...}: P(L=s) = p (1-p)^(s-1), mean 1/p
  long a = 1;      // two_point: P(L=a) = w, P(L=b) = 1-w
  long b = 1;
  double w = 1.0;

  static StageDistribution deterministic(long stages);
  static StageDistribution geometric(double success);
  static StageDistribution two_point(long a, long b, double w);

  double mean() const;
  long sample(std::mt19937_64& rng) const;

  /// Enumerates (stage count, probability) pairs covering all but at most
  /// tail_eps of the mass. Exact for finite-support kinds.
  std::vector<std::pair<long, double>> pmf(double tail_eps = 1e-12) const;

  std::string describe() const;
};

struct RouteTraffic {
  std::string id;
  double arrival_rate = 0.0;  // Poisson rate of document arrivals
  StageDistribution stages;
};

/// Arrival and document-size description. Stage sizes are exponential with
/// mean stage_mean, so a route r document has mean size
/// stage_mean * E[stages_r] and intensity rho_r = arrival_rate_r * mean size.
struct TrafficSpec {
  double stage_mean = 1.0;
  std::vector<RouteTraffic> routes;

  Eigen::Index num_routes() const {
    return static_cast<Eigen::Index>(routes.size());
  }
  Eigen::VectorXd arrival_rates() const;
  Eigen::VectorXd mean_sizes() const;     // 1 / mu_r
  Eigen::VectorXd service_rates() const;  // mu_r
  Eigen::VectorXd intensities() const;    // rho_r
};

void require_valid(const TrafficSpec& traffic);

}  // namespace bwshare
