#pragma once

#include <string>

#include "bwshare/capacity_region.hpp"
#include "bwshare/potentials.hpp"
#include "bwshare/traffic.hpp"

namespace bwshare {

// JSON schemas are strict: unknown keys are errors, not warnings.
//
// Network: {"links":[{"id":..,"capacity":..}],
//           "routes":[{"id":..,"links":[..]}]}
// with incidence A_lr = 1 iff route r lists link l.
//
// Traffic: {"delta":..,"routes":[{"id":..,"arrival_rate":..,
//           "stages":{"kind":"deterministic","k":1}
//                  | {"kind":"geometric","p":0.5}
//                  | {"kind":"two_point","a":1,"b":9,"w":0.875}}]}
//
// Potential table: {"cap":[..],"log_phi":[..]} with values row-major over
// the box, last route index fastest.

CapacityRegion parse_network(const std::string& json_text);
CapacityRegion load_network(const std::string& path);
std::string network_to_json(const CapacityRegion& region);

TrafficSpec parse_traffic(const std::string& json_text);
TrafficSpec load_traffic(const std::string& path);
std::string traffic_to_json(const TrafficSpec& traffic);

LogPotential parse_potential_table(const std::string& json_text);
LogPotential load_potential_table(const std::string& path);

}  // namespace bwshare
