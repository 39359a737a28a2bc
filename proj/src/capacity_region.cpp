#include "bwshare/capacity_region.hpp"

#include <cmath>
#include <sstream>

namespace bwshare {

namespace {

std::string route_label(const CapacityRegion& region, Eigen::Index r) {
  if (r < static_cast<Eigen::Index>(region.route_ids.size()))
    return region.route_ids[r];
  return "#" + std::to_string(r);
}

std::string link_label(const CapacityRegion& region, Eigen::Index l) {
  if (l < static_cast<Eigen::Index>(region.link_ids.size()))
    return region.link_ids[l];
  return "#" + std::to_string(l);
}

}  // namespace

ValidationReport validate(const CapacityRegion& region) {
  ValidationReport report;
  auto fail = [&report](const std::string& msg) {
    report.ok = false;
    report.violations.push_back(msg);
  };

  const Eigen::Index links = region.incidence.rows();
  const Eigen::Index routes = region.incidence.cols();
  if (region.capacities.size() != links) {
    fail("capacity vector has " + std::to_string(region.capacities.size()) +
         " entries for " + std::to_string(links) + " incidence rows");
    return report;
  }
  if (!region.route_ids.empty() &&
      static_cast<Eigen::Index>(region.route_ids.size()) != routes)
    fail("route id count does not match incidence columns");
  if (!region.link_ids.empty() &&
      static_cast<Eigen::Index>(region.link_ids.size()) != links)
    fail("link id count does not match incidence rows");
  if (routes == 0) fail("region has no routes");

  for (Eigen::Index l = 0; l < links; ++l) {
    if (!(region.capacities[l] > 0.0) || !std::isfinite(region.capacities[l]))
      fail("degenerate link " + link_label(region, l) + " (capacity " +
           std::to_string(region.capacities[l]) + " is not positive)");
  }
  for (Eigen::Index l = 0; l < links; ++l) {
    for (Eigen::Index r = 0; r < routes; ++r) {
      const double a = region.incidence(l, r);
      if (!(a >= 0.0) || !std::isfinite(a))
        fail("negative or non-finite coefficient at link " +
             link_label(region, l) + ", route " + route_label(region, r));
    }
  }
  for (Eigen::Index r = 0; r < routes; ++r) {
    if (links == 0 || (region.incidence.col(r).array() <= 0.0).all())
      fail("unbounded route " + route_label(region, r) +
           " (covered by no link)");
  }
  return report;
}

void require_valid(const CapacityRegion& region) {
  ValidationReport report = validate(region);
  if (report.ok) return;
  std::ostringstream msg;
  msg << "invalid capacity region:";
  for (const auto& v : report.violations) msg << " " << v << ";";
  throw std::invalid_argument(msg.str());
}

bool contains(const CapacityRegion& region, const AllocationVector& rates,
              double tol) {
  if (rates.size() != region.num_routes())
    throw std::invalid_argument(
        "dimension mismatch: allocation has " + std::to_string(rates.size()) +
        " entries for " + std::to_string(region.num_routes()) + " routes");
  if ((rates.array() < -tol).any()) return false;
  const Eigen::VectorXd load = region.incidence * rates;
  return (load.array() <= region.capacities.array() + tol).all();
}

bool in_interior(const CapacityRegion& region, const Eigen::VectorXd& rho) {
  if (rho.size() != region.num_routes())
    throw std::invalid_argument(
        "dimension mismatch: rho has " + std::to_string(rho.size()) +
        " entries for " + std::to_string(region.num_routes()) + " routes");
  if ((rho.array() < 0.0).any()) return false;
  const Eigen::VectorXd load = region.incidence * rho;
  return (load.array() < region.capacities.array()).all();
}

double interior_slack(const CapacityRegion& region,
                      const Eigen::VectorXd& rho) {
  if (rho.size() != region.num_routes())
    throw std::invalid_argument("dimension mismatch in interior_slack");
  if ((rho.array() < 0.0).any()) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd load = region.incidence * rho;
  double slack = std::numeric_limits<double>::infinity();
  for (Eigen::Index l = 0; l < region.num_links(); ++l) {
    if (load[l] > 0.0)
      slack = std::min(slack, std::log(region.capacities[l] / load[l]));
  }
  return slack;
}

}  // namespace bwshare
