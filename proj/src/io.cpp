#include "bwshare/io.hpp"

#include "json.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace bwshare {

namespace {

using nlohmann::json;

json parse_document(const std::string& text, const std::string& what) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    throw std::invalid_argument("malformed JSON in " + what);
  return doc;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::invalid_argument("cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void check_keys(const json& obj, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!obj.is_object())
    throw std::invalid_argument("expected a JSON object in " + where);
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.count(key))
      throw std::invalid_argument("unknown key '" + key + "' in " + where);
  }
}

double number_at(const json& obj, const std::string& key,
                 const std::string& where) {
  if (!obj.contains(key))
    throw std::invalid_argument("missing key '" + key + "' in " + where);
  if (!obj[key].is_number())
    throw std::invalid_argument("key '" + key + "' in " + where +
                                " must be a number");
  return obj[key].get<double>();
}

long integer_at(const json& obj, const std::string& key,
                const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number_integer())
    throw std::invalid_argument("key '" + key + "' in " + where +
                                " must be an integer");
  return obj[key].get<long>();
}

std::string string_at(const json& obj, const std::string& key,
                      const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_string())
    throw std::invalid_argument("key '" + key + "' in " + where +
                                " must be a string");
  return obj[key].get<std::string>();
}

StageDistribution parse_stages(const json& obj, const std::string& where) {
  const std::string kind = string_at(obj, "kind", where);
  if (kind == "deterministic") {
    check_keys(obj, {"kind", "k"}, where);
    return StageDistribution::deterministic(integer_at(obj, "k", where));
  }
  if (kind == "geometric") {
    check_keys(obj, {"kind", "p"}, where);
    return StageDistribution::geometric(number_at(obj, "p", where));
  }
  if (kind == "two_point") {
    check_keys(obj, {"kind", "a", "b", "w"}, where);
    return StageDistribution::two_point(integer_at(obj, "a", where),
                                        integer_at(obj, "b", where),
                                        number_at(obj, "w", where));
  }
  throw std::invalid_argument("unknown stage kind '" + kind + "' in " + where);
}

}  // namespace

CapacityRegion parse_network(const std::string& json_text) {
  const json doc = parse_document(json_text, "network file");
  check_keys(doc, {"links", "routes"}, "network file");
  if (!doc.contains("links") || !doc["links"].is_array() ||
      !doc.contains("routes") || !doc["routes"].is_array())
    throw std::invalid_argument(
        "network file needs 'links' and 'routes' arrays");

  CapacityRegion region;
  std::map<std::string, Eigen::Index> link_index;
  for (const auto& link : doc["links"]) {
    check_keys(link, {"id", "capacity"}, "link entry");
    const std::string id = string_at(link, "id", "link entry");
    if (link_index.count(id))
      throw std::invalid_argument("duplicate link id '" + id + "'");
    link_index[id] = static_cast<Eigen::Index>(region.link_ids.size());
    region.link_ids.push_back(id);
  }
  region.capacities.resize(region.link_ids.size());
  for (std::size_t l = 0; l < region.link_ids.size(); ++l)
    region.capacities[l] =
        number_at(doc["links"][l], "capacity", "link entry");

  std::set<std::string> route_ids;
  const Eigen::Index links = static_cast<Eigen::Index>(region.link_ids.size());
  const Eigen::Index routes = static_cast<Eigen::Index>(doc["routes"].size());
  region.incidence = Eigen::MatrixXd::Zero(links, routes);
  for (Eigen::Index r = 0; r < routes; ++r) {
    const json& route = doc["routes"][r];
    check_keys(route, {"id", "links"}, "route entry");
    const std::string id = string_at(route, "id", "route entry");
    if (!route_ids.insert(id).second)
      throw std::invalid_argument("duplicate route id '" + id + "'");
    region.route_ids.push_back(id);
    if (!route.contains("links") || !route["links"].is_array())
      throw std::invalid_argument("route '" + id + "' needs a links array");
    for (const auto& link_name : route["links"]) {
      if (!link_name.is_string())
        throw std::invalid_argument("route '" + id +
                                    "' links must be strings");
      auto it = link_index.find(link_name.get<std::string>());
      if (it == link_index.end())
        throw std::invalid_argument("route '" + id + "' references unknown "
                                    "link '" +
                                    link_name.get<std::string>() + "'");
      if (region.incidence(it->second, r) != 0.0)
        throw std::invalid_argument("route '" + id + "' lists link '" +
                                    link_name.get<std::string>() + "' twice");
      region.incidence(it->second, r) = 1.0;
    }
  }
  return region;
}

CapacityRegion load_network(const std::string& path) {
  return parse_network(read_file(path));
}

std::string network_to_json(const CapacityRegion& region) {
  json doc;
  doc["links"] = json::array();
  for (Eigen::Index l = 0; l < region.num_links(); ++l)
    doc["links"].push_back(
        {{"id", region.link_ids[l]}, {"capacity", region.capacities[l]}});
  doc["routes"] = json::array();
  for (Eigen::Index r = 0; r < region.num_routes(); ++r) {
    json links = json::array();
    for (Eigen::Index l = 0; l < region.num_links(); ++l)
      if (region.incidence(l, r) > 0.0) links.push_back(region.link_ids[l]);
    doc["routes"].push_back({{"id", region.route_ids[r]}, {"links", links}});
  }
  return doc.dump(2) + "\n";
}

TrafficSpec parse_traffic(const std::string& json_text) {
  const json doc = parse_document(json_text, "traffic file");
  check_keys(doc, {"delta", "routes"}, "traffic file");
  TrafficSpec traffic;
  traffic.stage_mean = number_at(doc, "delta", "traffic file");
  if (!doc.contains("routes") || !doc["routes"].is_array())
    throw std::invalid_argument("traffic file needs a 'routes' array");
  for (const auto& route : doc["routes"]) {
    check_keys(route, {"id", "arrival_rate", "stages"}, "traffic route");
    RouteTraffic rt;
    rt.id = string_at(route, "id", "traffic route");
    rt.arrival_rate = number_at(route, "arrival_rate", "traffic route");
    if (!route.contains("stages"))
      throw std::invalid_argument("traffic route '" + rt.id +
                                  "' needs a stages object");
    rt.stages = parse_stages(route["stages"], "stages of route " + rt.id);
    traffic.routes.push_back(std::move(rt));
  }
  require_valid(traffic);
  return traffic;
}

TrafficSpec load_traffic(const std::string& path) {
  return parse_traffic(read_file(path));
}

std::string traffic_to_json(const TrafficSpec& traffic) {
  json doc;
  doc["delta"] = traffic.stage_mean;
  doc["routes"] = json::array();
  for (const auto& route : traffic.routes) {
    json stages;
    switch (route.stages.kind) {
      case StageDistribution::Kind::deterministic:
        stages = {{"kind", "deterministic"}, {"k", route.stages.k}};
        break;
      case StageDistribution::Kind::geometric:
        stages = {{"kind", "geometric"}, {"p", route.stages.p}};
        break;
      case StageDistribution::Kind::two_point:
        stages = {{"kind", "two_point"},
                  {"a", route.stages.a},
                  {"b", route.stages.b},
                  {"w", route.stages.w}};
        break;
    }
    doc["routes"].push_back({{"id", route.id},
                             {"arrival_rate", route.arrival_rate},
                             {"stages", stages}});
  }
  return doc.dump(2) + "\n";
}

LogPotential parse_potential_table(const std::string& json_text) {
  const json doc = parse_document(json_text, "potential table");
  check_keys(doc, {"cap", "log_phi"}, "potential table");
  if (!doc.contains("cap") || !doc["cap"].is_array() ||
      !doc.contains("log_phi") || !doc["log_phi"].is_array())
    throw std::invalid_argument(
        "potential table needs 'cap' and 'log_phi' arrays");
  FlowState cap(doc["cap"].size());
  for (Eigen::Index r = 0; r < cap.size(); ++r) {
    if (!doc["cap"][r].is_number_integer())
      throw std::invalid_argument("potential cap entries must be integers");
    cap[r] = doc["cap"][r].get<int>();
  }
  std::vector<double> values;
  values.reserve(doc["log_phi"].size());
  for (const auto& v : doc["log_phi"]) {
    if (!v.is_number())
      throw std::invalid_argument("log_phi entries must be numbers");
    values.push_back(v.get<double>());
  }
  return LogPotential::from_table(cap, std::move(values));
}

LogPotential load_potential_table(const std::string& path) {
  return parse_potential_table(read_file(path));
}

}  // namespace bwshare
