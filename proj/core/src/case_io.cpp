#include "pihqcd/case_io.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace pihqcd {

using nlohmann::json;

namespace {

double num(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key))
    throw CaseError(ctx + ": missing field '" + key + "'");
  if (!j[key].is_number())
    throw CaseError(ctx + ": field '" + key + "' must be numeric");
  return j[key].get<double>();
}

double num_or(const json& j, const char* key, double fallback) {
  return j.contains(key) ? j[key].get<double>() : fallback;
}

std::vector<double> num_array(const json& j, const char* key, const std::string& ctx) {
  if (!j.contains(key) || !j[key].is_array())
    throw CaseError(ctx + ": missing array field '" + key + "'");
  std::vector<double> out;
  for (const auto& v : j[key]) {
    if (!v.is_number())
      throw CaseError(ctx + ": array '" + key + "' must be numeric");
    out.push_back(v.get<double>());
  }
  return out;
}

}  // namespace

GridCase parse_case(const std::string& text, const std::string& origin) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw CaseError(origin + ": malformed case file: " + e.what());
  }

  GridCase c;
  c.name = j.value("name", origin);
  if (!j.contains("horizon") || !j["horizon"].is_number_integer())
    throw CaseError(origin + ": missing integer field 'horizon'");
  c.horizon = j["horizon"].get<int>();

  for (const auto& jb : j.value("buses", json::array())) {
    Bus b;
    b.id = static_cast<int>(num(jb, "id", c.name + " bus"));
    b.is_slack = jb.value("is_slack", false);
    c.buses.push_back(b);
  }
  for (const auto& jb : j.value("branches", json::array())) {
    Branch br;
    br.from_bus = static_cast<int>(num(jb, "from_bus", c.name + " branch"));
    br.to_bus = static_cast<int>(num(jb, "to_bus", c.name + " branch"));
    br.reactance = num(jb, "reactance", c.name + " branch");
    br.flow_limit = num(jb, "flow_limit", c.name + " branch");
    c.branches.push_back(br);
  }
  for (const auto& jg : j.value("generators", json::array())) {
    Generator g;
    g.bus = static_cast<int>(num(jg, "bus", c.name + " generator"));
    g.p_min = num(jg, "p_min", c.name + " generator");
    g.p_max = num(jg, "p_max", c.name + " generator");
    g.cost_quad = num(jg, "cost_quad", c.name + " generator");
    g.cost_lin = num(jg, "cost_lin", c.name + " generator");
    g.ramp_limit = num(jg, "ramp_limit", c.name + " generator");
    c.generators.push_back(g);
  }
  for (const auto& js : j.value("storage", json::array())) {
    StorageUnit s;
    s.bus = static_cast<int>(num(js, "bus", c.name + " storage"));
    s.capacity = num(js, "capacity", c.name + " storage");
    s.soc_init = num(js, "soc_init", c.name + " storage");
    s.charge_eff = num(js, "charge_eff", c.name + " storage");
    s.discharge_eff = num(js, "discharge_eff", c.name + " storage");
    s.power_limit = num(js, "power_limit", c.name + " storage");
    s.throughput_cost = num_or(js, "throughput_cost", 0.0);
    c.storage_units.push_back(s);
  }
  for (const auto& jd : j.value("demand", json::array())) {
    DemandProfile d;
    d.bus = static_cast<int>(num(jd, "bus", c.name + " demand"));
    d.fixed_load = num_array(jd, "fixed_load", c.name + " demand");
    d.flexible_min = num_array(jd, "flexible_min", c.name + " demand");
    d.flexible_max = num_array(jd, "flexible_max", c.name + " demand");
    c.demand_profiles.push_back(d);
  }
  for (const auto& jr : j.value("scenarios", json::array())) {
    RenewableScenario r;
    r.bus = static_cast<int>(num(jr, "bus", c.name + " scenario"));
    r.available_power = num_array(jr, "available_power", c.name + " scenario");
    r.probability = num(jr, "probability", c.name + " scenario");
    c.scenarios.push_back(r);
  }

  c.validate();
  return c;
}

GridCase load_case(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CaseError("cannot open case file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_case(buf.str(), path);
}

std::string case_to_json(const GridCase& c) {
  json j;
  j["name"] = c.name;
  j["horizon"] = c.horizon;
  j["buses"] = json::array();
  for (const auto& b : c.buses)
    j["buses"].push_back({{"id", b.id}, {"is_slack", b.is_slack}});
  j["branches"] = json::array();
  for (const auto& br : c.branches)
    j["branches"].push_back({{"from_bus", br.from_bus},
                             {"to_bus", br.to_bus},
                             {"reactance", br.reactance},
                             {"flow_limit", br.flow_limit}});
  j["generators"] = json::array();
  for (const auto& g : c.generators)
    j["generators"].push_back({{"bus", g.bus},
                               {"p_min", g.p_min},
                               {"p_max", g.p_max},
                               {"cost_quad", g.cost_quad},
                               {"cost_lin", g.cost_lin},
                               {"ramp_limit", g.ramp_limit}});
  j["storage"] = json::array();
  for (const auto& s : c.storage_units)
    j["storage"].push_back({{"bus", s.bus},
                            {"capacity", s.capacity},
                            {"soc_init", s.soc_init},
                            {"charge_eff", s.charge_eff},
                            {"discharge_eff", s.discharge_eff},
                            {"power_limit", s.power_limit},
                            {"throughput_cost", s.throughput_cost}});
  j["demand"] = json::array();
  for (const auto& d : c.demand_profiles)
    j["demand"].push_back({{"bus", d.bus},
                           {"fixed_load", d.fixed_load},
                           {"flexible_min", d.flexible_min},
                           {"flexible_max", d.flexible_max}});
  j["scenarios"] = json::array();
  for (const auto& r : c.scenarios)
    j["scenarios"].push_back({{"bus", r.bus},
                              {"available_power", r.available_power},
                              {"probability", r.probability}});
  return j.dump(2) + "\n";
}

void save_case(const GridCase& c, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw CaseError("cannot write case file: " + path);
  out << case_to_json(c);
}

}  // namespace pihqcd
