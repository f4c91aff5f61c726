#include "pihqcd/grid.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace pihqcd {

namespace {

std::string bus_list(const std::set<int>& buses) {
  std::ostringstream os;
  bool first = true;
  for (int b : buses) {
    if (!first) os << ",";
    os << b;
    first = false;
  }
  return os.str();
}

// Union-find over bus ids.
struct Dsu {
  std::vector<int> parent;
  explicit Dsu(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

int GridCase::slack_bus() const {
  for (const auto& b : buses)
    if (b.is_slack) return b.id;
  return -1;
}

double GridCase::total_fixed_load(int t) const {
  double s = 0.0;
  for (const auto& d : demand_profiles) s += d.fixed_load[static_cast<std::size_t>(t)];
  return s;
}

double GridCase::fixed_load_at(int bus, int t) const {
  double s = 0.0;
  for (const auto& d : demand_profiles)
    if (d.bus == bus) s += d.fixed_load[static_cast<std::size_t>(t)];
  return s;
}

void GridCase::validate() const {
  const int nb = static_cast<int>(buses.size());
  if (nb == 0) throw CaseError(name + ": case has no buses");
  if (horizon < 1) throw CaseError(name + ": horizon must be >= 1");

  for (int i = 0; i < nb; ++i)
    if (buses[static_cast<std::size_t>(i)].id != i)
      throw CaseError(name + ": bus ids must be contiguous from 0");

  int slack_count = 0;
  for (const auto& b : buses) slack_count += b.is_slack ? 1 : 0;
  if (slack_count > 1) throw CaseError(name + ": multiple slack buses");
  if (slack_count == 0) throw CaseError(name + ": no slack bus");

  auto check_bus = [&](int bus, const char* what) {
    if (bus < 0 || bus >= nb)
      throw CaseError(name + ": " + what + " references invalid bus " +
                      std::to_string(bus));
  };

  if (branches.empty() && nb > 1)
    throw CaseError(name + ": branch graph is not connected");
  Dsu dsu(nb);
  for (const auto& br : branches) {
    check_bus(br.from_bus, "branch");
    check_bus(br.to_bus, "branch");
    if (br.from_bus == br.to_bus)
      throw CaseError(name + ": branch endpoints must differ");
    if (!(br.reactance > 0.0))
      throw CaseError(name + ": branch reactance must be > 0");
    if (!(br.flow_limit > 0.0))
      throw CaseError(name + ": branch flow_limit must be > 0");
    dsu.unite(br.from_bus, br.to_bus);
  }
  const int root = dsu.find(slack_bus());
  std::set<int> stranded;
  for (int b = 0; b < nb; ++b)
    if (dsu.find(b) != root) stranded.insert(b);
  if (!stranded.empty())
    throw CaseError(name + ": branch graph is not connected; buses {" +
                    bus_list(stranded) + "} unreachable from slack");

  for (const auto& g : generators) {
    check_bus(g.bus, "generator");
    if (!(0.0 <= g.p_min && g.p_min <= g.p_max))
      throw CaseError(name + ": generator limits must satisfy 0 <= p_min <= p_max");
    if (!(g.ramp_limit > 0.0))
      throw CaseError(name + ": generator ramp_limit must be > 0");
    if (g.cost_quad < 0.0)
      throw CaseError(name + ": generator cost_quad must be >= 0");
  }

  for (const auto& s : storage_units) {
    check_bus(s.bus, "storage unit");
    if (!(s.capacity >= 0.0) || !(0.0 <= s.soc_init && s.soc_init <= s.capacity))
      throw CaseError(name + ": storage soc_init must lie in [0, capacity]");
    if (!(s.charge_eff > 0.0 && s.charge_eff <= 1.0) ||
        !(s.discharge_eff > 0.0 && s.discharge_eff <= 1.0))
      throw CaseError(name + ": storage efficiencies must lie in (0, 1]");
    if (!(s.power_limit > 0.0))
      throw CaseError(name + ": storage power_limit must be > 0");
    if (s.throughput_cost < 0.0)
      throw CaseError(name + ": storage throughput_cost must be >= 0");
  }

  const auto T = static_cast<std::size_t>(horizon);
  for (const auto& d : demand_profiles) {
    check_bus(d.bus, "demand profile");
    if (d.fixed_load.size() != T || d.flexible_min.size() != T ||
        d.flexible_max.size() != T)
      throw CaseError(name + ": demand profile lengths must equal horizon");
    for (std::size_t t = 0; t < T; ++t) {
      if (d.fixed_load[t] < 0.0)
        throw CaseError(name + ": fixed_load must be >= 0");
      if (d.flexible_min[t] > d.flexible_max[t])
        throw CaseError(name + ": flexible demand band must have d_min <= d_max");
    }
  }

  if (scenarios.empty())
    throw CaseError(name + ": case must carry at least one renewable scenario");
  double psum = 0.0;
  for (const auto& s : scenarios) {
    check_bus(s.bus, "scenario");
    if (!(s.probability > 0.0 && s.probability <= 1.0))
      throw CaseError(name + ": scenario probability must lie in (0, 1]");
    if (s.available_power.size() != T)
      throw CaseError(name + ": scenario trace length must equal horizon");
    for (double v : s.available_power)
      if (v < 0.0) throw CaseError(name + ": available_power must be >= 0");
    psum += s.probability;
  }
  if (std::abs(psum - 1.0) > 1e-9)
    throw CaseError(name + ": scenario probabilities must sum to 1 (got " +
                    format_double(psum) + ")");
}

const char* var_kind_name(VarKind k) {
  switch (k) {
    case VarKind::Gen: return "gen";
    case VarKind::Charge: return "charge";
    case VarKind::Discharge: return "discharge";
    case VarKind::Demand: return "demand";
    case VarKind::Curtail: return "curtail";
  }
  return "?";
}

DispatchLayout::DispatchLayout(const GridCase& c) : horizon_(c.horizon) {
  struct Entry {
    int bus;
    int t;
    int kind_rank;
    int device;
    VarInfo info;
  };
  std::vector<Entry> core;
  auto push = [&](VarKind kind, int device, int bus, int t, double lo, double hi) {
    VarInfo v;
    v.kind = kind;
    v.device = device;
    v.bus = bus;
    v.t = t;
    v.lo = lo;
    v.hi = hi;
    core.push_back({bus, t, static_cast<int>(kind), device, v});
  };

  for (int t = 0; t < c.horizon; ++t) {
    for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
      const auto& gen = c.generators[static_cast<std::size_t>(g)];
      push(VarKind::Gen, g, gen.bus, t, gen.p_min, gen.p_max);
    }
    for (int u = 0; u < static_cast<int>(c.storage_units.size()); ++u) {
      const auto& su = c.storage_units[static_cast<std::size_t>(u)];
      push(VarKind::Charge, u, su.bus, t, 0.0, su.power_limit);
      push(VarKind::Discharge, u, su.bus, t, 0.0, su.power_limit);
    }
    for (int d = 0; d < static_cast<int>(c.demand_profiles.size()); ++d) {
      const auto& dp = c.demand_profiles[static_cast<std::size_t>(d)];
      push(VarKind::Demand, d, dp.bus, t,
           dp.flexible_min[static_cast<std::size_t>(t)],
           dp.flexible_max[static_cast<std::size_t>(t)]);
    }
  }
  std::stable_sort(core.begin(), core.end(), [](const Entry& a, const Entry& b) {
    if (a.bus != b.bus) return a.bus < b.bus;
    if (a.t != b.t) return a.t < b.t;
    if (a.kind_rank != b.kind_rank) return a.kind_rank < b.kind_rank;
    return a.device < b.device;
  });
  for (const auto& e : core) vars_.push_back(e.info);
  core_count_ = static_cast<int>(vars_.size());

  // One curtailment variable per renewable bus per timestep, shared by all
  // scenarios at that bus; the range covers the largest availability.
  std::vector<int> renewable_buses;
  for (const auto& sc : c.scenarios)
    if (std::find(renewable_buses.begin(), renewable_buses.end(), sc.bus) ==
        renewable_buses.end())
      renewable_buses.push_back(sc.bus);
  std::sort(renewable_buses.begin(), renewable_buses.end());
  for (std::size_t b = 0; b < renewable_buses.size(); ++b) {
    for (int t = 0; t < c.horizon; ++t) {
      double hi = 0.0;
      for (const auto& sc : c.scenarios)
        if (sc.bus == renewable_buses[b])
          hi = std::max(hi, sc.available_power[static_cast<std::size_t>(t)]);
      VarInfo v;
      v.kind = VarKind::Curtail;
      v.device = static_cast<int>(b);
      v.bus = renewable_buses[b];
      v.t = t;
      v.lo = 0.0;
      v.hi = hi;
      vars_.push_back(v);
    }
  }
}

int DispatchLayout::find(VarKind kind, int device, int t) const {
  for (int i = 0; i < core_count_; ++i) {
    const auto& v = vars_[static_cast<std::size_t>(i)];
    if (v.kind == kind && v.device == device && v.t == t) return i;
  }
  return -1;
}

int DispatchLayout::find_curtail(int bus, int t) const {
  for (int i = core_count_; i < static_cast<int>(vars_.size()); ++i) {
    const auto& v = vars_[static_cast<std::size_t>(i)];
    if (v.bus == bus && v.t == t) return i;
  }
  return -1;
}

GridCase scale_case(const GridCase& c, double penetration) {
  if (penetration < 0.0 || penetration > 1.0)
    throw CaseError(c.name + ": penetration must lie in [0, 1]");
  double load_energy = 0.0;
  for (int t = 0; t < c.horizon; ++t) load_energy += c.total_fixed_load(t);
  if (load_energy <= 0.0)
    throw CaseError(c.name + ": zero total load, cannot normalize penetration");

  GridCase out = c;
  if (penetration == 0.0) {
    for (auto& s : out.scenarios)
      std::fill(s.available_power.begin(), s.available_power.end(), 0.0);
    return out;
  }
  double renew_energy = 0.0;
  for (const auto& s : c.scenarios)
    for (double v : s.available_power) renew_energy += s.probability * v;
  if (renew_energy <= 0.0)
    throw CaseError(c.name + ": case has no renewable energy to scale");
  const double factor = penetration * load_energy / renew_energy;
  for (auto& s : out.scenarios)
    for (double& v : s.available_power) v *= factor;
  return out;
}

std::vector<RenewableScenario> generate_scenarios(const RenewableScenario& base,
                                                  int count, double noise_scale,
                                                  std::uint64_t seed) {
  if (count < 1) throw CaseError("generate_scenarios: count must be >= 1");
  if (noise_scale < 0.0)
    throw CaseError("generate_scenarios: noise_scale must be >= 0");
  constexpr double kAr1 = 0.8;
  const double innovation = std::sqrt(1.0 - kAr1 * kAr1);

  std::vector<RenewableScenario> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    RenewableScenario s = base;
    s.probability = 1.0 / count;
    double e = 0.0;
    for (std::size_t t = 0; t < s.available_power.size(); ++t) {
      e = (t == 0) ? rng.normal() : kAr1 * e + innovation * rng.normal();
      s.available_power[t] = base.available_power[t] *
                             std::max(0.0, 1.0 + noise_scale * e);
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace pihqcd
