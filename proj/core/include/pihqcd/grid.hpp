#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pihqcd/common.hpp"

namespace pihqcd {

struct Bus {
  int id = 0;
  bool is_slack = false;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double reactance = 0.0;   // per unit, > 0
  double flow_limit = 0.0;  // MW, > 0
};

struct Generator {
  int bus = 0;
  double p_min = 0.0;  // MW
  double p_max = 0.0;  // MW
  double cost_quad = 0.0;  // $/MW^2
  double cost_lin = 0.0;   // $/MW
  double ramp_limit = 0.0;  // MW per step
};

struct StorageUnit {
  int bus = 0;
  double capacity = 0.0;    // MWh
  double soc_init = 0.0;    // MWh
  double charge_eff = 1.0;     // (0,1]
  double discharge_eff = 1.0;  // (0,1]
  double power_limit = 0.0;    // MW bound on both charge and discharge
  double throughput_cost = 0.0;  // $/MWh moved, optional in case files
};

struct DemandProfile {
  int bus = 0;
  std::vector<double> fixed_load;     // MW per timestep
  std::vector<double> flexible_min;   // MW per timestep
  std::vector<double> flexible_max;   // MW per timestep
};

struct RenewableScenario {
  int bus = 0;
  std::vector<double> available_power;  // MW per timestep
  double probability = 1.0;
};

struct GridCase {
  std::string name;
  int horizon = 0;  // T
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<StorageUnit> storage_units;
  std::vector<DemandProfile> demand_profiles;
  std::vector<RenewableScenario> scenarios;

  int slack_bus() const;
  double total_fixed_load(int t) const;
  double fixed_load_at(int bus, int t) const;

  /// Checks every model invariant; throws CaseError naming the first
  /// violation. Called by load_case and expected before any downstream use.
  void validate() const;
};

enum class VarKind { Gen, Charge, Discharge, Demand, Curtail };

const char* var_kind_name(VarKind k);

/// One continuous decision variable instance: a device quantity at one
/// timestep. Curtailment belongs to a renewable bus (shared across
/// scenarios).
struct VarInfo {
  VarKind kind = VarKind::Gen;
  int device = 0;  // index into the matching device vector
  int bus = 0;
  int t = 0;
  double lo = 0.0;  // MW
  double hi = 0.0;  // MW
};

/// Flattened ordering of the dispatch vector x. Core variables (generation,
/// charge, discharge, flexible demand) are grouped by bus, then timestep,
/// then kind; renewable curtailment variables (one per renewable bus and
/// timestep, range up to the largest scenario availability) follow.
class DispatchLayout {
 public:
  DispatchLayout() = default;
  explicit DispatchLayout(const GridCase& c);

  const std::vector<VarInfo>& vars() const { return vars_; }
  std::size_t size() const { return vars_.size(); }
  int core_count() const { return core_count_; }
  /// Per-timestep decision count n (core kinds only).
  int core_per_step() const { return horizon_ > 0 ? core_count_ / horizon_ : 0; }
  int horizon() const { return horizon_; }

  /// Index of a core variable, -1 if absent.
  int find(VarKind kind, int device, int t) const;
  /// Index of the curtailment variable at one renewable bus and timestep,
  /// -1 if absent.
  int find_curtail(int bus, int t) const;

 private:
  std::vector<VarInfo> vars_;
  int core_count_ = 0;
  int horizon_ = 0;
};

/// Dispatch values in MW, ordered by DispatchLayout.
using DispatchVector = std::vector<double>;

/// Rescales all renewable traces so expected renewable energy equals
/// `penetration` times total fixed-load energy. Idempotent at fixed
/// penetration.
GridCase scale_case(const GridCase& c, double penetration);

/// Draws `count` multiplicative AR(1)-perturbed copies of a base trace
/// (coefficient 0.8, unit-variance innovations scaled by noise_scale),
/// clipped at zero, with equal probabilities. Deterministic in seed.
std::vector<RenewableScenario> generate_scenarios(const RenewableScenario& base,
                                                  int count, double noise_scale,
                                                  std::uint64_t seed);

}  // namespace pihqcd
