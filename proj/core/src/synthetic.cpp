#include "pihqcd/synthetic.hpp"

#include <cmath>

#include "pihqcd/linearize.hpp"

namespace pihqcd {

GridCase path_grid_case(int buses) {
  if (buses < 2) throw ComputeError("path_grid_case needs at least 2 buses");
  GridCase c;
  c.name = "path" + std::to_string(buses);
  c.horizon = 1;
  for (int b = 0; b < buses; ++b) c.buses.push_back({b, b == 0});
  for (int b = 0; b + 1 < buses; ++b)
    c.branches.push_back({b, b + 1, 0.1 + 0.01 * b, 50.0});
  for (int b = 0; b < buses; ++b) {
    Generator g;
    g.bus = b;
    g.p_min = 0.0;
    g.p_max = 1.0;
    g.cost_quad = 0.2;
    g.cost_lin = 1.0 + 0.25 * (b % 3);
    g.ramp_limit = 10.0;
    c.generators.push_back(g);
  }
  DemandProfile d;
  d.bus = buses - 1;
  d.fixed_load = {0.4 * buses};
  d.flexible_min = {0.0};
  d.flexible_max = {0.0};  // degenerate band: no demand qubits
  c.demand_profiles.push_back(d);
  RenewableScenario s;
  s.bus = buses - 1;
  s.available_power = {0.0};  // zero trace: no curtailment qubits
  s.probability = 1.0;
  c.scenarios.push_back(s);
  c.validate();
  return c;
}

IsingHamiltonian random_ising(int num_qubits, double pair_density, std::uint64_t seed) {
  Rng rng(seed);
  IsingHamiltonian h(num_qubits, 0.0);
  for (int i = 0; i < num_qubits; ++i) h.add_term(i, -1, rng.uniform(-1.0, 1.0));
  for (int i = 0; i < num_qubits; ++i)
    for (int j = i + 1; j < num_qubits; ++j)
      if (rng.uniform() < pair_density) h.add_term(i, j, rng.uniform(-1.0, 1.0));
  return h;
}

ProbeInstance default_probe_instance(AnsatzFamily family, int num_qubits) {
  const GridCase c = path_grid_case(num_qubits);
  const Encoding enc = build_encoding(c, 1);
  if (enc.num_qubits() != num_qubits)
    throw ComputeError("path grid encoding size mismatch");
  const SensitivityModel m = build_ptdf(c);
  PenaltyConfig cfg;
  cfg.alpha = 0.5;
  cfg.mu = 1.0;
  cfg.gamma = 0.5;
  cfg.rho_ramp = 0.0;
  cfg.inequality_mode = InequalityMode::Literal;
  IsingHamiltonian ham = assemble_hamiltonian(c, enc, m, cfg);

  // Normalize to unit coefficient mass so variances are comparable across N.
  const double norm = ham.coefficient_norm();
  std::vector<double> w(ham.terms().size(), norm > 0 ? 1.0 / norm : 1.0);
  ham = ham.reweighted(w);
  ham.set_constant(0.0);

  ProbeInstance inst;
  inst.ham = std::move(ham);
  switch (family) {
    case AnsatzFamily::Topology: {
      inst.ansatz = topology_ansatz(c, enc, 2);
      break;
    }
    case AnsatzFamily::LinearChain:
      inst.ansatz = linear_chain_ansatz(num_qubits, std::max(2, num_qubits / 2));
      break;
    case AnsatzFamily::AllToAll:
      inst.ansatz = all_to_all_ansatz(num_qubits, std::max(2, num_qubits / 2));
      break;
  }
  return inst;
}

}  // namespace pihqcd
