#include "pihqcd/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace pihqcd {

OracleResult brute_force(const IsingHamiltonian& h) {
  if (h.num_qubits() > kMaxSimQubits)
    throw ComputeError("brute_force: qubit count exceeds cap of " +
                       std::to_string(kMaxSimQubits));
  const std::vector<double> table = h.energy_table();
  OracleResult r;
  r.method = "brute_force";
  r.exhaustive = true;
  r.best_bits = 0;
  r.best_energy = table[0];
  for (std::uint64_t m = 1; m < table.size(); ++m) {
    if (table[m] < r.best_energy) {
      r.best_energy = table[m];
      r.best_bits = m;
    }
  }
  return r;
}

OracleResult simulated_annealing(const IsingHamiltonian& h, int sweeps,
                                 const AnnealSchedule& schedule, std::uint64_t seed) {
  if (sweeps < 1) throw ComputeError("simulated_annealing: sweeps must be >= 1");
  const int n = h.num_qubits();
  Rng rng(seed);

  // Instance-scale-free schedule: estimate the energy range from random
  // probes.
  double emin = h.energy(0), emax = emin;
  for (int i = 0; i < 256; ++i) {
    const std::uint64_t m = rng.integer(1ull << n);
    const double e = h.energy(m);
    emin = std::min(emin, e);
    emax = std::max(emax, e);
  }
  const double range = std::max(emax - emin, 1e-9);
  const double t_hi = schedule.t_hi_factor * range;
  const double t_lo = schedule.t_lo_factor * range;

  // Field/adjacency view for O(deg) flip deltas.
  std::vector<double> field(static_cast<std::size_t>(n), 0.0);
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n));
  for (const auto& t : h.terms()) {
    if (t.j < 0) {
      field[static_cast<std::size_t>(t.i)] += t.coeff;
    } else {
      adj[static_cast<std::size_t>(t.i)].emplace_back(t.j, t.coeff);
      adj[static_cast<std::size_t>(t.j)].emplace_back(t.i, t.coeff);
    }
  }

  std::uint64_t state = rng.integer(1ull << n);
  std::vector<double> z(static_cast<std::size_t>(n));
  for (int q = 0; q < n; ++q) z[static_cast<std::size_t>(q)] = ((state >> q) & 1ull) ? -1.0 : 1.0;
  double energy = h.energy(state);

  OracleResult best;
  best.method = "simulated_annealing";
  best.best_bits = state;
  best.best_energy = energy;

  for (int sweep = 0; sweep < sweeps; ++sweep) {
    const double frac = sweeps > 1 ? static_cast<double>(sweep) / (sweeps - 1) : 1.0;
    const double temp = t_hi * std::pow(t_lo / t_hi, frac);
    for (int q = 0; q < n; ++q) {
      const auto qs = static_cast<std::size_t>(q);
      double local = field[qs];
      for (const auto& [j, cpl] : adj[qs]) local += cpl * z[static_cast<std::size_t>(j)];
      const double delta = -2.0 * z[qs] * local;
      if (delta <= 0.0 || rng.uniform() < std::exp(-delta / temp)) {
        z[qs] = -z[qs];
        state ^= (1ull << q);
        energy += delta;
        if (energy < best.best_energy) {
          best.best_energy = energy;
          best.best_bits = state;
        }
      }
    }
  }
  return best;
}

DispatchSolution classical_dispatch(const GridCase& c, const SensitivityModel& m,
                                    double tol) {
  const DispatchLayout layout(c);
  const FeasibleSet fset(c, layout, m);

  DispatchVector x(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i)
    x[i] = 0.5 * (fset.box_lo()[i] + fset.box_hi()[i]);
  x = project(x, fset);
  if (fset.max_residual(x) > 1e-6)
    throw ComputeError(c.name + ": infeasible continuous relaxation");

  double max_quad = 0.0;
  for (const auto& g : c.generators) max_quad = std::max(max_quad, g.cost_quad);
  const double eta = 1.0 / std::max(2.0 * max_quad, 1.0);

  auto grad = [&](const DispatchVector& v) {
    DispatchVector g(v.size(), 0.0);
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& var = layout.vars()[i];
      switch (var.kind) {
        case VarKind::Gen: {
          const auto& gen = c.generators[static_cast<std::size_t>(var.device)];
          g[i] = 2.0 * gen.cost_quad * v[i] + gen.cost_lin;
          break;
        }
        case VarKind::Charge:
        case VarKind::Discharge:
          g[i] = c.storage_units[static_cast<std::size_t>(var.device)].throughput_cost;
          break;
        default:
          g[i] = 0.0;
      }
    }
    return g;
  };

  // Averaged projected-gradient iteration (the map is nonexpansive, the
  // averaging guarantees convergence to a fixed point = KKT point).
  const int max_iters = 20000;
  ProjectionOptions popts;
  popts.tol = std::min(tol, 1e-9);
  popts.max_sweeps = 2000;
  for (int it = 0; it < max_iters; ++it) {
    const DispatchVector g = grad(x);
    DispatchVector y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - eta * g[i];
    const DispatchVector px = project(y, fset, popts);
    double step = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double nx = 0.5 * x[i] + 0.5 * px[i];
      step = std::max(step, std::abs(nx - x[i]));
      x[i] = nx;
    }
    if (step <= tol) break;
  }

  DispatchSolution sol;
  sol.x = x;
  sol.cost = economic_cost(c, layout, x);
  sol.utilization = renewable_utilization(c, layout, x);
  for (const auto& [name, r] : fset.residuals(x)) sol.residuals[name] = r;
  return sol;
}

OptimizerConfig generic_vqa_config(OptimizerConfig base) {
  base.family = AnsatzFamily::LinearChain;
  base.beta = 0.0;
  base.lambda = 0.0;
  base.penalties.inequality_mode = InequalityMode::Literal;
  return base;
}

OptimizerConfig generic_vqa_config() { return generic_vqa_config(OptimizerConfig{}); }

}  // namespace pihqcd
