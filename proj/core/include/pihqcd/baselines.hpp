#pragma once

#include <cstdint>
#include <string>

#include "pihqcd/hybrid.hpp"

namespace pihqcd {

struct OracleResult {
  std::uint64_t best_bits = 0;
  double best_energy = 0.0;
  std::string method;
  bool exhaustive = false;  // true only for brute_force
};

/// Exhaustive scan of the energy table; ties broken toward the lowest
/// bitstring value. N <= 24.
OracleResult brute_force(const IsingHamiltonian& h);

/// Geometric temperature schedule between factors of the estimated energy
/// range.
struct AnnealSchedule {
  double t_hi_factor = 2.0;
  double t_lo_factor = 1e-3;
};

/// Single-spin-flip Metropolis annealer, deterministic in seed.
OracleResult simulated_annealing(const IsingHamiltonian& h, int sweeps,
                                 const AnnealSchedule& schedule, std::uint64_t seed);

/// Continuous projected-gradient descent of the quadratic dispatch cost
/// over the feasible set: the deterministic-OPF comparison row and the
/// 1.000 p.u. cost normalization anchor.
DispatchSolution classical_dispatch(const GridCase& c, const SensitivityModel& m,
                                    double tol = 1e-8);

/// Ablation baseline: generic ansatz (no topology), beta = 0, lambda = 0,
/// literal penalties.
OptimizerConfig generic_vqa_config(OptimizerConfig base);
OptimizerConfig generic_vqa_config();

}  // namespace pihqcd
