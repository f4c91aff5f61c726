#pragma once

#include <cstdint>

#include "pihqcd/qsim.hpp"

namespace pihqcd {

/// Chain of `buses` buses, one generator each, fixed loads, unit horizon,
/// single zero renewable scenario: encodes to exactly `buses` qubits at
/// b = 1. The instance family behind the variance study.
GridCase path_grid_case(int buses);

/// Random diagonal Hamiltonian: fields on every qubit, couplings on a
/// seeded subset of pairs, coefficients uniform in [-1, 1].
IsingHamiltonian random_ising(int num_qubits, double pair_density, std::uint64_t seed);

/// Shipped probe configuration: path-grid dispatch Hamiltonian normalized
/// to unit coefficient mass; topology family at constant depth 2, generic
/// families at depth ~ N/2 (the deep-random regime).
ProbeInstance default_probe_instance(AnsatzFamily family, int num_qubits);

}  // namespace pihqcd
