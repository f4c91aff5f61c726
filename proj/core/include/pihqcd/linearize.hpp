#pragma once

#include <Eigen/Dense>

#include "pihqcd/grid.hpp"

namespace pihqcd {

/// DC power-flow sensitivities: ptdf maps nodal injections (MW) to branch
/// flows (MW, from_bus -> to_bus positive). The slack column is zero, so
/// unbalanced injections are implicitly absorbed at the slack bus.
struct SensitivityModel {
  Eigen::MatrixXd ptdf;  // rows = branches, cols = buses
  int slack_bus = 0;
  DispatchVector base_point;  // linearization bookkeeping only under DC
};

/// Builds the PTDF from branch susceptances and the reduced nodal
/// susceptance matrix. Throws ComputeError naming the disconnected
/// component if the graph does not reach the slack.
SensitivityModel build_ptdf(const GridCase& c);

/// Nodal injection (MW) at each bus for one timestep of one scenario:
/// generation + discharge - charge - fixed load - flexible demand
/// + renewable available - curtailment.
Eigen::VectorXd nodal_injections(const GridCase& c, const DispatchLayout& layout,
                                 const DispatchVector& x, int scenario, int t);

/// flows = ptdf * injections at timestep t of the given scenario.
std::vector<double> line_flows(const SensitivityModel& m, const GridCase& c,
                               const DispatchLayout& layout, const DispatchVector& x,
                               int scenario, int t);

/// Under the DC model the PTDF is state independent; this updates the
/// linearization base point only. It is the hook the hybrid loop calls once
/// per outer iteration.
SensitivityModel refresh_sensitivities(const SensitivityModel& m,
                                       DispatchVector new_base);

}  // namespace pihqcd
