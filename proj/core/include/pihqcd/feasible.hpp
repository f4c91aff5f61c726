#pragma once

#include <string>
#include <vector>

#include "pihqcd/grid.hpp"
#include "pihqcd/linearize.hpp"

namespace pihqcd {

/// lo <= a.x <= up with sparse a; equalities have lo == up.
struct Slab {
  std::vector<std::pair<int, double>> terms;
  double lo = 0.0;
  double up = 0.0;
  std::string tag;
  double norm2 = 0.0;  // |a|^2, precomputed
};

/// Intersection of the variable box with balance hyperplanes (per
/// timestep/scenario), flow slabs (+-F^max), ramp slabs and
/// forward-substituted SOC slabs. Closed and convex.
class FeasibleSet {
 public:
  FeasibleSet() = default;
  FeasibleSet(const GridCase& c, const DispatchLayout& layout,
              const SensitivityModel& m);

  const std::vector<double>& box_lo() const { return lo_; }
  const std::vector<double>& box_hi() const { return hi_; }
  const std::vector<Slab>& slabs() const { return slabs_; }
  std::size_t dim() const { return lo_.size(); }

  /// Max constraint violation of x (box and slabs), in MW.
  double max_residual(const DispatchVector& x) const;
  /// Per-family max violations, keyed box/balance/flow/ramp/soc.
  std::vector<std::pair<std::string, double>> residuals(const DispatchVector& x) const;

 private:
  std::vector<double> lo_, hi_;
  std::vector<Slab> slabs_;
};

struct ProjectionOptions {
  double tol = 1e-8;
  int max_sweeps = 500;
};

/// Euclidean projection onto the feasible set via Dykstra's alternating
/// projections (exact for intersections of convex sets in the limit).
/// Throws ComputeError carrying the residual if the sweep cap is hit while
/// still infeasible.
DispatchVector project(const DispatchVector& z, const FeasibleSet& set,
                       const ProjectionOptions& opts = {});

}  // namespace pihqcd
