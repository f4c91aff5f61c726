#include "pihqcd/feasible.hpp"

#include <algorithm>
#include <cmath>

namespace pihqcd {

namespace {

double slab_value(const Slab& s, const DispatchVector& x) {
  double v = 0.0;
  for (const auto& [idx, coef] : s.terms) v += coef * x[static_cast<std::size_t>(idx)];
  return v;
}

void finish_slab(Slab& s) {
  s.norm2 = 0.0;
  for (const auto& [idx, coef] : s.terms) {
    (void)idx;
    s.norm2 += coef * coef;
  }
}

}  // namespace

FeasibleSet::FeasibleSet(const GridCase& c, const DispatchLayout& layout,
                         const SensitivityModel& m) {
  lo_.reserve(layout.size());
  hi_.reserve(layout.size());
  for (const auto& v : layout.vars()) {
    lo_.push_back(v.lo);
    hi_.push_back(v.hi);
  }

  auto injection_sign = [](VarKind k) {
    switch (k) {
      case VarKind::Gen:
      case VarKind::Discharge: return 1.0;
      case VarKind::Charge:
      case VarKind::Demand:
      case VarKind::Curtail: return -1.0;
    }
    return 0.0;
  };

  // Balance on the expected renewable availability: one hyperplane per
  // timestep. Per-scenario equalities are mutually inconsistent for shared
  // curtailment, so the expectation is the projectable reading; scenario
  // spread is handled by the penalty blocks and the risk ranking.
  for (int t = 0; t < c.horizon; ++t) {
    Slab bal;
    bal.tag = "balance";
    for (std::size_t i = 0; i < layout.size(); ++i) {
      const auto& v = layout.vars()[i];
      if (v.t != t) continue;
      bal.terms.emplace_back(static_cast<int>(i), injection_sign(v.kind));
    }
    double expected_avail = 0.0;
    for (const auto& sc : c.scenarios)
      expected_avail += sc.probability * sc.available_power[static_cast<std::size_t>(t)];
    bal.lo = bal.up = c.total_fixed_load(t) - expected_avail;
    finish_slab(bal);
    slabs_.push_back(std::move(bal));
  }

  // Flow limits per scenario: inequalities remain jointly satisfiable.
  for (int s = 0; s < static_cast<int>(c.scenarios.size()); ++s) {
    for (int l = 0; l < static_cast<int>(c.branches.size()); ++l) {
      const auto& br = c.branches[static_cast<std::size_t>(l)];
      for (int t = 0; t < c.horizon; ++t) {
        Slab fl;
        fl.tag = "flow";
        double offset = 0.0;
        for (std::size_t i = 0; i < layout.size(); ++i) {
          const auto& v = layout.vars()[i];
          if (v.t != t) continue;
          const double coef = m.ptdf(l, v.bus) * injection_sign(v.kind);
          if (coef != 0.0) fl.terms.emplace_back(static_cast<int>(i), coef);
        }
        for (const auto& d : c.demand_profiles)
          offset -= m.ptdf(l, d.bus) * d.fixed_load[static_cast<std::size_t>(t)];
        const auto& sc = c.scenarios[static_cast<std::size_t>(s)];
        offset += m.ptdf(l, sc.bus) * sc.available_power[static_cast<std::size_t>(t)];
        fl.lo = -br.flow_limit - offset;
        fl.up = br.flow_limit - offset;
        if (fl.terms.empty()) continue;
        finish_slab(fl);
        slabs_.push_back(std::move(fl));
      }
    }
  }

  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
    const auto& gen = c.generators[static_cast<std::size_t>(g)];
    for (int t = 1; t < c.horizon; ++t) {
      Slab ramp;
      ramp.tag = "ramp";
      ramp.terms.emplace_back(layout.find(VarKind::Gen, g, t), 1.0);
      ramp.terms.emplace_back(layout.find(VarKind::Gen, g, t - 1), -1.0);
      ramp.lo = -gen.ramp_limit;
      ramp.up = gen.ramp_limit;
      finish_slab(ramp);
      slabs_.push_back(std::move(ramp));
    }
  }

  for (int u = 0; u < static_cast<int>(c.storage_units.size()); ++u) {
    const auto& su = c.storage_units[static_cast<std::size_t>(u)];
    for (int t_end = 1; t_end <= c.horizon; ++t_end) {
      Slab soc;
      soc.tag = "soc";
      for (int tau = 0; tau < t_end; ++tau) {
        soc.terms.emplace_back(layout.find(VarKind::Charge, u, tau), su.charge_eff);
        soc.terms.emplace_back(layout.find(VarKind::Discharge, u, tau),
                               -1.0 / su.discharge_eff);
      }
      soc.lo = 0.0 - su.soc_init;
      soc.up = su.capacity - su.soc_init;
      finish_slab(soc);
      slabs_.push_back(std::move(soc));
    }
  }
}

double FeasibleSet::max_residual(const DispatchVector& x) const {
  double r = 0.0;
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    r = std::max(r, lo_[i] - x[i]);
    r = std::max(r, x[i] - hi_[i]);
  }
  for (const auto& s : slabs_) {
    const double v = slab_value(s, x);
    r = std::max(r, s.lo - v);
    r = std::max(r, v - s.up);
  }
  return r;
}

std::vector<std::pair<std::string, double>> FeasibleSet::residuals(
    const DispatchVector& x) const {
  std::vector<std::pair<std::string, double>> out{
      {"box", 0.0}, {"balance", 0.0}, {"flow", 0.0}, {"ramp", 0.0}, {"soc", 0.0}};
  auto bump = [&](const std::string& tag, double v) {
    for (auto& [name, r] : out)
      if (name == tag) r = std::max(r, v);
  };
  for (std::size_t i = 0; i < lo_.size(); ++i)
    bump("box", std::max(lo_[i] - x[i], x[i] - hi_[i]));
  for (const auto& s : slabs_) {
    const double v = slab_value(s, x);
    bump(s.tag, std::max(s.lo - v, v - s.up));
  }
  for (auto& [name, r] : out) r = std::max(r, 0.0);
  return out;
}

DispatchVector project(const DispatchVector& z, const FeasibleSet& set,
                       const ProjectionOptions& opts) {
  if (z.size() != set.dim()) throw ComputeError("project: dimension mismatch");
  const std::size_t n = z.size();
  const auto& slabs = set.slabs();

  DispatchVector x = z;
  // Dykstra corrections, one per constraint set (box is set 0).
  std::vector<DispatchVector> correction(slabs.size() + 1, DispatchVector(n, 0.0));

  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    double max_change = 0.0;

    // Box.
    {
      DispatchVector& p = correction[0];
      for (std::size_t i = 0; i < n; ++i) {
        const double y = x[i] + p[i];
        const double clamped = std::clamp(y, set.box_lo()[i], set.box_hi()[i]);
        p[i] = y - clamped;
        max_change = std::max(max_change, std::abs(clamped - x[i]));
        x[i] = clamped;
      }
    }

    for (std::size_t si = 0; si < slabs.size(); ++si) {
      const Slab& s = slabs[si];
      if (s.norm2 == 0.0) continue;
      DispatchVector& p = correction[si + 1];
      // y = x + correction restricted to the slab support.
      double v = 0.0;
      for (const auto& [idx, coef] : s.terms)
        v += coef * (x[static_cast<std::size_t>(idx)] + p[static_cast<std::size_t>(idx)]);
      double shift = 0.0;
      if (v > s.up)
        shift = (v - s.up) / s.norm2;
      else if (v < s.lo)
        shift = (v - s.lo) / s.norm2;
      for (const auto& [idx, coef] : s.terms) {
        const auto i = static_cast<std::size_t>(idx);
        const double y = x[i] + p[i];
        const double moved = y - coef * shift;
        p[i] = y - moved;
        max_change = std::max(max_change, std::abs(moved - x[i]));
        x[i] = moved;
      }
    }

    if (max_change <= opts.tol) return x;
  }

  // Sweep cap reached: accept if the point already meets the feasibility
  // tolerance, otherwise surface the residual.
  const double residual = set.max_residual(x);
  if (residual <= 1e-6) return x;
  throw ComputeError("projection did not converge in " +
                     std::to_string(opts.max_sweeps) +
                     " sweeps (residual " + format_double(residual) + ")");
}

}  // namespace pihqcd
