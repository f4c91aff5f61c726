#include "pihqcd/linearize.hpp"

#include <functional>
#include <numeric>
#include <set>
#include <sstream>

namespace pihqcd {

SensitivityModel build_ptdf(const GridCase& c) {
  const int nb = static_cast<int>(c.buses.size());
  const int nl = static_cast<int>(c.branches.size());
  const int slack = c.slack_bus();
  if (slack < 0) throw ComputeError(c.name + ": no slack bus");

  // Connectivity first, so failures name the stranded buses instead of
  // surfacing as a singular factorization.
  {
    std::vector<int> parent(static_cast<std::size_t>(nb));
    std::iota(parent.begin(), parent.end(), 0);
    std::function<int(int)> find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x)
        x = parent[static_cast<std::size_t>(x)] =
            parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      return x;
    };
    for (const auto& br : c.branches)
      parent[static_cast<std::size_t>(find(br.from_bus))] = find(br.to_bus);
    std::set<int> stranded;
    for (int b = 0; b < nb; ++b)
      if (find(b) != find(slack)) stranded.insert(b);
    if (!stranded.empty()) {
      std::ostringstream os;
      os << c.name << ": singular susceptance matrix, buses {";
      bool first = true;
      for (int b : stranded) {
        if (!first) os << ",";
        os << b;
        first = false;
      }
      os << "} disconnected from slack";
      throw ComputeError(os.str());
    }
  }

  // Nodal susceptance B = A^T diag(1/x) A, reduced by removing the slack
  // row/column; PTDF = diag(1/x) A_r B_r^{-1}, zero-padded at the slack.
  Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(nl, nb);
  Eigen::VectorXd susceptance(nl);
  for (int l = 0; l < nl; ++l) {
    const auto& br = c.branches[static_cast<std::size_t>(l)];
    incidence(l, br.from_bus) = 1.0;
    incidence(l, br.to_bus) = -1.0;
    susceptance(l) = 1.0 / br.reactance;
  }
  const Eigen::MatrixXd weighted = susceptance.asDiagonal() * incidence;
  const Eigen::MatrixXd nodal = incidence.transpose() * weighted;

  std::vector<int> keep;
  keep.reserve(static_cast<std::size_t>(nb - 1));
  for (int b = 0; b < nb; ++b)
    if (b != slack) keep.push_back(b);

  Eigen::MatrixXd reduced(nb - 1, nb - 1);
  for (int i = 0; i < nb - 1; ++i)
    for (int j = 0; j < nb - 1; ++j)
      reduced(i, j) = nodal(keep[static_cast<std::size_t>(i)],
                            keep[static_cast<std::size_t>(j)]);

  Eigen::MatrixXd weighted_reduced(nl, nb - 1);
  for (int j = 0; j < nb - 1; ++j)
    weighted_reduced.col(j) = weighted.col(keep[static_cast<std::size_t>(j)]);

  Eigen::FullPivLU<Eigen::MatrixXd> lu(reduced);
  if (!lu.isInvertible())
    throw ComputeError(c.name + ": singular reduced susceptance matrix");

  const Eigen::MatrixXd ptdf_reduced =
      lu.solve(weighted_reduced.transpose()).transpose();

  SensitivityModel m;
  m.slack_bus = slack;
  m.ptdf = Eigen::MatrixXd::Zero(nl, nb);
  for (int j = 0; j < nb - 1; ++j)
    m.ptdf.col(keep[static_cast<std::size_t>(j)]) = ptdf_reduced.col(j);
  return m;
}

Eigen::VectorXd nodal_injections(const GridCase& c, const DispatchLayout& layout,
                                 const DispatchVector& x, int scenario, int t) {
  if (x.size() != layout.size())
    throw ComputeError("dispatch vector length mismatch");
  Eigen::VectorXd inj = Eigen::VectorXd::Zero(static_cast<int>(c.buses.size()));
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& v = layout.vars()[i];
    if (v.t != t) continue;
    switch (v.kind) {
      case VarKind::Gen:
      case VarKind::Discharge:
        inj(v.bus) += x[i];
        break;
      case VarKind::Charge:
      case VarKind::Demand:
      case VarKind::Curtail:
        inj(v.bus) -= x[i];
        break;
    }
  }
  for (const auto& d : c.demand_profiles)
    inj(d.bus) -= d.fixed_load[static_cast<std::size_t>(t)];
  const auto& sc = c.scenarios[static_cast<std::size_t>(scenario)];
  inj(sc.bus) += sc.available_power[static_cast<std::size_t>(t)];
  return inj;
}

std::vector<double> line_flows(const SensitivityModel& m, const GridCase& c,
                               const DispatchLayout& layout, const DispatchVector& x,
                               int scenario, int t) {
  const Eigen::VectorXd inj = nodal_injections(c, layout, x, scenario, t);
  const Eigen::VectorXd f = m.ptdf * inj;
  return std::vector<double>(f.data(), f.data() + f.size());
}

SensitivityModel refresh_sensitivities(const SensitivityModel& m,
                                       DispatchVector new_base) {
  SensitivityModel out = m;
  out.base_point = std::move(new_base);
  return out;
}

}  // namespace pihqcd
