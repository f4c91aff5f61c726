#include <algorithm>
#include <bit>
#include <cmath>
#include <map>
#include <sstream>

#include "pihqcd/encode.hpp"

namespace pihqcd {

void IsingHamiltonian::add_term(int i, int j, double coeff) {
  if (coeff == 0.0) return;
  if (j >= 0 && i > j) std::swap(i, j);
  terms_.push_back({i, j, coeff});
}

double IsingHamiltonian::term_value(const IsingTerm& t, std::uint64_t bits) {
  const double zi = ((bits >> t.i) & 1ull) ? -1.0 : 1.0;
  if (t.j < 0) return zi;
  const double zj = ((bits >> t.j) & 1ull) ? -1.0 : 1.0;
  return zi * zj;
}

double IsingHamiltonian::energy(std::uint64_t bits) const {
  double e = constant_;
  for (const auto& t : terms_) e += t.coeff * term_value(t, bits);
  return e;
}

std::vector<double> IsingHamiltonian::energy_table() const {
  if (n_ > 24) throw ComputeError("energy_table: qubit count exceeds cap of 24");
  const std::size_t size = 1ull << n_;
  std::vector<double> table(size);

  // Adjacency for O(deg) Gray-code updates.
  std::vector<double> field(static_cast<std::size_t>(n_), 0.0);
  std::vector<std::vector<std::pair<int, double>>> adj(static_cast<std::size_t>(n_));
  for (const auto& t : terms_) {
    if (t.j < 0) {
      field[static_cast<std::size_t>(t.i)] += t.coeff;
    } else {
      adj[static_cast<std::size_t>(t.i)].emplace_back(t.j, t.coeff);
      adj[static_cast<std::size_t>(t.j)].emplace_back(t.i, t.coeff);
    }
  }

  std::vector<double> z(static_cast<std::size_t>(n_), 1.0);
  double e = constant_;
  for (int i = 0; i < n_; ++i) e += field[static_cast<std::size_t>(i)];
  for (const auto& t : terms_)
    if (t.j >= 0) e += t.coeff;

  table[0] = e;
  std::uint64_t gray = 0;
  for (std::uint64_t k = 1; k < size; ++k) {
    const int q = std::countr_zero(k);
    const auto qs = static_cast<std::size_t>(q);
    double local = field[qs];
    for (const auto& [j, c] : adj[qs]) local += c * z[static_cast<std::size_t>(j)];
    e -= 2.0 * z[qs] * local;
    z[qs] = -z[qs];
    gray ^= (1ull << q);
    table[gray] = e;
  }
  return table;
}

double IsingHamiltonian::coefficient_norm() const {
  double s = 0.0;
  for (const auto& t : terms_) s += std::abs(t.coeff);
  return s;
}

IsingHamiltonian IsingHamiltonian::reweighted(const std::vector<double>& weights) const {
  if (weights.size() != terms_.size())
    throw ComputeError("reweighted: weight count must match term count");
  IsingHamiltonian out(n_, constant_);
  out.encoding_ = encoding_;
  out.terms_ = terms_;
  for (std::size_t i = 0; i < terms_.size(); ++i) out.terms_[i].coeff *= weights[i];
  return out;
}

IsingHamiltonian IsingHamiltonian::plus(const IsingHamiltonian& other,
                                        double scale) const {
  if (other.n_ != n_)
    throw ComputeError("plus: qubit counts differ");
  IsingHamiltonian out(n_, constant_ + scale * other.constant_);
  out.encoding_ = encoding_;
  std::map<std::pair<int, int>, double> acc;
  for (const auto& t : terms_) acc[{t.i, t.j}] += t.coeff;
  for (const auto& t : other.terms_) acc[{t.i, t.j}] += scale * t.coeff;
  for (const auto& [key, c] : acc)
    if (c != 0.0) out.terms_.push_back({key.first, key.second, c});
  return out;
}

IsingHamiltonian to_ising(const QuboProblem& q) {
  const int n = q.num_qubits();
  std::vector<double> h(static_cast<std::size_t>(n), 0.0);
  std::map<std::pair<int, int>, double> couplings;
  double constant = q.constant();

  // q_i = (1 - z_i)/2.
  for (int i = 0; i < n; ++i) {
    const double c = q.linear()[static_cast<std::size_t>(i)];
    constant += c / 2.0;
    h[static_cast<std::size_t>(i)] -= c / 2.0;
  }
  for (const auto& [key, c] : q.quadratic()) {
    const auto i = static_cast<int>(key >> 32);
    const auto j = static_cast<int>(key & 0xffffffffull);
    constant += c / 4.0;
    h[static_cast<std::size_t>(i)] -= c / 4.0;
    h[static_cast<std::size_t>(j)] -= c / 4.0;
    couplings[{i, j}] += c / 4.0;
  }

  IsingHamiltonian out(n, constant);
  for (int i = 0; i < n; ++i)
    if (h[static_cast<std::size_t>(i)] != 0.0)
      out.add_term(i, -1, h[static_cast<std::size_t>(i)]);
  for (const auto& [key, c] : couplings)
    if (c != 0.0) out.add_term(key.first, key.second, c);
  out.set_encoding(q.encoding());
  return out;
}

namespace {

int enc_var(const Encoding& enc, VarKind kind, int device, int t) {
  const int idx = enc.layout().find(kind, device, t);
  if (idx < 0) throw ComputeError("encoding is missing a dispatch variable");
  return idx;
}

// Signed participation of every dispatch variable of one timestep in the
// nodal injection at its bus.
double injection_sign(VarKind k) {
  switch (k) {
    case VarKind::Gen:
    case VarKind::Discharge:
      return 1.0;
    case VarKind::Charge:
    case VarKind::Demand:
    case VarKind::Curtail:
      return -1.0;
  }
  return 0.0;
}

AffineExpr flow_expr(const Encoding& enc, const SensitivityModel& m,
                     const GridCase& c, int line, int scenario, int t) {
  AffineExpr e;
  const auto& layout = enc.layout();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& v = layout.vars()[i];
    if (v.t != t) continue;
    const double coef = m.ptdf(line, v.bus) * injection_sign(v.kind);
    if (coef != 0.0) e.terms.emplace_back(static_cast<int>(i), coef);
  }
  for (const auto& d : c.demand_profiles)
    e.constant -= m.ptdf(line, d.bus) * d.fixed_load[static_cast<std::size_t>(t)];
  const auto& sc = c.scenarios[static_cast<std::size_t>(scenario)];
  e.constant += m.ptdf(line, sc.bus) * sc.available_power[static_cast<std::size_t>(t)];
  return e;
}

AffineExpr soc_expr(const Encoding& enc, const StorageUnit& su, int unit, int t_end) {
  // SOC after step t_end-1, with SOC_t eliminated by forward substitution:
  // SOC = soc_init + sum_{tau < t_end} (eta_c s+ - s-/eta_d).
  AffineExpr e;
  e.constant = su.soc_init;
  for (int tau = 0; tau < t_end; ++tau) {
    e.terms.emplace_back(enc_var(enc, VarKind::Charge, unit, tau), su.charge_eff);
    e.terms.emplace_back(enc_var(enc, VarKind::Discharge, unit, tau),
                         -1.0 / su.discharge_eff);
  }
  return e;
}

AffineExpr balance_expr(const Encoding& enc, const GridCase& c, int scenario, int t) {
  AffineExpr e;
  const auto& layout = enc.layout();
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& v = layout.vars()[i];
    if (v.t != t) continue;
    e.terms.emplace_back(static_cast<int>(i), injection_sign(v.kind));
  }
  e.constant = -c.total_fixed_load(t);
  e.constant += c.scenarios[static_cast<std::size_t>(scenario)]
                    .available_power[static_cast<std::size_t>(t)];
  return e;
}

std::string slack_tag(const char* what, int idx, int scenario, int t) {
  std::ostringstream os;
  os << what << idx << "_s" << scenario << "_t" << t;
  return os.str();
}

}  // namespace

void add_cost_block(QuboProblem& q, const GridCase& c, double weight_scale) {
  const Encoding& enc = q.encoding();
  for (int t = 0; t < c.horizon; ++t) {
    for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
      const auto& gen = c.generators[static_cast<std::size_t>(g)];
      const int var = enc_var(enc, VarKind::Gen, g, t);
      if (gen.cost_quad != 0.0) {
        AffineExpr e;
        e.terms.emplace_back(var, 1.0);
        q.add_affine_square(e, weight_scale * gen.cost_quad);
      }
      q.add_affine_linear(var, weight_scale * gen.cost_lin);
    }
    for (int u = 0; u < static_cast<int>(c.storage_units.size()); ++u) {
      const auto& su = c.storage_units[static_cast<std::size_t>(u)];
      if (su.throughput_cost == 0.0) continue;
      q.add_affine_linear(enc_var(enc, VarKind::Charge, u, t),
                          weight_scale * su.throughput_cost);
      q.add_affine_linear(enc_var(enc, VarKind::Discharge, u, t),
                          weight_scale * su.throughput_cost);
    }
  }
}

QuboProblem build_cost_block(const GridCase& c, const Encoding& enc, int scenario) {
  (void)scenario;  // generation and storage costs do not depend on the scenario
  QuboProblem q(enc);
  add_cost_block(q, c);
  return q;
}

void add_flow_penalty(QuboProblem& q, const SensitivityModel& m, const GridCase& c,
                      int scenario, const PenaltyConfig& cfg, double weight_scale) {
  const double w = cfg.alpha * weight_scale;
  if (w == 0.0) return;
  for (int t = 0; t < c.horizon; ++t) {
    for (int l = 0; l < static_cast<int>(c.branches.size()); ++l) {
      AffineExpr flow = flow_expr(q.encoding(), m, c, l, scenario, t);
      const double fmax = c.branches[static_cast<std::size_t>(l)].flow_limit;
      if (cfg.inequality_mode == InequalityMode::Literal) {
        AffineExpr e = flow;
        e.constant -= fmax;
        q.add_affine_square(e, w);
      } else {
        AffineExpr e = flow;
        e.constant -= fmax;
        q.add_one_sided_square(e, w, scenario,
                               c.branches[static_cast<std::size_t>(l)].from_bus, t,
                               slack_tag("flow", l, scenario, t));
      }
    }
  }
}

void add_soc_penalty(QuboProblem& q, const GridCase& c, const PenaltyConfig& cfg,
                     double weight_scale) {
  const double w = cfg.gamma * weight_scale;
  if (w == 0.0) return;
  // The Eq-style dynamics residual is identically zero once SOC_t is
  // substituted forward; what remains is the SOC box, handled one-sidedly
  // via slack registers in both modes.
  for (int u = 0; u < static_cast<int>(c.storage_units.size()); ++u) {
    const auto& su = c.storage_units[static_cast<std::size_t>(u)];
    for (int t_end = 1; t_end <= c.horizon; ++t_end) {
      AffineExpr soc = soc_expr(q.encoding(), su, u, t_end);
      AffineExpr upper = soc;
      upper.constant -= su.capacity;
      q.add_one_sided_square(upper, w, -1, su.bus, t_end,
                             slack_tag("soc_hi", u, -1, t_end));
      AffineExpr lower;
      lower.constant = -soc.constant;
      for (const auto& [var, coef] : soc.terms) lower.terms.emplace_back(var, -coef);
      q.add_one_sided_square(lower, w, -1, su.bus, t_end,
                             slack_tag("soc_lo", u, -1, t_end));
    }
  }
}

void add_balance_penalty(QuboProblem& q, const GridCase& c, int scenario,
                         const PenaltyConfig& cfg, double weight_scale) {
  const double w = cfg.mu * weight_scale;
  if (w == 0.0) return;
  for (int t = 0; t < c.horizon; ++t)
    q.add_affine_square(balance_expr(q.encoding(), c, scenario, t), w);
}

void add_ramp_penalty(QuboProblem& q, const GridCase& c, const PenaltyConfig& cfg,
                      double weight_scale) {
  const double w = cfg.rho_ramp * weight_scale;
  if (w == 0.0) return;
  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
    const auto& gen = c.generators[static_cast<std::size_t>(g)];
    for (int t = 1; t < c.horizon; ++t) {
      AffineExpr step;
      step.terms.emplace_back(enc_var(q.encoding(), VarKind::Gen, g, t), 1.0);
      step.terms.emplace_back(enc_var(q.encoding(), VarKind::Gen, g, t - 1), -1.0);
      if (cfg.inequality_mode == InequalityMode::Literal) {
        // Soft quadratic normalized by the limit: reaches weight w at |dg|=R.
        q.add_affine_square(step, w / (gen.ramp_limit * gen.ramp_limit));
      } else {
        AffineExpr up = step;
        up.constant -= gen.ramp_limit;
        q.add_one_sided_square(up, w, -1, gen.bus, t, slack_tag("ramp_up", g, -1, t));
        AffineExpr down;
        down.constant = -gen.ramp_limit;
        for (const auto& [var, coef] : step.terms) down.terms.emplace_back(var, -coef);
        q.add_one_sided_square(down, w, -1, gen.bus, t,
                               slack_tag("ramp_dn", g, -1, t));
      }
    }
  }
}

IsingHamiltonian assemble_hamiltonian(const GridCase& c, const Encoding& enc,
                                      const SensitivityModel& m,
                                      const PenaltyConfig& cfg) {
  if (c.scenarios.empty())
    throw ComputeError(c.name + ": assemble_hamiltonian needs at least one scenario");
  QuboProblem q(enc);
  // Scenario-independent blocks once (probabilities sum to one), scenario
  // blocks folded in with their probability weights.
  add_cost_block(q, c);
  add_soc_penalty(q, c, cfg);
  add_ramp_penalty(q, c, cfg);
  for (int s = 0; s < static_cast<int>(c.scenarios.size()); ++s) {
    const double p = c.scenarios[static_cast<std::size_t>(s)].probability;
    add_flow_penalty(q, m, c, s, cfg, p);
    add_balance_penalty(q, c, s, cfg, p);
  }
  return to_ising(q);
}

IsingHamiltonian build_phys_residual(const GridCase& c, const Encoding& enc,
                                     const SensitivityModel& m) {
  QuboProblem q(enc);
  PenaltyConfig unit;
  unit.alpha = 1.0;
  unit.mu = 1.0;
  unit.inequality_mode = InequalityMode::Literal;  // no extra qubits
  for (int s = 0; s < static_cast<int>(c.scenarios.size()); ++s) {
    const double p = c.scenarios[static_cast<std::size_t>(s)].probability;
    add_flow_penalty(q, m, c, s, unit, p);
    add_balance_penalty(q, c, s, unit, p);
  }
  if (q.num_qubits() != enc.num_qubits())
    throw ComputeError("phys residual must not extend the encoding");
  return to_ising(q);
}

std::string export_qubo(const QuboProblem& q) {
  std::ostringstream os;
  os << "# qubo qubits=" << q.num_qubits() << "\n";
  os << "c " << format_double(q.constant()) << "\n";
  for (int i = 0; i < q.num_qubits(); ++i) {
    const double c = q.linear()[static_cast<std::size_t>(i)];
    if (c != 0.0) os << "l " << i << " " << format_double(c) << "\n";
  }
  std::map<std::pair<int, int>, double> sorted;
  for (const auto& [key, c] : q.quadratic())
    sorted[{static_cast<int>(key >> 32), static_cast<int>(key & 0xffffffffull)}] = c;
  for (const auto& [ij, c] : sorted)
    if (c != 0.0)
      os << "q " << ij.first << " " << ij.second << " " << format_double(c) << "\n";
  return os.str();
}

std::string export_ising(const IsingHamiltonian& h) {
  std::ostringstream os;
  os << "# ising qubits=" << h.num_qubits() << "\n";
  os << "c " << format_double(h.constant()) << "\n";
  for (const auto& t : h.terms()) {
    if (t.j < 0)
      os << "h " << t.i << " " << format_double(t.coeff) << "\n";
    else
      os << "J " << t.i << " " << t.j << " " << format_double(t.coeff) << "\n";
  }
  return os.str();
}

}  // namespace pihqcd
