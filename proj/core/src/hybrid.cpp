#include "pihqcd/hybrid.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>

namespace pihqcd {

namespace {

// Sub-seed stream tags.
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagGrad = 0x22;
constexpr std::uint64_t kTagWeights = 0x33;
constexpr std::uint64_t kTagLogPool = 0x44;
constexpr std::uint64_t kTagPool = 0x55;
constexpr std::uint64_t kTagJeff = 0x66;

}  // namespace

NoiseWeights noise_weights(const std::vector<double>& term_variances, double beta) {
  if (beta < 0.0) throw ComputeError("noise_weights: beta must be >= 0");
  NoiseWeights out;
  out.beta = beta;
  out.w.reserve(term_variances.size());
  for (double v : term_variances) {
    if (v < 0.0) throw ComputeError("noise_weights: variances must be >= 0");
    out.w.push_back(1.0 / (1.0 + beta * v));
  }
  return out;
}

IsingHamiltonian EffectiveObjective::combined() const {
  IsingHamiltonian h = weights.w.empty() ? base : base.reweighted(weights.w);
  if (lambda != 0.0) h = h.plus(phys, lambda);
  return h;
}

double EffectiveObjective::sigma2(const std::vector<double>& term_variances) const {
  if (term_variances.size() != base.terms().size())
    throw ComputeError("sigma2: variance count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < term_variances.size(); ++i) {
    const double h = base.terms()[i].coeff;
    s += h * h * term_variances[i];
  }
  return s;
}

double EffectiveObjective::sigma2_eff(const std::vector<double>& term_variances) const {
  if (term_variances.size() != base.terms().size())
    throw ComputeError("sigma2_eff: variance count mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < term_variances.size(); ++i) {
    const double w = weights.w.empty() ? 1.0 : weights.w[i];
    const double wh = w * base.terms()[i].coeff;
    s += wh * wh * term_variances[i];
  }
  return s;
}

double lipschitz_bound(const EffectiveObjective& obj) {
  double s = 0.0;
  for (std::size_t i = 0; i < obj.base.terms().size(); ++i) {
    const double w = obj.weights.w.empty() ? 1.0 : obj.weights.w[i];
    s += std::abs(w * obj.base.terms()[i].coeff);
  }
  s += std::abs(obj.lambda) * obj.phys.coefficient_norm();
  return s;
}

double auto_stepsize(double lipschitz, double j0, double jstar, double sigma2_eff,
                     int total_iters) {
  if (total_iters < 1) throw ComputeError("auto_stepsize: K must be >= 1");
  const double l = std::max(lipschitz, 1e-12);
  if (sigma2_eff <= 0.0) return 1.0 / l;
  const double gap = std::max(j0 - jstar, 1e-12);
  return std::min(1.0 / l, std::sqrt(gap / (l * sigma2_eff * total_iters)));
}

std::vector<double> psgd_step(const std::vector<double>& theta,
                              const std::vector<double>& gradient, double eta,
                              double box) {
  if (theta.size() != gradient.size())
    throw ComputeError("psgd_step: dimension mismatch");
  if (!(eta > 0.0)) throw ComputeError("psgd_step: eta must be > 0");
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i)
    out[i] = std::clamp(theta[i] - eta * gradient[i], -box, box);
  return out;
}

double scenario_risk(const std::vector<double>& costs,
                     const std::vector<double>& probabilities, double lambda_risk) {
  if (costs.empty() || costs.size() != probabilities.size())
    throw ComputeError("scenario_risk: needs matching nonempty inputs");
  double mean = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i) mean += probabilities[i] * costs[i];
  double var = 0.0;
  for (std::size_t i = 0; i < costs.size(); ++i)
    var += probabilities[i] * (costs[i] - mean) * (costs[i] - mean);
  return lambda_risk * var;
}

EffectiveGradientResult effective_gradient(const AnsatzSpec& ansatz,
                                           const std::vector<double>& theta,
                                           const EffectiveObjective& obj,
                                           const GradientMode& mode,
                                           unsigned threads) {
  EffectiveGradientResult out;
  const AnsatzEvaluator eval_eff(ansatz, obj.combined(), threads);
  out.grad = eval_eff.gradient(theta, mode);
  if (!mode.exact) {
    const AnsatzEvaluator eval_base(ansatz, obj.base, threads);
    const ExpectationEstimate est =
        eval_base.estimate(theta, mode.shots, derive_seed(mode.seed, 0x77));
    out.sigma2 = obj.sigma2(est.term_variances);
    out.sigma2_eff = obj.sigma2_eff(est.term_variances);
  }
  return out;
}

int OptimizerConfig::shots_at(int inner_iter) const {
  if (shots_schedule.empty()) return 0;
  const auto idx = std::min<std::size_t>(static_cast<std::size_t>(inner_iter),
                                         shots_schedule.size() - 1);
  return shots_schedule[idx];
}

std::string OptimizerConfig::canonical() const {
  std::ostringstream os;
  os << "bits=" << bits << ";depth=" << depth
     << ";family=" << ansatz_family_name(family)
     << ";alpha=" << format_double(penalties.alpha)
     << ";gamma=" << format_double(penalties.gamma)
     << ";mu=" << format_double(penalties.mu)
     << ";rho_ramp=" << format_double(penalties.rho_ramp)
     << ";lambda_risk=" << format_double(penalties.lambda_risk)
     << ";mode="
     << (penalties.inequality_mode == InequalityMode::Slack ? "slack" : "literal")
     << ";eta=" << format_double(eta) << ";beta=" << format_double(beta)
     << ";lambda=" << format_double(lambda) << ";shots=";
  for (int s : shots_schedule) os << s << ",";
  os << ";k_inner=" << k_inner << ";outer_max=" << outer_max
     << ";epsilon=" << format_double(epsilon)
     << ";theta_box=" << format_double(theta_box)
     << ";growth=" << format_double(penalty_growth)
     << ";cap=" << format_double(penalty_cap_factor) << ";pool=" << pool
     << ";log_pool=" << log_pool << ";init_angle=" << format_double(init_angle)
     << ";warm=" << (warm_start_encode_best ? "encode_best" : "keep");
  return os.str();
}

std::string IterationLog::to_csv(bool include_timing) const {
  std::ostringstream os;
  os << "outer,inner,phase,j_eff,j_exact,grad_norm2,shots,feasible_cost,"
     << "max_residual,sigma2,sigma2_eff";
  if (include_timing) os << ",wall_ms";
  os << "\n";
  for (const auto& r : rows) {
    os << r.outer << "," << r.inner << ","
       << (r.inner < 0 ? "outer" : "inner") << "," << format_double(r.j_eff) << ","
       << format_double(r.j_exact) << "," << format_double(r.grad_norm2) << ","
       << r.shots << "," << format_double(r.feasible_cost) << ","
       << format_double(r.max_residual) << "," << format_double(r.sigma2) << ","
       << format_double(r.sigma2_eff);
    if (include_timing) os << "," << format_double(r.wall_ms);
    os << "\n";
  }
  return os.str();
}

int IterationLog::total_inner_iterations() const {
  int n = 0;
  for (const auto& r : rows)
    if (r.inner >= 0) ++n;
  return n;
}

double economic_cost(const GridCase& c, const DispatchLayout& layout,
                     const DispatchVector& x) {
  double cost = 0.0;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& v = layout.vars()[i];
    switch (v.kind) {
      case VarKind::Gen: {
        const auto& g = c.generators[static_cast<std::size_t>(v.device)];
        cost += g.cost_quad * x[i] * x[i] + g.cost_lin * x[i];
        break;
      }
      case VarKind::Charge:
      case VarKind::Discharge: {
        const auto& s = c.storage_units[static_cast<std::size_t>(v.device)];
        cost += s.throughput_cost * x[i];
        break;
      }
      default:
        break;
    }
  }
  return cost;
}

double renewable_utilization(const GridCase& c, const DispatchLayout& layout,
                             const DispatchVector& x) {
  double available = 0.0, curtailed = 0.0;
  for (const auto& sc : c.scenarios)
    for (double v : sc.available_power) available += sc.probability * v;
  for (std::size_t i = 0; i < layout.size(); ++i)
    if (layout.vars()[i].kind == VarKind::Curtail) curtailed += x[i];
  if (available <= 0.0) return 1.0;
  return std::clamp(1.0 - curtailed / available, 0.0, 1.0);
}

double violation_rate(const FeasibleSet& set, const DispatchVector& x) {
  if (set.slabs().empty()) return 0.0;
  int violated = 0;
  for (const auto& s : set.slabs()) {
    double v = 0.0;
    for (const auto& [idx, coef] : s.terms) v += coef * x[static_cast<std::size_t>(idx)];
    if (v > s.up + 1e-6 || v < s.lo - 1e-6) ++violated;
  }
  return static_cast<double>(violated) / static_cast<double>(set.slabs().size());
}

namespace {

struct ScenarioResiduals {
  double balance_sq = 0.0;  // sum of squared balance residuals
  double flow_sq = 0.0;     // sum of squared flow violations
};

ScenarioResiduals scenario_residuals(const GridCase& c, const DispatchLayout& layout,
                                     const SensitivityModel& m,
                                     const DispatchVector& x, int s) {
  ScenarioResiduals r;
  for (int t = 0; t < c.horizon; ++t) {
    const Eigen::VectorXd inj = nodal_injections(c, layout, x, s, t);
    const double bal = inj.sum();
    r.balance_sq += bal * bal;
    const Eigen::VectorXd flows = m.ptdf * inj;
    for (int l = 0; l < flows.size(); ++l) {
      const double lim = c.branches[static_cast<std::size_t>(l)].flow_limit;
      const double v = std::max(0.0, std::abs(flows(l)) - lim);
      r.flow_sq += v * v;
    }
  }
  return r;
}

double local_residual_sq(const GridCase& c, const DispatchLayout& layout,
                         const DispatchVector& x, const PenaltyConfig& p) {
  // Scenario-independent: SOC box and ramp violations.
  double acc = 0.0;
  for (int u = 0; u < static_cast<int>(c.storage_units.size()); ++u) {
    const auto& su = c.storage_units[static_cast<std::size_t>(u)];
    double soc = su.soc_init;
    for (int t = 0; t < c.horizon; ++t) {
      const auto ch = static_cast<std::size_t>(layout.find(VarKind::Charge, u, t));
      const auto dis = static_cast<std::size_t>(layout.find(VarKind::Discharge, u, t));
      soc += su.charge_eff * x[ch] - x[dis] / su.discharge_eff;
      const double over = std::max(0.0, soc - su.capacity);
      const double under = std::max(0.0, -soc);
      acc += p.gamma * (over * over + under * under);
    }
  }
  for (int g = 0; g < static_cast<int>(c.generators.size()); ++g) {
    const auto& gen = c.generators[static_cast<std::size_t>(g)];
    for (int t = 1; t < c.horizon; ++t) {
      const auto a = static_cast<std::size_t>(layout.find(VarKind::Gen, g, t));
      const auto b = static_cast<std::size_t>(layout.find(VarKind::Gen, g, t - 1));
      const double v = std::max(0.0, std::abs(x[a] - x[b]) - gen.ramp_limit);
      acc += p.rho_ramp * v * v;
    }
  }
  return acc;
}

}  // namespace

double candidate_score(const GridCase& c, const DispatchLayout& layout,
                       const SensitivityModel& m, const PenaltyConfig& penalties,
                       const DispatchVector& x) {
  const double econ = economic_cost(c, layout, x);
  std::vector<double> per_scenario;
  std::vector<double> probs;
  double expected_resid = 0.0;
  for (int s = 0; s < static_cast<int>(c.scenarios.size()); ++s) {
    const auto r = scenario_residuals(c, layout, m, x, s);
    const double resid = penalties.mu * r.balance_sq + penalties.alpha * r.flow_sq;
    const double p = c.scenarios[static_cast<std::size_t>(s)].probability;
    per_scenario.push_back(econ + resid);
    probs.push_back(p);
    expected_resid += p * resid;
  }
  const double risk =
      scenario_risk(per_scenario, probs, penalties.lambda_risk);
  return econ + expected_resid + local_residual_sq(c, layout, x, penalties) + risk;
}

namespace {

struct OuterState {
  IsingHamiltonian ham;
  IsingHamiltonian phys;
  AnsatzSpec ansatz;
  std::optional<AnsatzEvaluator> eval_base;
};

AnsatzSpec make_ansatz(const GridCase& c, const Encoding& enc, AnsatzFamily family,
                       int depth) {
  switch (family) {
    case AnsatzFamily::Topology: return topology_ansatz(c, enc, depth);
    case AnsatzFamily::LinearChain: return linear_chain_ansatz(enc.num_qubits(), depth);
    case AnsatzFamily::AllToAll: return all_to_all_ansatz(enc.num_qubits(), depth);
  }
  throw ComputeError("unknown ansatz family");
}

double certified_lower_bound(const IsingHamiltonian& h,
                             const std::vector<double>& table) {
  if (h.num_qubits() <= 20 && !table.empty())
    return *std::min_element(table.begin(), table.end());
  return h.constant() - h.coefficient_norm();
}

struct RankedCandidate {
  std::uint64_t bits = 0;
  double score = std::numeric_limits<double>::infinity();
};

RankedCandidate best_candidate(const ShotResult& pool, const GridCase& c,
                               const DispatchLayout& layout, const SensitivityModel& m,
                               const PenaltyConfig& penalties, const Encoding& enc) {
  RankedCandidate best;
  for (const auto& [bits, count] : pool.counts) {
    (void)count;
    const DispatchVector x = enc.decode(bits);
    const double score = candidate_score(c, layout, m, penalties, x);
    if (score < best.score) {
      best.score = score;
      best.bits = bits;
    }
  }
  return best;
}

}  // namespace

std::pair<DispatchSolution, IterationLog> hybrid_dispatch(const GridCase& c,
                                                          const OptimizerConfig& cfg) {
  using Clock = std::chrono::steady_clock;
  c.validate();
  const DispatchLayout layout(c);
  SensitivityModel model = build_ptdf(c);
  const Encoding enc(c, cfg.bits);
  const FeasibleSet fset(c, layout, model);

  // Feasibility pre-check: project the box midpoint and demand a feasible
  // point to 1e-6.
  DispatchVector midpoint(layout.size());
  for (std::size_t i = 0; i < layout.size(); ++i)
    midpoint[i] = 0.5 * (fset.box_lo()[i] + fset.box_hi()[i]);
  const DispatchVector anchor = project(midpoint, fset);
  if (fset.max_residual(anchor) > 1e-6)
    throw ComputeError(c.name + ": feasible set appears empty");
  const double anchor_cost = economic_cost(c, layout, anchor);

  PenaltyConfig penalties = cfg.penalties;
  const PenaltyConfig initial_penalties = cfg.penalties;

  auto build_outer = [&](OuterState& st) {
    st.ham = assemble_hamiltonian(c, enc, model, penalties);
    if (st.ham.num_qubits() > kMaxSimQubits)
      throw ComputeError(c.name + ": problem needs " +
                         std::to_string(st.ham.num_qubits()) +
                         " qubits, simulator cap is " +
                         std::to_string(kMaxSimQubits));
    st.ansatz = make_ansatz(c, st.ham.encoding(), cfg.family, cfg.depth);
    st.phys = build_phys_residual(c, st.ham.encoding(), model);
    st.eval_base.emplace(st.ansatz, st.ham, cfg.threads);
  };

  OuterState st;
  build_outer(st);

  // theta0 ~ U[-a, a]: a small-angle start near |0...0>.
  std::vector<double> theta(static_cast<std::size_t>(st.ansatz.param_count()));
  {
    Rng rng(derive_seed(cfg.seed, kTagInit));
    for (auto& v : theta) v = rng.uniform(-cfg.init_angle, cfg.init_angle);
  }

  IterationLog log;
  DispatchSolution best;
  best.cost = std::numeric_limits<double>::infinity();
  best.seed = cfg.seed;
  best.config_hash = cfg.config_hash();
  double prev_best = anchor_cost;
  bool have_j0 = false;
  double j0 = 0.0;
  const int k_total = std::max(1, cfg.k_inner * cfg.outer_max);
  int global_inner = 0;

  for (int outer = 0; outer < cfg.outer_max; ++outer) {
    if (outer > 0) build_outer(st);

    EffectiveObjective obj;
    obj.base = st.ham;
    obj.phys = st.phys;
    obj.lambda = cfg.lambda;
    obj.weights.beta = cfg.beta;

    // With unit weights and lambda = 0, J_eff is exactly J: reuse the base
    // evaluator instead of building a second energy table.
    std::optional<AnsatzEvaluator> eval_eff_storage;
    auto effective_eval = [&]() -> const AnsatzEvaluator& {
      const bool identity = obj.weights.w.empty() && obj.lambda == 0.0;
      if (identity) return *st.eval_base;
      if (!eval_eff_storage)
        eval_eff_storage.emplace(st.ansatz, obj.combined(), cfg.threads);
      return *eval_eff_storage;
    };

    for (int k = 0; k < cfg.k_inner; ++k, ++global_inner) {
      const auto t_start = Clock::now();
      const int shots = cfg.shots_at(global_inner);
      double sigma2 = 0.0, sigma2_eff = 0.0;

      if (shots > 0) {
        const ExpectationEstimate est = st.eval_base->estimate(
            theta, shots, derive_seed(cfg.seed, kTagWeights, outer, k));
        if (cfg.beta > 0.0) {
          obj.weights = noise_weights(est.term_variances, cfg.beta);
          eval_eff_storage.reset();  // weights changed: rebuild on demand
        }
        sigma2 = obj.sigma2(est.term_variances);
        sigma2_eff = obj.sigma2_eff(est.term_variances);
      }

      const AnsatzEvaluator& eval_eff = effective_eval();

      if (!have_j0) {
        j0 = shots > 0
                 ? eval_eff
                       .estimate(theta, shots, derive_seed(cfg.seed, kTagJeff, outer, k))
                       .mean
                 : eval_eff.expectation(theta);
        have_j0 = true;
      }

      const GradientMode mode =
          shots > 0
              ? GradientMode::Shots(shots, derive_seed(cfg.seed, kTagGrad, outer, k))
              : GradientMode::Exact();
      const GradientResult grad = eval_eff.gradient(theta, mode);

      const double lips = lipschitz_bound(obj);
      const double jstar =
          certified_lower_bound(eval_eff.ham(), eval_eff.energy_table());
      const double eta = cfg.eta > 0.0
                             ? cfg.eta
                             : auto_stepsize(lips, j0, jstar, sigma2_eff, k_total);
      theta = psgd_step(theta, grad.gradient, eta, cfg.theta_box);

      IterationRow row;
      row.outer = outer;
      row.inner = k;
      row.shots = shots;
      row.grad_norm2 = grad.norm2();
      row.sigma2 = sigma2;
      row.sigma2_eff = sigma2_eff;
      row.j_eff = shots > 0
                      ? eval_eff
                            .estimate(theta, shots,
                                      derive_seed(cfg.seed, kTagJeff, outer, k + 1000))
                            .mean
                      : eval_eff.expectation(theta);
      row.j_exact = st.eval_base->expectation(theta);

      // Per-iteration candidate trace: small pool, decode, rank, project.
      const ShotResult trace_pool = st.eval_base->sample_bitstrings(
          theta, std::max(1, cfg.log_pool),
          derive_seed(cfg.seed, kTagLogPool, outer, k));
      const RankedCandidate cand =
          best_candidate(trace_pool, c, layout, model, penalties, st.ham.encoding());
      const DispatchVector decoded = st.ham.encoding().decode(cand.bits);
      row.max_residual = fset.max_residual(decoded);
      const DispatchVector projected = project(decoded, fset);
      row.feasible_cost = economic_cost(c, layout, projected);
      row.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t_start).count();
      log.rows.push_back(row);
    }

    // Outer step: sample the candidate pool, rank, project the best.
    const ShotResult pool = st.eval_base->sample_bitstrings(
        theta, std::max(1, cfg.pool), derive_seed(cfg.seed, kTagPool, outer));
    const RankedCandidate cand =
        best_candidate(pool, c, layout, model, penalties, st.ham.encoding());
    const DispatchVector decoded = st.ham.encoding().decode(cand.bits);
    const DispatchVector projected = project(decoded, fset);
    const double feas_cost = economic_cost(c, layout, projected);

    if (feas_cost < best.cost) {
      best.cost = feas_cost;
      best.x = projected;
      best.theta = theta;
    }

    IterationRow outer_row;
    outer_row.outer = outer;
    outer_row.inner = -1;
    outer_row.j_exact = st.eval_base->expectation(theta);
    outer_row.j_eff = outer_row.j_exact;
    outer_row.feasible_cost = best.cost;
    outer_row.max_residual = fset.max_residual(projected);
    log.rows.push_back(outer_row);

    const double improvement =
        (prev_best - best.cost) / std::max(std::abs(prev_best), 1e-12);
    prev_best = best.cost;
    if (improvement < cfg.epsilon || outer + 1 == cfg.outer_max) break;

    // Sensitivity correction + multiplicative penalty growth where
    // residuals persist, capped at penalty_cap_factor x initial weight.
    model = refresh_sensitivities(model, decoded);
    {
      const auto res = fset.residuals(decoded);
      auto norm_of = [&](const std::string& tag, double scale) {
        for (const auto& [name, r] : res)
          if (name == tag) return std::min(1.0, r / std::max(scale, 1e-9));
        return 0.0;
      };
      double load_scale = 1.0;
      for (int t = 0; t < c.horizon; ++t)
        load_scale = std::max(load_scale, c.total_fixed_load(t));
      double flow_scale = 1.0, soc_scale = 1.0, ramp_scale = 1.0;
      for (const auto& br : c.branches) flow_scale = std::max(flow_scale, br.flow_limit);
      for (const auto& su : c.storage_units) soc_scale = std::max(soc_scale, su.capacity);
      for (const auto& g : c.generators) ramp_scale = std::max(ramp_scale, g.ramp_limit);

      auto grow = [&](double& w, double w0, double r) {
        if (w0 <= 0.0 || r <= 0.0) return;
        w = std::min(w * (1.0 + cfg.penalty_growth * r), cfg.penalty_cap_factor * w0);
      };
      grow(penalties.mu, initial_penalties.mu, norm_of("balance", load_scale));
      grow(penalties.alpha, initial_penalties.alpha, norm_of("flow", flow_scale));
      grow(penalties.gamma, initial_penalties.gamma, norm_of("soc", soc_scale));
      grow(penalties.rho_ramp, initial_penalties.rho_ramp, norm_of("ramp", ramp_scale));
    }

    if (cfg.warm_start_encode_best) {
      // Re-aim the first rotation layer at the best bitstring seen.
      const std::uint64_t bits = st.ham.encoding().encode_nearest(best.x);
      for (int q = 0; q < st.ansatz.num_qubits; ++q)
        theta[static_cast<std::size_t>(q)] =
            ((bits >> q) & 1ull) ? M_PI - cfg.init_angle : cfg.init_angle;
    }
  }

  if (!std::isfinite(best.cost))
    throw ComputeError(c.name + ": hybrid loop produced no feasible candidate");

  best.utilization = renewable_utilization(c, layout, best.x);
  for (const auto& [name, r] : fset.residuals(best.x)) best.residuals[name] = r;
  return {best, log};
}

}  // namespace pihqcd
