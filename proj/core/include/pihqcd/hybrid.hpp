#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "pihqcd/feasible.hpp"
#include "pihqcd/qsim.hpp"

namespace pihqcd {

/// Per-term weights w_i = 1/(1 + beta Var[P_i]).
struct NoiseWeights {
  std::vector<double> w;
  double beta = 0.0;
};

NoiseWeights noise_weights(const std::vector<double>& term_variances, double beta);

/// J_eff = sum_i w_i h_i <P_i> + lambda <R_phys>, with the base Hamiltonian
/// terms reweighted and the physics-residual Hamiltonian mixed in. With
/// beta = 0 and lambda = 0 this is exactly J.
struct EffectiveObjective {
  IsingHamiltonian base;
  IsingHamiltonian phys;
  NoiseWeights weights;
  double lambda = 0.0;

  IsingHamiltonian combined() const;
  /// Tracked estimator variances on a shared shot stream:
  /// sigma2 = sum h_i^2 Var_i, sigma2_eff = sum (w_i h_i)^2 Var_i.
  double sigma2(const std::vector<double>& term_variances) const;
  double sigma2_eff(const std::vector<double>& term_variances) const;
};

/// Smoothness bound L_eff = sum_i |w_i h_i| + lambda sum_j |phys_j|: every
/// <P_i> is a trigonometric polynomial of the angles with second
/// derivatives bounded by 1 per parameter pair under the RY/RZZ gate set.
/// Non-increasing in beta.
double lipschitz_bound(const EffectiveObjective& obj);

struct EffectiveGradientResult {
  GradientResult grad;
  /// Tracked estimator variances (shots mode; zero in exact mode).
  double sigma2 = 0.0;
  double sigma2_eff = 0.0;
};

/// Parameter-shift gradient of J_eff. In shots mode the base-term
/// variances are measured at theta on an independent sub-seed, giving the
/// sigma2/sigma2_eff pair on one shared shot stream.
EffectiveGradientResult effective_gradient(const AnsatzSpec& ansatz,
                                           const std::vector<double>& theta,
                                           const EffectiveObjective& obj,
                                           const GradientMode& mode,
                                           unsigned threads = 0);

/// Paper stepsize rule eta = min(1/L, sqrt((J0 - Jstar)/(L sigma2 K))); the
/// sigma2 = 0 (exact) branch returns 1/L.
double auto_stepsize(double lipschitz, double j0, double jstar, double sigma2_eff,
                     int total_iters);

/// theta' = clamp(theta - eta g) onto [-box, box]^P.
std::vector<double> psgd_step(const std::vector<double>& theta,
                              const std::vector<double>& gradient, double eta,
                              double box);

/// lambda_risk times the probability-weighted variance of per-scenario
/// costs; the classical realization of the risk block.
double scenario_risk(const std::vector<double>& costs,
                     const std::vector<double>& probabilities, double lambda_risk);

struct OptimizerConfig {
  int bits = 2;
  int depth = 1;
  AnsatzFamily family = AnsatzFamily::Topology;
  PenaltyConfig penalties;
  double eta = 0.0;    // 0 = auto stepsize
  double beta = 0.0;   // noise-adaptive weighting
  double lambda = 0.0; // physics regularizer weight
  /// Shots per expectation per inner iteration (last entry repeats);
  /// empty = exact gradients.
  std::vector<int> shots_schedule;
  int k_inner = 8;
  int outer_max = 4;
  double epsilon = 1e-3;
  double theta_box = M_PI;
  double penalty_growth = 0.5;      // rho
  double penalty_cap_factor = 1e4;  // cap at factor x initial weight
  int pool = 64;      // candidates sampled per outer iteration
  int log_pool = 16;  // candidates sampled per inner iteration for the log
  std::uint64_t seed = 1;
  double init_angle = 0.1;  // theta0 ~ U[-a, a]
  bool warm_start_encode_best = false;
  unsigned threads = 0;

  int shots_at(int inner_iter) const;
  std::string canonical() const;  // stable serialization for hashing
  std::uint64_t config_hash() const { return fnv1a(canonical()); }
};

struct IterationRow {
  int outer = 0;
  int inner = 0;  // -1 marks the outer projection row
  double j_eff = 0.0;
  double j_exact = 0.0;
  double grad_norm2 = 0.0;
  int shots = 0;
  double feasible_cost = 0.0;
  double max_residual = 0.0;
  double sigma2 = 0.0;
  double sigma2_eff = 0.0;
  double wall_ms = 0.0;
};

struct IterationLog {
  std::vector<IterationRow> rows;
  /// CSV; timing column is off by default so replayed runs are
  /// byte-identical.
  std::string to_csv(bool include_timing = false) const;
  int total_inner_iterations() const;
};

struct DispatchSolution {
  DispatchVector x;
  double cost = 0.0;
  double utilization = 0.0;
  std::map<std::string, double> residuals;
  std::vector<double> theta;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
};

/// Quadratic generation cost + storage throughput cost of a dispatch.
double economic_cost(const GridCase& c, const DispatchLayout& layout,
                     const DispatchVector& x);

/// Fraction of delivered renewable energy: 1 - curtailed/available
/// (1.0 when the case has no renewable energy).
double renewable_utilization(const GridCase& c, const DispatchLayout& layout,
                             const DispatchVector& x);

/// Share of constraint instances violated by more than 1e-6 MW.
double violation_rate(const FeasibleSet& set, const DispatchVector& x);

/// Classical candidate ranking: expected economic cost + config-weighted
/// physics residual energies + scenario risk.
double candidate_score(const GridCase& c, const DispatchLayout& layout,
                       const SensitivityModel& m, const PenaltyConfig& penalties,
                       const DispatchVector& x);

/// The hierarchical hybrid loop: inner P-SGD on J_eff, candidate sampling
/// and ranking, classical feasibility projection, multiplicative penalty
/// growth and sensitivity refresh, until the relative feasible-cost
/// improvement drops below epsilon or the outer cap is reached.
std::pair<DispatchSolution, IterationLog> hybrid_dispatch(const GridCase& c,
                                                          const OptimizerConfig& cfg);

}  // namespace pihqcd
