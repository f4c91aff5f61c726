#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "pihqcd/grid.hpp"
#include "pihqcd/linearize.hpp"

namespace pihqcd {

enum class EncodedKind { Gen, Charge, Discharge, Demand, Curtail, Slack };

const char* encoded_kind_name(EncodedKind k);

/// One qubit of the affine binary expansion
///   x = offset + delta * sum_k 2^k q_k.
struct BitVariable {
  EncodedKind kind = EncodedKind::Gen;
  int device = 0;
  int scenario = -1;  // curtailment / per-scenario slack registers
  int t = 0;
  int bit = 0;        // k in [0, b)
  double delta = 0.0;   // MW per unit level
  double offset = 0.0;  // x_min in MW
  int var_index = 0;    // owning encoded variable
  double weight() const { return static_cast<double>(1u << bit); }
};

/// One encoded variable: a dispatch-layout variable or a slack register.
struct EncodedVar {
  EncodedKind kind = EncodedKind::Gen;
  int device = 0;
  int scenario = -1;
  int bus = 0;  // home bus (slack registers: the constrained device/branch bus)
  int t = 0;
  double lo = 0.0;
  double hi = 0.0;
  double delta = 0.0;     // (hi-lo)/(2^b-1), 0 when dropped as constant
  int first_qubit = -1;   // -1 when dropped
  int num_bits = 0;
  int layout_index = -1;  // -1 for slack registers
  std::string tag;        // slack registers: which constraint they serve
};

/// Maps the dispatch problem onto qubits: b bits per non-degenerate
/// variable, bits of one variable contiguous, core variables first
/// (bus-major), then curtailment, then any slack registers appended by the
/// penalty builders.
class Encoding {
 public:
  Encoding() = default;
  Encoding(const GridCase& c, int bits_per_variable);

  int bits_per_variable() const { return bits_; }
  int num_qubits() const { return static_cast<int>(bit_vars_.size()); }
  int num_core_qubits() const { return core_qubits_; }
  const std::vector<BitVariable>& bit_vars() const { return bit_vars_; }
  const std::vector<EncodedVar>& variables() const { return vars_; }
  const DispatchLayout& layout() const { return layout_; }
  /// Variables dropped because x_max == x_min (logged, not an error).
  const std::vector<int>& dropped_variables() const { return dropped_; }

  /// Value of encoded variable v under bit mask `bits` (qubit i = bit i).
  double value_of(int var, std::uint64_t bits) const;

  /// Reconstructs the dispatch vector; slack registers are ignored.
  DispatchVector decode(std::uint64_t bits) const;

  /// Nearest-level inverse of decode; values clipped into their boxes.
  std::uint64_t encode_nearest(const DispatchVector& x) const;

  /// Appends a slack register covering [0, range]; returns its var index.
  int append_slack(double range, int scenario, int bus, int t, const std::string& tag);

 private:
  void append_bits(int var_index);

  int bits_ = 1;
  int core_qubits_ = 0;
  DispatchLayout layout_;
  std::vector<EncodedVar> vars_;
  std::vector<BitVariable> bit_vars_;
  std::vector<int> dropped_;
};

Encoding build_encoding(const GridCase& c, int bits_per_variable);

/// Physics penalty weights and the inequality handling mode. `literal`
/// penalizes the printed quadratic expression even at feasible points;
/// `slack` adds binary slack registers so only violations are penalized.
enum class InequalityMode { Literal, Slack };

struct PenaltyConfig {
  double alpha = 1.0;      // line flow
  double gamma = 1.0;      // SOC box
  double mu = 1.0;         // power balance
  double rho_ramp = 1.0;   // ramping
  double lambda_risk = 0.0;  // scenario cost variance (classical ranking)
  InequalityMode inequality_mode = InequalityMode::Slack;
};

/// Linear combination sum_i coef_i * x_{var_i} + constant over encoded
/// variables; the unit the penalty builders expand into bits.
struct AffineExpr {
  std::vector<std::pair<int, double>> terms;  // (var index, coefficient)
  double constant = 0.0;
};

class QuboProblem {
 public:
  QuboProblem() = default;
  explicit QuboProblem(Encoding enc) : encoding_(std::move(enc)) {
    linear_.assign(static_cast<std::size_t>(encoding_.num_qubits()), 0.0);
  }

  const Encoding& encoding() const { return encoding_; }
  Encoding& encoding() { return encoding_; }
  int num_qubits() const { return encoding_.num_qubits(); }
  double constant() const { return constant_; }
  const std::vector<double>& linear() const { return linear_; }
  const std::unordered_map<std::uint64_t, double>& quadratic() const { return quad_; }

  void add_constant(double c) { constant_ += c; }
  void add_linear(int q, double c);
  /// Adds c * q_i q_j (i != j) or folds into linear when i == j.
  void add_quadratic(int i, int j, double c);

  /// Adds weight * (expr)^2 expanded through the binary encoding. Exact:
  /// no approximation beyond the discretization itself.
  void add_affine_square(const AffineExpr& expr, double weight);

  /// Adds weight * (expr + s)^2 with a fresh slack register s in
  /// [0, max(0, -expr_min)], i.e. a one-sided penalty on expr <= 0.
  /// When expr cannot be positive the constraint is unviolable and nothing
  /// is added. Returns the slack var index, or nullopt when skipped.
  std::optional<int> add_one_sided_square(const AffineExpr& expr, double weight,
                                          int scenario, int bus, int t,
                                          const std::string& tag);

  /// Adds c * x_{var} expanded through the encoding (plus offset constant).
  void add_affine_linear(int var, double coef);

  double energy(std::uint64_t bits) const;

  /// Box range of an affine expression over the encoded variable boxes.
  std::pair<double, double> expr_range(const AffineExpr& expr) const;

 private:
  Encoding encoding_;
  std::unordered_map<std::uint64_t, double> quad_;  // key i<j packed
  std::vector<double> linear_;
  double constant_ = 0.0;
};

/// Diagonal Ising Hamiltonian: fields h_i, couplings J_ij, constant, plus
/// the per-Pauli term list (Z_i and Z_i Z_j supports) used for
/// noise-adaptive term weighting.
struct IsingTerm {
  int i = -1;
  int j = -1;  // -1 for single-qubit fields
  double coeff = 0.0;
};

class IsingHamiltonian {
 public:
  IsingHamiltonian() = default;
  IsingHamiltonian(int num_qubits, double constant) : n_(num_qubits), constant_(constant) {}

  int num_qubits() const { return n_; }
  double constant() const { return constant_; }
  void set_constant(double c) { constant_ = c; }
  const std::vector<IsingTerm>& terms() const { return terms_; }

  void add_term(int i, int j, double coeff);

  /// z_i = +1 - 2*bit_i; bits packed as in QuboProblem.
  double energy(std::uint64_t bits) const;

  /// Term value (+-1) under a bit mask.
  static double term_value(const IsingTerm& t, std::uint64_t bits);

  /// Energies of all 2^N bitstrings via Gray-code updates. N <= 24.
  std::vector<double> energy_table() const;

  /// Sum of |coefficients| over all terms (no constant).
  double coefficient_norm() const;

  /// Copy with per-term coefficients scaled by weights (size = terms()).
  IsingHamiltonian reweighted(const std::vector<double>& weights) const;

  /// this + scale * other over the same qubit count.
  IsingHamiltonian plus(const IsingHamiltonian& other, double scale) const;

  const Encoding& encoding() const { return encoding_; }
  void set_encoding(Encoding enc) { encoding_ = std::move(enc); }

 private:
  int n_ = 0;
  double constant_ = 0.0;
  std::vector<IsingTerm> terms_;
  Encoding encoding_;
};

/// Substitutes q = (1 - z)/2 into the QUBO.
IsingHamiltonian to_ising(const QuboProblem& q);

// --- penalty and cost builders (weight_scale lets the assembler fold in
// scenario probabilities) ---

QuboProblem build_cost_block(const GridCase& c, const Encoding& enc, int scenario);
void add_cost_block(QuboProblem& q, const GridCase& c, double weight_scale = 1.0);
void add_flow_penalty(QuboProblem& q, const SensitivityModel& m, const GridCase& c,
                      int scenario, const PenaltyConfig& cfg, double weight_scale = 1.0);
void add_soc_penalty(QuboProblem& q, const GridCase& c, const PenaltyConfig& cfg,
                     double weight_scale = 1.0);
void add_balance_penalty(QuboProblem& q, const GridCase& c, int scenario,
                         const PenaltyConfig& cfg, double weight_scale = 1.0);
void add_ramp_penalty(QuboProblem& q, const GridCase& c, const PenaltyConfig& cfg,
                      double weight_scale = 1.0);

/// Scenario-weighted mean of the cost and penalty blocks, converted to the
/// Ising form. Slack registers (if the mode uses them) are appended to the
/// returned Hamiltonian's encoding in a fixed deterministic order.
IsingHamiltonian assemble_hamiltonian(const GridCase& c, const Encoding& enc,
                                      const SensitivityModel& m,
                                      const PenaltyConfig& cfg);

/// Balance + flow residual Hamiltonian at unit weights: the R_phys
/// regularizer. Built literally (no extra qubits) on the same encoding as
/// an already-assembled Hamiltonian.
IsingHamiltonian build_phys_residual(const GridCase& c, const Encoding& enc,
                                     const SensitivityModel& m);

/// Plain-text export, one term per line, for external cross-checks.
std::string export_qubo(const QuboProblem& q);
std::string export_ising(const IsingHamiltonian& h);

}  // namespace pihqcd
