#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "pihqcd/encode.hpp"

namespace pihqcd {

/// Memory guard: statevectors and energy tables are dense in 2^N.
inline constexpr int kMaxSimQubits = 24;

enum class AnsatzFamily { Topology, LinearChain, AllToAll };

const char* ansatz_family_name(AnsatzFamily f);
AnsatzFamily parse_ansatz_family(const std::string& name);

/// RY rotation layer + RZZ entangler layer, repeated `depth` times.
/// Parameters are layer-major, rotations before entanglers within a layer.
struct AnsatzSpec {
  int num_qubits = 0;
  int depth = 1;
  std::vector<std::pair<int, int>> edges;
  AnsatzFamily family = AnsatzFamily::Topology;

  int param_count() const {
    return depth * (num_qubits + static_cast<int>(edges.size()));
  }
  void validate() const;
};

/// Entanglers restricted to physically meaningful pairs: bit chains inside
/// one variable, same-timestep couplings across each physical branch, and
/// consecutive-timestep chains on storage bits.
AnsatzSpec topology_ansatz(const GridCase& c, const Encoding& enc, int depth);

AnsatzSpec linear_chain_ansatz(int num_qubits, int depth);
AnsatzSpec all_to_all_ansatz(int num_qubits, int depth);

struct StateVector {
  int num_qubits = 0;
  std::vector<std::complex<double>> amp;
  double norm() const;
};

/// |0...0> evolved through the ansatz at angles theta.
StateVector build_state(const AnsatzSpec& a, const std::vector<double>& theta);

struct ShotResult {
  std::map<std::uint64_t, std::uint32_t> counts;
  int shots = 0;
  std::uint64_t seed = 0;
};

/// S i.i.d. computational-basis draws from |amp|^2, deterministic in seed.
ShotResult sample(const StateVector& s, int shots, std::uint64_t seed);

/// sum_z |amp(z)|^2 E(z) for the diagonal Hamiltonian.
double exact_expectation(const StateVector& s, const IsingHamiltonian& h);

struct ExpectationEstimate {
  double mean = 0.0;
  /// Estimated variance of `mean` itself (sample energy variance / S).
  double mean_variance = 0.0;
  std::vector<double> term_means;
  /// Per-term estimator variance (1 - m_i^2)/S.
  std::vector<double> term_variances;
};

ExpectationEstimate estimate_expectation(const ShotResult& r, const IsingHamiltonian& h);

struct GradientMode {
  bool exact = true;
  int shots = 0;
  std::uint64_t seed = 0;
  static GradientMode Exact() { return {}; }
  static GradientMode Shots(int s, std::uint64_t seed) { return {false, s, seed}; }
};

struct GradientResult {
  std::vector<double> gradient;
  /// Per-component estimator variance; zero in exact mode.
  std::vector<double> component_variance;
  double norm2() const;
};

/// Repeated expectation/sampling against one diagonal Hamiltonian. The
/// energy table is built once; evaluations at different angles run in
/// parallel with per-worker statevector scratch. The trailing entangler
/// block is skipped during evaluation: diagonal phases commute with a
/// diagonal observable and drop out of |amp|^2.
class AnsatzEvaluator {
 public:
  AnsatzEvaluator(AnsatzSpec ansatz, IsingHamiltonian ham, unsigned threads = 0);

  const AnsatzSpec& ansatz() const { return ansatz_; }
  const IsingHamiltonian& ham() const { return ham_; }
  const std::vector<double>& energy_table() const { return table_; }

  double expectation(const std::vector<double>& theta) const;
  /// expectation() with an explicit worker slot for callers running their
  /// own parallel loops over evaluations.
  double expectation_with_worker(const std::vector<double>& theta, unsigned worker) const;
  ShotResult sample_bitstrings(const std::vector<double>& theta, int shots,
                               std::uint64_t seed) const;
  ExpectationEstimate estimate(const std::vector<double>& theta, int shots,
                               std::uint64_t seed) const;

  /// Parameter-shift gradient: per parameter, two expectation evaluations
  /// at theta_k +- pi/2 combined with factor 1/2. Shot mode draws fresh
  /// independent sub-seeds per evaluation, keeping the estimator unbiased.
  GradientResult gradient(const std::vector<double>& theta, const GradientMode& mode) const;

 private:
  struct Workspace {
    std::vector<std::complex<double>> amp;
  };
  void build_for_measurement(const std::vector<double>& theta, Workspace& ws) const;
  double expectation_ws(const std::vector<double>& theta, Workspace& ws) const;
  ExpectationEstimate estimate_ws(const std::vector<double>& theta, int shots,
                                  std::uint64_t seed, Workspace& ws) const;
  double product_expectation(const std::vector<double>& theta) const;
  ShotResult product_sample(const std::vector<double>& theta, int shots,
                            std::uint64_t seed) const;

  AnsatzSpec ansatz_;
  IsingHamiltonian ham_;
  std::vector<double> table_;
  bool product_state_ = false;
  unsigned threads_ = 0;
  mutable std::vector<Workspace> workspaces_;
};

struct VarianceRow {
  AnsatzFamily family = AnsatzFamily::Topology;
  int num_qubits = 0;
  int depth = 0;
  double variance = 0.0;
  int trials = 0;
  std::uint64_t seed = 0;
};

struct ProbeInstance {
  AnsatzSpec ansatz;
  IsingHamiltonian ham;
};

/// Builds the (ansatz, Hamiltonian) pair for one probe point; lets callers
/// choose depth and Hamiltonian rules.
using ProbeInstanceRule = std::function<ProbeInstance(AnsatzFamily, int)>;

/// Samples theta uniformly in [-pi, pi]^P and returns the sample variance
/// of the exact parameter-shift derivative of one representative parameter
/// (first rotation of the middle layer) across trials, per qubit count.
std::vector<VarianceRow> gradient_variance_probe(AnsatzFamily family,
                                                 const std::vector<int>& n_list,
                                                 const ProbeInstanceRule& rule,
                                                 int trials, std::uint64_t seed);

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace pihqcd
