#include "pihqcd/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace pihqcd {

const char* ansatz_family_name(AnsatzFamily f) {
  switch (f) {
    case AnsatzFamily::Topology: return "topology";
    case AnsatzFamily::LinearChain: return "linear_chain";
    case AnsatzFamily::AllToAll: return "all_to_all";
  }
  return "?";
}

AnsatzFamily parse_ansatz_family(const std::string& name) {
  if (name == "topology") return AnsatzFamily::Topology;
  if (name == "linear_chain") return AnsatzFamily::LinearChain;
  if (name == "all_to_all") return AnsatzFamily::AllToAll;
  throw ComputeError("unknown ansatz family: " + name);
}

void AnsatzSpec::validate() const {
  if (num_qubits < 1) throw ComputeError("ansatz needs at least one qubit");
  if (num_qubits > kMaxSimQubits)
    throw ComputeError("ansatz exceeds the simulator cap of " +
                       std::to_string(kMaxSimQubits) + " qubits");
  if (depth < 1) throw ComputeError("ansatz depth must be >= 1");
  std::set<std::pair<int, int>> seen;
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= num_qubits || j >= num_qubits || i == j)
      throw ComputeError("ansatz edge references invalid qubits");
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
      throw ComputeError("ansatz edge list contains duplicates");
  }
}

namespace {

std::vector<std::pair<int, int>> sorted_edges(const std::set<std::pair<int, int>>& s) {
  return {s.begin(), s.end()};
}

void add_edge(std::set<std::pair<int, int>>& s, int a, int b) {
  if (a == b) return;
  s.insert({std::min(a, b), std::max(a, b)});
}

}  // namespace

AnsatzSpec topology_ansatz(const GridCase& c, const Encoding& enc, int depth) {
  std::set<std::pair<int, int>> edges;
  const auto& vars = enc.variables();

  // (i) chain over the bits of each encoded variable
  for (const auto& v : vars)
    for (int k = 0; k + 1 < v.num_bits; ++k)
      add_edge(edges, v.first_qubit + k, v.first_qubit + k + 1);

  // (ii) same-timestep, bit-aligned coupling across each physical branch
  for (const auto& br : c.branches) {
    for (const auto& a : vars) {
      if (a.num_bits == 0 || a.bus != br.from_bus) continue;
      for (const auto& b : vars) {
        if (b.num_bits == 0 || b.bus != br.to_bus || b.t != a.t) continue;
        const int bits = std::min(a.num_bits, b.num_bits);
        for (int k = 0; k < bits; ++k)
          add_edge(edges, a.first_qubit + k, b.first_qubit + k);
      }
    }
  }

  // (iii) consecutive-timestep chains on storage bits (temporal coupling)
  for (const auto& a : vars) {
    if (a.num_bits == 0) continue;
    if (a.kind != EncodedKind::Charge && a.kind != EncodedKind::Discharge) continue;
    for (const auto& b : vars) {
      if (b.num_bits == 0 || b.kind != a.kind || b.device != a.device) continue;
      if (b.t != a.t + 1) continue;
      const int bits = std::min(a.num_bits, b.num_bits);
      for (int k = 0; k < bits; ++k)
        add_edge(edges, a.first_qubit + k, b.first_qubit + k);
    }
  }

  AnsatzSpec spec;
  spec.num_qubits = enc.num_qubits();
  spec.depth = depth;
  spec.edges = sorted_edges(edges);
  spec.family = AnsatzFamily::Topology;
  spec.validate();
  return spec;
}

AnsatzSpec linear_chain_ansatz(int num_qubits, int depth) {
  AnsatzSpec spec;
  spec.num_qubits = num_qubits;
  spec.depth = depth;
  for (int q = 0; q + 1 < num_qubits; ++q) spec.edges.emplace_back(q, q + 1);
  spec.family = AnsatzFamily::LinearChain;
  spec.validate();
  return spec;
}

AnsatzSpec all_to_all_ansatz(int num_qubits, int depth) {
  AnsatzSpec spec;
  spec.num_qubits = num_qubits;
  spec.depth = depth;
  for (int i = 0; i < num_qubits; ++i)
    for (int j = i + 1; j < num_qubits; ++j) spec.edges.emplace_back(i, j);
  spec.family = AnsatzFamily::AllToAll;
  spec.validate();
  return spec;
}

double StateVector::norm() const {
  double s = 0.0;
  for (const auto& a : amp) s += std::norm(a);
  return std::sqrt(s);
}

namespace {

using Amp = std::complex<double>;

// First RY layer acting on |0...0> yields a product state; build it by
// doubling instead of N full-width sweeps.
void build_ry_product(std::vector<Amp>& amp, int n, const double* theta) {
  amp.assign(1ull << n, Amp(0.0, 0.0));
  amp[0] = Amp(1.0, 0.0);
  for (int q = 0; q < n; ++q) {
    const double c = std::cos(theta[q] / 2.0);
    const double s = std::sin(theta[q] / 2.0);
    const std::size_t half = 1ull << q;
    for (std::size_t i = 0; i < half; ++i) {
      const Amp lo = amp[i];
      amp[i] = c * lo;
      amp[half + i] = s * lo;
    }
  }
}

void apply_ry(std::vector<Amp>& amp, int n, int q, double theta) {
  const double c = std::cos(theta / 2.0);
  const double s = std::sin(theta / 2.0);
  const std::size_t stride = 1ull << q;
  const std::size_t size = 1ull << n;
  for (std::size_t base = 0; base < size; base += 2 * stride) {
    for (std::size_t i = base; i < base + stride; ++i) {
      const Amp a0 = amp[i];
      const Amp a1 = amp[i + stride];
      amp[i] = c * a0 - s * a1;
      amp[i + stride] = s * a0 + c * a1;
    }
  }
}

void apply_rzz(std::vector<Amp>& amp, int n, int qi, int qj, double theta) {
  // exp(-i theta/2) on aligned z_i z_j = +1 states, conjugate otherwise.
  const Amp p(std::cos(theta / 2.0), -std::sin(theta / 2.0));
  const Amp pc = std::conj(p);
  const std::size_t size = 1ull << n;
  for (std::size_t m = 0; m < size; ++m) {
    const bool differ = (((m >> qi) ^ (m >> qj)) & 1ull) != 0;
    amp[m] *= differ ? pc : p;
  }
}

void run_circuit(std::vector<Amp>& amp, const AnsatzSpec& a,
                 const std::vector<double>& theta, bool skip_trailing_entangler) {
  const int per_layer = a.num_qubits + static_cast<int>(a.edges.size());
  std::size_t p = 0;
  for (int layer = 0; layer < a.depth; ++layer) {
    if (layer == 0) {
      build_ry_product(amp, a.num_qubits, theta.data());
      p += static_cast<std::size_t>(a.num_qubits);
    } else {
      for (int q = 0; q < a.num_qubits; ++q) apply_ry(amp, a.num_qubits, q, theta[p++]);
    }
    const bool last = (layer == a.depth - 1);
    if (last && skip_trailing_entangler) {
      p += a.edges.size();
    } else {
      for (const auto& [i, j] : a.edges) apply_rzz(amp, a.num_qubits, i, j, theta[p++]);
    }
  }
  (void)per_layer;
}

void check_theta(const AnsatzSpec& a, const std::vector<double>& theta) {
  if (static_cast<int>(theta.size()) != a.param_count())
    throw ComputeError("parameter vector length (" + std::to_string(theta.size()) +
                       ") does not match ansatz parameter count (" +
                       std::to_string(a.param_count()) + ")");
  for (double v : theta)
    if (!std::isfinite(v)) throw ComputeError("parameter vector must be finite");
}

ShotResult sample_probs(const std::vector<Amp>& amp, int shots, std::uint64_t seed) {
  if (shots < 1) throw ComputeError("sample: shots must be >= 1");
  Rng rng(seed);
  std::vector<double> u(static_cast<std::size_t>(shots));
  for (auto& v : u) v = rng.uniform();
  std::sort(u.begin(), u.end());

  ShotResult result;
  result.shots = shots;
  result.seed = seed;
  double cum = 0.0;
  std::size_t k = 0;
  for (std::size_t m = 0; m < amp.size() && k < u.size(); ++m) {
    cum += std::norm(amp[m]);
    std::uint32_t hits = 0;
    while (k < u.size() && u[k] < cum) {
      ++hits;
      ++k;
    }
    if (hits > 0) result.counts[m] += hits;
  }
  // Numerical tail: attribute any leftovers to the last nonzero outcome.
  if (k < u.size()) {
    std::size_t last = amp.size() - 1;
    while (last > 0 && std::norm(amp[last]) == 0.0) --last;
    result.counts[last] += static_cast<std::uint32_t>(u.size() - k);
  }
  return result;
}

}  // namespace

StateVector build_state(const AnsatzSpec& a, const std::vector<double>& theta) {
  a.validate();
  check_theta(a, theta);
  StateVector s;
  s.num_qubits = a.num_qubits;
  run_circuit(s.amp, a, theta, /*skip_trailing_entangler=*/false);
  return s;
}

ShotResult sample(const StateVector& s, int shots, std::uint64_t seed) {
  return sample_probs(s.amp, shots, seed);
}

double exact_expectation(const StateVector& s, const IsingHamiltonian& h) {
  if (h.num_qubits() != s.num_qubits)
    throw ComputeError("exact_expectation: dimension mismatch");
  const std::vector<double> table = h.energy_table();
  double e = 0.0;
  for (std::size_t m = 0; m < s.amp.size(); ++m) e += std::norm(s.amp[m]) * table[m];
  return e;
}

ExpectationEstimate estimate_expectation(const ShotResult& r, const IsingHamiltonian& h) {
  ExpectationEstimate est;
  const auto& terms = h.terms();
  est.term_means.assign(terms.size(), 0.0);
  est.term_variances.assign(terms.size(), 0.0);
  if (r.shots == 0) return est;

  double e_sum = 0.0, e2_sum = 0.0;
  for (const auto& [bits, count] : r.counts) {
    const double f = static_cast<double>(count);
    const double e = h.energy(bits);
    e_sum += f * e;
    e2_sum += f * e * e;
    for (std::size_t i = 0; i < terms.size(); ++i)
      est.term_means[i] += f * IsingHamiltonian::term_value(terms[i], bits);
  }
  const double s = static_cast<double>(r.shots);
  est.mean = e_sum / s;
  const double e2 = e2_sum / s;
  est.mean_variance = std::max(0.0, e2 - est.mean * est.mean) / s;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    est.term_means[i] /= s;
    est.term_variances[i] =
        std::max(0.0, 1.0 - est.term_means[i] * est.term_means[i]) / s;
  }
  return est;
}

double GradientResult::norm2() const {
  double s = 0.0;
  for (double g : gradient) s += g * g;
  return s;
}

AnsatzEvaluator::AnsatzEvaluator(AnsatzSpec ansatz, IsingHamiltonian ham,
                                 unsigned threads)
    : ansatz_(std::move(ansatz)), ham_(std::move(ham)), threads_(threads) {
  ansatz_.validate();
  if (ham_.num_qubits() != ansatz_.num_qubits)
    throw ComputeError("evaluator: Hamiltonian and ansatz qubit counts differ");
  // Depth-1 circuits reduce to RY product states once the trailing
  // entangler block is dropped: expectations and samples then have exact
  // closed forms in cos/sin of the angles, so the dense table is not
  // needed.
  product_state_ = (ansatz_.depth == 1);
  if (!product_state_) table_ = ham_.energy_table();
  workspaces_.resize(worker_count(threads_));
}

double AnsatzEvaluator::product_expectation(const std::vector<double>& theta) const {
  // <Z_i> = cos(theta_i), <Z_i Z_j> = cos(theta_i) cos(theta_j).
  double e = ham_.constant();
  for (const auto& t : ham_.terms()) {
    const double zi = std::cos(theta[static_cast<std::size_t>(t.i)]);
    e += t.coeff * (t.j < 0 ? zi : zi * std::cos(theta[static_cast<std::size_t>(t.j)]));
  }
  return e;
}

ShotResult AnsatzEvaluator::product_sample(const std::vector<double>& theta,
                                           int shots, std::uint64_t seed) const {
  if (shots < 1) throw ComputeError("sample: shots must be >= 1");
  Rng rng(seed);
  std::vector<double> p1(static_cast<std::size_t>(ansatz_.num_qubits));
  for (int q = 0; q < ansatz_.num_qubits; ++q) {
    const double s = std::sin(theta[static_cast<std::size_t>(q)] / 2.0);
    p1[static_cast<std::size_t>(q)] = s * s;
  }
  ShotResult out;
  out.shots = shots;
  out.seed = seed;
  for (int shot = 0; shot < shots; ++shot) {
    std::uint64_t bits = 0;
    for (int q = 0; q < ansatz_.num_qubits; ++q)
      if (rng.uniform() < p1[static_cast<std::size_t>(q)]) bits |= 1ull << q;
    ++out.counts[bits];
  }
  return out;
}

void AnsatzEvaluator::build_for_measurement(const std::vector<double>& theta,
                                            Workspace& ws) const {
  check_theta(ansatz_, theta);
  run_circuit(ws.amp, ansatz_, theta, /*skip_trailing_entangler=*/true);
}

double AnsatzEvaluator::expectation_ws(const std::vector<double>& theta,
                                       Workspace& ws) const {
  if (product_state_) {
    check_theta(ansatz_, theta);
    return product_expectation(theta);
  }
  build_for_measurement(theta, ws);
  double e = 0.0;
  for (std::size_t m = 0; m < ws.amp.size(); ++m)
    e += std::norm(ws.amp[m]) * table_[m];
  return e;
}

double AnsatzEvaluator::expectation(const std::vector<double>& theta) const {
  return expectation_ws(theta, workspaces_[0]);
}

double AnsatzEvaluator::expectation_with_worker(const std::vector<double>& theta,
                                                unsigned worker) const {
  return expectation_ws(theta, workspaces_[worker % workspaces_.size()]);
}

ShotResult AnsatzEvaluator::sample_bitstrings(const std::vector<double>& theta,
                                              int shots, std::uint64_t seed) const {
  if (product_state_) {
    check_theta(ansatz_, theta);
    return product_sample(theta, shots, seed);
  }
  build_for_measurement(theta, workspaces_[0]);
  return sample_probs(workspaces_[0].amp, shots, seed);
}

ExpectationEstimate AnsatzEvaluator::estimate_ws(const std::vector<double>& theta,
                                                 int shots, std::uint64_t seed,
                                                 Workspace& ws) const {
  if (product_state_) {
    check_theta(ansatz_, theta);
    return estimate_expectation(product_sample(theta, shots, seed), ham_);
  }
  build_for_measurement(theta, ws);
  const ShotResult r = sample_probs(ws.amp, shots, seed);
  return estimate_expectation(r, ham_);
}

ExpectationEstimate AnsatzEvaluator::estimate(const std::vector<double>& theta,
                                              int shots, std::uint64_t seed) const {
  return estimate_ws(theta, shots, seed, workspaces_[0]);
}

GradientResult AnsatzEvaluator::gradient(const std::vector<double>& theta,
                                         const GradientMode& mode) const {
  check_theta(ansatz_, theta);
  const std::size_t p = theta.size();
  std::vector<double> value(2 * p, 0.0), variance(2 * p, 0.0);

  // 2P shifted evaluations, independent and order-fixed: results land in
  // slots indexed by (parameter, sign) regardless of scheduling.
  parallel_for_worker(
      2 * p,
      [&](std::size_t idx, unsigned worker) {
        const std::size_t k = idx / 2;
        const bool plus = (idx % 2) == 0;
        std::vector<double> shifted = theta;
        shifted[k] += plus ? M_PI_2 : -M_PI_2;
        Workspace& ws = workspaces_[worker];
        if (mode.exact) {
          value[idx] = expectation_ws(shifted, ws);
        } else {
          const std::uint64_t sub =
              derive_seed(mode.seed, k, plus ? 1 : 2);
          const ExpectationEstimate est = estimate_ws(shifted, mode.shots, sub, ws);
          value[idx] = est.mean;
          variance[idx] = est.mean_variance;
        }
      },
      threads_);

  GradientResult out;
  out.gradient.resize(p);
  out.component_variance.resize(p);
  for (std::size_t k = 0; k < p; ++k) {
    out.gradient[k] = 0.5 * (value[2 * k] - value[2 * k + 1]);
    out.component_variance[k] = 0.25 * (variance[2 * k] + variance[2 * k + 1]);
  }
  return out;
}

std::vector<VarianceRow> gradient_variance_probe(AnsatzFamily family,
                                                 const std::vector<int>& n_list,
                                                 const ProbeInstanceRule& rule,
                                                 int trials, std::uint64_t seed) {
  if (trials < 2) throw ComputeError("variance probe needs at least 2 trials");
  std::vector<VarianceRow> rows;
  for (int n : n_list) {
    ProbeInstance inst = rule(family, n);
    inst.ansatz.validate();
    const AnsatzEvaluator eval(inst.ansatz, inst.ham);
    const int per_layer =
        inst.ansatz.num_qubits + static_cast<int>(inst.ansatz.edges.size());
    // Representative parameter: first rotation of the middle layer.
    const int rep = (inst.ansatz.depth / 2) * per_layer;
    const std::size_t p = static_cast<std::size_t>(inst.ansatz.param_count());

    std::vector<double> component(static_cast<std::size_t>(trials), 0.0);
    parallel_for_worker(
        static_cast<std::size_t>(trials),
        [&](std::size_t trial, unsigned worker) {
          Rng rng(derive_seed(seed, static_cast<std::uint64_t>(n), trial));
          std::vector<double> theta(p);
          for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
          std::vector<double> shifted = theta;
          shifted[static_cast<std::size_t>(rep)] += M_PI_2;
          const double jp = eval.expectation_with_worker(shifted, worker);
          shifted[static_cast<std::size_t>(rep)] -= M_PI;
          const double jm = eval.expectation_with_worker(shifted, worker);
          component[trial] = 0.5 * (jp - jm);
        });

    double mean = 0.0;
    for (double v : component) mean += v;
    mean /= trials;
    double var = 0.0;
    for (double v : component) var += (v - mean) * (v - mean);
    var /= (trials - 1);

    VarianceRow row;
    row.family = family;
    row.num_qubits = n;
    row.depth = inst.ansatz.depth;
    row.variance = var;
    row.trials = trials;
    row.seed = seed;
    rows.push_back(row);
  }
  return rows;
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw ComputeError("loglog_slope needs matching vectors of length >= 2");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(std::max(y[i], 1e-300));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace pihqcd
