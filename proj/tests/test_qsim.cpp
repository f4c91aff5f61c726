#include <doctest.h>

#include <cmath>

#include "pihqcd/synthetic.hpp"
#include "test_util.hpp"

using namespace pihqcd;

namespace {

IsingHamiltonian single_z_field(double h) {
  IsingHamiltonian out(1, 0.0);
  out.add_term(0, -1, h);
  return out;
}

GridCase minimal_two_bus() {
  GridCase c;
  c.name = "minimal";
  c.horizon = 1;
  c.buses = {{0, true}, {1, false}};
  c.branches = {{0, 1, 0.1, 10.0}};
  c.generators = {{0, 0.0, 1.0, 0.0, 1.0, 2.0}, {1, 0.0, 1.0, 0.0, 1.0, 2.0}};
  c.demand_profiles = {{1, {0.5}, {0.0}, {0.0}}};
  c.scenarios = {{1, {0.0}, 1.0}};
  c.validate();
  return c;
}

}  // namespace

TEST_CASE("topology_ansatz") {
  SUBCASE("minimal graph: one variable per bus, b=1 -> exactly 1 edge") {
    const GridCase c = minimal_two_bus();
    const Encoding enc(c, 1);
    REQUIRE(enc.num_qubits() == 2);
    const AnsatzSpec a = topology_ansatz(c, enc, 1);
    CHECK(a.edges.size() == 1);
    CHECK(a.param_count() == 3);
  }
  SUBCASE("case3 edges are strictly sparser than all-to-all") {
    const GridCase c = test::case3();
    const Encoding enc(c, 2);
    const AnsatzSpec topo = topology_ansatz(c, enc, 2);
    const AnsatzSpec full = all_to_all_ansatz(enc.num_qubits(), 2);
    CHECK(topo.edges.size() < full.edges.size());
    CHECK(topo.param_count() == 2 * (enc.num_qubits() + static_cast<int>(topo.edges.size())));
  }
  SUBCASE("isolated variables keep only intra-variable chains") {
    GridCase c = minimal_two_bus();
    c.generators = {{0, 0.0, 1.0, 0.0, 1.0, 2.0}};  // single device, no storage
    c.validate();
    const Encoding enc(c, 3);
    // bus 1 has no encoded variables, so the branch contributes no edges
    const AnsatzSpec a = topology_ansatz(c, enc, 1);
    CHECK(a.edges.size() == 2);  // chain over the 3 bits of the only variable
    for (const auto& [i, j] : a.edges) CHECK(j == i + 1);
  }
  SUBCASE("storage bits chain across consecutive timesteps") {
    const GridCase c = test::case3();
    const Encoding enc(c, 1);
    const AnsatzSpec a = topology_ansatz(c, enc, 1);
    const int ch0 = enc.variables()[static_cast<std::size_t>(
                        enc.layout().find(VarKind::Charge, 0, 0))].first_qubit;
    const int ch1 = enc.variables()[static_cast<std::size_t>(
                        enc.layout().find(VarKind::Charge, 0, 1))].first_qubit;
    bool found = false;
    for (const auto& [i, j] : a.edges)
      if ((i == std::min(ch0, ch1)) && (j == std::max(ch0, ch1))) found = true;
    CHECK(found);
  }
}

TEST_CASE("build_state") {
  SUBCASE("zero angles produce |0...0>") {
    const AnsatzSpec a = linear_chain_ansatz(4, 2);
    const StateVector s = build_state(a, std::vector<double>(a.param_count(), 0.0));
    CHECK(std::abs(s.amp[0] - std::complex<double>(1.0, 0.0)) < 1e-14);
    for (std::size_t m = 1; m < s.amp.size(); ++m) CHECK(std::abs(s.amp[m]) < 1e-14);
  }
  SUBCASE("a pi rotation flips a single qubit") {
    AnsatzSpec a;
    a.num_qubits = 1;
    a.depth = 1;
    const StateVector s = build_state(a, {M_PI});
    CHECK(std::norm(s.amp[1]) == doctest::Approx(1.0));
  }
  SUBCASE("unitarity across random angles") {
    const AnsatzSpec a = all_to_all_ansatz(5, 3);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
      for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
      CHECK(std::abs(build_state(a, theta).norm() - 1.0) < 1e-10);
    }
  }
  SUBCASE("parameter count is enforced") {
    const AnsatzSpec a = linear_chain_ansatz(3, 1);
    CHECK_THROWS_AS(build_state(a, std::vector<double>(2, 0.0)), ComputeError);
  }
}

TEST_CASE("exact_expectation") {
  SUBCASE("basis state reads the energy table") {
    const AnsatzSpec a = linear_chain_ansatz(2, 1);
    const StateVector s = build_state(a, std::vector<double>(a.param_count(), 0.0));
    IsingHamiltonian h(2, 0.5);
    h.add_term(0, -1, 1.0);
    h.add_term(0, 1, 2.0);
    // |00>: z = (+1,+1): E = 0.5 + 1 + 2
    CHECK(exact_expectation(s, h) == doctest::Approx(3.5));
  }
  SUBCASE("uniform superposition averages a field to zero") {
    AnsatzSpec a;
    a.num_qubits = 3;
    a.depth = 1;
    std::vector<double> theta(3, M_PI_2);
    const StateVector s = build_state(a, theta);
    IsingHamiltonian h(3, 1.25);
    h.add_term(1, -1, 2.0);
    CHECK(exact_expectation(s, h) == doctest::Approx(1.25).epsilon(1e-10));
  }
  SUBCASE("matches a Monte-Carlo estimate within 3 standard errors") {
    const int n = 10;
    const AnsatzSpec a = linear_chain_ansatz(n, 2);
    Rng rng(44);
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
    const StateVector s = build_state(a, theta);
    const IsingHamiltonian h = random_ising(n, 0.3, 911);
    const double exact = exact_expectation(s, h);

    const int shots = 1000000;
    const ShotResult r = sample(s, shots, 1234);
    const ExpectationEstimate est = estimate_expectation(r, h);
    const double stderr_est = std::sqrt(est.mean_variance);
    CHECK(std::abs(est.mean - exact) < 3.0 * std::max(stderr_est, 1e-6));
  }
}

TEST_CASE("sample") {
  SUBCASE("basis states are deterministic distributions") {
    AnsatzSpec a;
    a.num_qubits = 2;
    a.depth = 1;
    const StateVector s = build_state(a, {0.0, M_PI});  // |01> on qubit order
    const ShotResult r = sample(s, 500, 9);
    REQUIRE(r.counts.size() == 1);
    CHECK(r.counts.begin()->first == 0b10ull);  // qubit 1 set
    CHECK(r.counts.begin()->second == 500);
  }
  SUBCASE("uniform 2-qubit state: frequencies within 1% at 1e5 shots") {
    AnsatzSpec a;
    a.num_qubits = 2;
    a.depth = 1;
    const StateVector s = build_state(a, {M_PI_2, M_PI_2});
    const ShotResult r = sample(s, 100000, 77);
    for (const auto& [bits, count] : r.counts) {
      (void)bits;
      CHECK(std::abs(count / 100000.0 - 0.25) < 0.01);
    }
  }
  SUBCASE("same seed, same counts") {
    const AnsatzSpec a = linear_chain_ansatz(4, 2);
    Rng rng(5);
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-1.0, 1.0);
    const StateVector s = build_state(a, theta);
    const ShotResult r1 = sample(s, 4096, 21);
    const ShotResult r2 = sample(s, 4096, 21);
    CHECK(r1.counts == r2.counts);
    CHECK(sample(s, 4096, 22).counts != r1.counts);
  }
}

TEST_CASE("estimate_expectation") {
  SUBCASE("degenerate sample: every term variance is zero") {
    IsingHamiltonian h(2, 0.0);
    h.add_term(0, -1, 1.0);
    h.add_term(0, 1, 0.5);
    ShotResult r;
    r.shots = 64;
    r.counts[0b01] = 64;
    const ExpectationEstimate est = estimate_expectation(r, h);
    for (double v : est.term_variances) CHECK(v == doctest::Approx(0.0));
    CHECK(est.mean == doctest::Approx(h.energy(0b01)));
  }
  SUBCASE("a term with mean zero has estimator variance 1/S") {
    IsingHamiltonian h(1, 0.0);
    h.add_term(0, -1, 1.0);
    ShotResult r;
    r.shots = 100;
    r.counts[0] = 50;
    r.counts[1] = 50;
    const ExpectationEstimate est = estimate_expectation(r, h);
    CHECK(est.term_means[0] == doctest::Approx(0.0));
    CHECK(est.term_variances[0] == doctest::Approx(0.01));
  }
  SUBCASE("estimates concentrate around the exact value (N=8)") {
    const int n = 8;
    const AnsatzSpec a = linear_chain_ansatz(n, 2);
    Rng rng(4242);
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
    const StateVector s = build_state(a, theta);
    const IsingHamiltonian h = random_ising(n, 0.25, 5150);
    const double exact = exact_expectation(s, h);

    int inside = 0;
    const int trials = 100;
    for (int trial = 0; trial < trials; ++trial) {
      const ShotResult r = sample(s, 2048, derive_seed(100, trial));
      const ExpectationEstimate est = estimate_expectation(r, h);
      const double band = 4.0 * std::sqrt(std::max(est.mean_variance, 1e-12));
      if (std::abs(est.mean - exact) <= band) ++inside;
    }
    CHECK(inside >= 99);
  }
}

TEST_CASE("param_shift_gradient") {
  SUBCASE("single qubit closed form: d/dtheta cos(theta) = -sin(theta)") {
    AnsatzSpec a;
    a.num_qubits = 1;
    a.depth = 1;
    const AnsatzEvaluator eval(a, single_z_field(1.0));
    CHECK(eval.expectation({0.0}) == doctest::Approx(1.0));
    CHECK(eval.expectation({M_PI_2}) == doctest::Approx(0.0).epsilon(1e-12));
    const GradientResult g = eval.gradient({M_PI_2}, GradientMode::Exact());
    CHECK(g.gradient[0] == doctest::Approx(-1.0));
    const GradientResult g0 = eval.gradient({M_PI / 3.0}, GradientMode::Exact());
    CHECK(g0.gradient[0] == doctest::Approx(-std::sin(M_PI / 3.0)));
  }

  SUBCASE("exact mode matches central finite differences") {
    Rng rng(808);
    for (int inst = 0; inst < 20; ++inst) {
      const int n = 3 + static_cast<int>(rng.integer(6));  // up to N=8
      const AnsatzSpec a = (inst % 2 == 0) ? linear_chain_ansatz(n, 2)
                                           : all_to_all_ansatz(n, 2);
      const IsingHamiltonian h = random_ising(n, 0.4, derive_seed(17, inst));
      const AnsatzEvaluator eval(a, h);
      std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
      for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
      const GradientResult g = eval.gradient(theta, GradientMode::Exact());

      const double fd_step = 1e-5;
      double scale = 1e-8;
      for (double v : g.gradient) scale = std::max(scale, std::abs(v));
      for (std::size_t k = 0; k < theta.size(); ++k) {
        std::vector<double> tp = theta, tm = theta;
        tp[k] += fd_step;
        tm[k] -= fd_step;
        const double fd = (eval.expectation(tp) - eval.expectation(tm)) / (2 * fd_step);
        CHECK(std::abs(fd - g.gradient[k]) <= 1e-4 * std::max(1.0, scale));
      }
    }
  }

  SUBCASE("shot-mode estimator is unbiased (A2)") {
    const int n = 4;
    const AnsatzSpec a = linear_chain_ansatz(n, 1);
    const IsingHamiltonian h = random_ising(n, 0.5, 33);
    const AnsatzEvaluator eval(a, h);
    Rng rng(9);
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-1.5, 1.5);
    const GradientResult exact = eval.gradient(theta, GradientMode::Exact());

    const int reps = 200;
    const std::size_t p = theta.size();
    std::vector<double> mean(p, 0.0), m2(p, 0.0);
    for (int rep = 0; rep < reps; ++rep) {
      const GradientResult g =
          eval.gradient(theta, GradientMode::Shots(256, derive_seed(1000, rep)));
      for (std::size_t k = 0; k < p; ++k) {
        const double d = g.gradient[k] - mean[k];
        mean[k] += d / (rep + 1);
        m2[k] += d * (g.gradient[k] - mean[k]);
      }
    }
    for (std::size_t k = 0; k < p; ++k) {
      const double se = std::sqrt((m2[k] / (reps - 1)) / reps);
      CHECK(std::abs(mean[k] - exact.gradient[k]) <= 4.0 * std::max(se, 1e-9));
    }
  }

  SUBCASE("expectation-estimator variance scales as c/S (A3)") {
    const int n = 6;
    const AnsatzSpec a = linear_chain_ansatz(n, 2);
    const IsingHamiltonian h = random_ising(n, 0.4, 77);
    const AnsatzEvaluator eval(a, h);
    Rng rng(31);
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);

    const std::vector<int> shot_grid{64, 256, 1024, 4096};
    std::vector<double> var;
    for (int s : shot_grid) {
      double mean = 0.0, m2 = 0.0;
      const int reps = 160;
      for (int rep = 0; rep < reps; ++rep) {
        const double est =
            eval.estimate(theta, s, derive_seed(5, s, rep)).mean;
        const double d = est - mean;
        mean += d / (rep + 1);
        m2 += d * (est - mean);
      }
      var.push_back(m2 / (reps - 1));
    }
    // c/S within a factor of 2: compare S * Var across the grid
    for (std::size_t i = 0; i < var.size(); ++i) {
      const double ci = var[i] * shot_grid[i];
      const double c0 = var[0] * shot_grid[0];
      CHECK(ci <= 2.0 * c0);
      CHECK(ci >= 0.5 * c0);
    }
  }
}

TEST_CASE("gradient_variance_probe: shape and determinism") {
  const std::vector<int> n_list{4, 6, 8};
  const auto rows = gradient_variance_probe(AnsatzFamily::Topology, n_list,
                                            default_probe_instance, 40, 99);
  REQUIRE(rows.size() == 3);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].num_qubits == n_list[i]);
    CHECK(rows[i].variance > 0.0);
    CHECK(rows[i].trials == 40);
  }
  const auto again = gradient_variance_probe(AnsatzFamily::Topology, n_list,
                                             default_probe_instance, 40, 99);
  for (std::size_t i = 0; i < rows.size(); ++i)
    CHECK(rows[i].variance == again[i].variance);
}

TEST_CASE("evaluator fast path agrees with the faithful state pipeline") {
  // The evaluator skips the trailing entangler block; expectations and
  // sampling distributions must match the full circuit bit for bit.
  const GridCase c = minimal_two_bus();
  const Encoding enc(c, 2);
  const auto m = build_ptdf(c);
  PenaltyConfig cfg;
  const IsingHamiltonian h = assemble_hamiltonian(c, enc, m, cfg);
  const AnsatzSpec a = topology_ansatz(c, h.encoding(), 3);
  const AnsatzEvaluator eval(a, h);
  Rng rng(1);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<double> theta(static_cast<std::size_t>(a.param_count()));
    for (auto& v : theta) v = rng.uniform(-M_PI, M_PI);
    const double fast = eval.expectation(theta);
    const double slow = exact_expectation(build_state(a, theta), h);
    CHECK(fast == doctest::Approx(slow).epsilon(1e-10));
  }
}
