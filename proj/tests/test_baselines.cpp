#include <doctest.h>

#include <cmath>

#include "pihqcd/baselines.hpp"
#include "pihqcd/synthetic.hpp"
#include "test_util.hpp"

using namespace pihqcd;

TEST_CASE("brute_force") {
  SUBCASE("single positive field prefers spin down") {
    IsingHamiltonian h(1, 0.25);
    h.add_term(0, -1, 1.0);
    const OracleResult r = brute_force(h);
    CHECK(r.best_bits == 1);  // z = -1
    CHECK(r.best_energy == doctest::Approx(-0.75));
    CHECK(r.exhaustive);
  }
  SUBCASE("flat landscape ties break toward the lowest bitstring") {
    IsingHamiltonian h(4, 3.0);
    const OracleResult r = brute_force(h);
    CHECK(r.best_bits == 0);
    CHECK(r.best_energy == doctest::Approx(3.0));
  }
  SUBCASE("the cap is enforced") {
    IsingHamiltonian h(25, 0.0);
    CHECK_THROWS_AS(brute_force(h), ComputeError);
  }
}

TEST_CASE("simulated_annealing") {
  SUBCASE("deterministic in seed") {
    const IsingHamiltonian h = random_ising(10, 0.4, 42);
    const OracleResult a = simulated_annealing(h, 200, {}, 7);
    const OracleResult b = simulated_annealing(h, 200, {}, 7);
    CHECK(a.best_bits == b.best_bits);
    CHECK(a.best_energy == b.best_energy);
  }
  SUBCASE("single-spin landscape is solved exactly in the cold limit") {
    IsingHamiltonian h(1, 0.0);
    h.add_term(0, -1, 2.0);
    const OracleResult r = simulated_annealing(h, 50, {}, 3);
    CHECK(r.best_energy == doctest::Approx(-2.0));
    CHECK(r.best_bits == 1);
  }
  SUBCASE("never beats the exhaustive ground truth") {
    for (int inst = 0; inst < 5; ++inst) {
      const IsingHamiltonian h = random_ising(8, 0.5, derive_seed(9, inst));
      const OracleResult exact = brute_force(h);
      const OracleResult sa = simulated_annealing(h, 100, {}, inst);
      CHECK(sa.best_energy >= exact.best_energy - 1e-9);
    }
  }
  SUBCASE("matches brute force on the case3 Hamiltonian for most seeds") {
    const GridCase c = test::case3();
    const Encoding enc(c, 1);
    const IsingHamiltonian h =
        assemble_hamiltonian(c, enc, build_ptdf(c), PenaltyConfig{});
    const OracleResult exact = brute_force(h);
    int hits = 0;
    for (int seed = 0; seed < 20; ++seed) {
      const OracleResult sa = simulated_annealing(h, 400, {}, seed);
      if (sa.best_energy <= exact.best_energy + 1e-9) ++hits;
    }
    CHECK(hits >= 19);
  }
  SUBCASE("energy gap stays within 5% of the range on random instances") {
    std::vector<double> gaps;
    for (int inst = 0; inst < 20; ++inst) {
      const IsingHamiltonian h = random_ising(12, 0.3, derive_seed(55, inst));
      const auto table = h.energy_table();
      const double lo = *std::min_element(table.begin(), table.end());
      const double hi = *std::max_element(table.begin(), table.end());
      const OracleResult sa = simulated_annealing(h, 300, {}, 1000 + inst);
      gaps.push_back((sa.best_energy - lo) / std::max(hi - lo, 1e-12));
    }
    std::sort(gaps.begin(), gaps.end());
    CHECK(gaps[gaps.size() / 2] <= 0.05);
  }
}

TEST_CASE("classical_dispatch") {
  SUBCASE("case3: feasible, KKT-stationary, and its own 1.000 p.u. anchor") {
    const GridCase c = test::case3();
    const DispatchLayout layout(c);
    const auto m = build_ptdf(c);
    const DispatchSolution sol = classical_dispatch(c, m);
    for (const auto& [name, r] : sol.residuals) {
      (void)name;
      CHECK(r <= 1e-6);
    }
    // KKT: the projected-gradient map leaves the solution in place.
    const FeasibleSet set(c, layout, m);
    DispatchVector step(sol.x.size());
    for (std::size_t i = 0; i < sol.x.size(); ++i) {
      double g = 0.0;
      const auto& v = layout.vars()[i];
      if (v.kind == VarKind::Gen) {
        const auto& gen = c.generators[static_cast<std::size_t>(v.device)];
        g = 2.0 * gen.cost_quad * sol.x[i] + gen.cost_lin;
      } else if (v.kind == VarKind::Charge || v.kind == VarKind::Discharge) {
        g = c.storage_units[static_cast<std::size_t>(v.device)].throughput_cost;
      }
      step[i] = sol.x[i] - 0.05 * g;
    }
    const DispatchVector mapped = project(step, set);
    double kkt = 0.0;
    for (std::size_t i = 0; i < sol.x.size(); ++i)
      kkt = std::max(kkt, std::abs(mapped[i] - sol.x[i]) / 0.05);
    CHECK(kkt <= 1e-4);

    CHECK(sol.cost / sol.cost == doctest::Approx(1.0));  // the p.u. anchor
    CHECK(sol.utilization > 0.5);  // free renewable energy gets used
  }

  SUBCASE("single generator against a fixed load has a closed form") {
    GridCase c;
    c.name = "single";
    c.horizon = 1;
    c.buses = {{0, false}, {1, true}};
    c.branches = {{0, 1, 0.1, 1e6}};
    c.generators = {{0, 0.0, 10.0, 1.0, 2.0, 20.0}};
    c.demand_profiles = {{0, {3.0}, {0.0}, {2.0}}};
    c.scenarios = {{1, {0.0}, 1.0}};
    c.validate();
    const DispatchSolution sol = classical_dispatch(c, build_ptdf(c));
    const DispatchLayout layout(c);
    // cost (g^2 + 2g) rises with g = 3 + d, so d = 0 and g = 3.
    CHECK(sol.x[static_cast<std::size_t>(layout.find(VarKind::Gen, 0, 0))] ==
          doctest::Approx(3.0).epsilon(1e-6));
    CHECK(sol.x[static_cast<std::size_t>(layout.find(VarKind::Demand, 0, 0))] ==
          doctest::Approx(0.0).epsilon(1e-6));
    CHECK(sol.cost == doctest::Approx(15.0).epsilon(1e-6));
  }
}

TEST_CASE("generic_vqa_config is the ablation baseline") {
  const OptimizerConfig cfg = generic_vqa_config();
  CHECK(cfg.beta == 0.0);
  CHECK(cfg.lambda == 0.0);
  CHECK(cfg.family != AnsatzFamily::Topology);
  CHECK(cfg.penalties.inequality_mode == InequalityMode::Literal);

  OptimizerConfig base;
  base.bits = 1;
  base.k_inner = 17;
  base.beta = 3.0;
  const OptimizerConfig derived = generic_vqa_config(base);
  CHECK(derived.k_inner == 17);  // sizing carried over
  CHECK(derived.beta == 0.0);
}
