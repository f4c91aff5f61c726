#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace pihqcd {

/// Stateless 64-bit mixer used to split one user seed into independent
/// sub-streams (per scenario, per gradient evaluation, per trial). Results
/// are pinned so seeded outputs are stable across platforms and reorderings.
std::uint64_t splitmix64(std::uint64_t x);

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

/// Deterministic random source. The standard library distributions are
/// implementation-defined, so uniform/normal are generated here from raw
/// mt19937_64 output and never change between builds.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  /// Uniform in [0, 1).
  double uniform();
  /// Uniform in [lo, hi).
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller.
  double normal();
  /// Uniform integer in [0, n).
  std::uint64_t integer(std::uint64_t n);

 private:
  std::mt19937_64 gen_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

/// Number of worker threads: explicit request, else PIHQCD_THREADS env var,
/// else hardware concurrency.
unsigned worker_count(unsigned requested = 0);

/// Runs fn(i) for i in [0, n). Work is split across worker threads; callers
/// write results into preallocated slots indexed by i, so the outcome is
/// independent of scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  unsigned threads = 0);

/// Like parallel_for but also hands fn the worker index in [0, workers),
/// letting callers reuse one scratch buffer per worker.
void parallel_for_worker(std::size_t n,
                         const std::function<void(std::size_t, unsigned)>& fn,
                         unsigned threads = 0);

/// Fixed CSV/JSON-safe formatting for doubles ("%.12g", no locale).
std::string format_double(double v);

std::uint64_t fnv1a(const std::string& s);

/// Thrown on invalid case files or violated model invariants.
class CaseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown on computation failures (singular systems, cap overruns,
/// non-convergence).
class ComputeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pihqcd
