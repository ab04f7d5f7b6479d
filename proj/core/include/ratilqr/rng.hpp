#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace ratilqr {

/// Derives an independent stream seed from a master seed (SplitMix64 mix of
/// master and stream id) so per-run / per-step generators never overlap.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Seeded random generator used everywhere in the library.
///
/// Normal variates come from an explicit Box-Muller transform (one variate
/// per call, no cached spare), so a draw sequence is a pure function of the
/// seed and the call sequence.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1).
  double uniform();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal variate.
  double normal();

  /// Vector of independent standard normals.
  Eigen::VectorXd normal_vector(int n);

  /// Sample from N(mean, cov) given the lower Cholesky factor of cov.
  Eigen::VectorXd gaussian(const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov_cholesky_lower);

  /// Independent child generator; deterministic in (seed, stream), does not
  /// consume engine state.
  Rng spawn(std::uint64_t stream) const { return Rng(derive_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace ratilqr
