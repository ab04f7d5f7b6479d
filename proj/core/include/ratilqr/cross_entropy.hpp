#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "ratilqr/rng.hpp"

namespace ratilqr {

/// Univariate Gaussian over the risk-sensitivity parameter, plus the adaptive
/// first-iteration parameters that persist across MPC calls.
struct CrossEntropyState {
  double mu = 1.0;
  double sigma = 2.0;
  double mu_init = 1.0;
  double sigma_init = 2.0;
};

struct CEConfig {
  int num_samples = 10;   // m_s
  int num_elite = 3;      // m_e <= m_s
  int num_steps = 5;      // M
  int max_resamples = 10;
  /// Elite-fit sigma is floored at sigma_floor_rel * mu_init.
  double sigma_floor_rel = 1e-4;
  /// Initial sampling parameters for a fresh CrossEntropyState.
  double mu_init = 1.0;
  double sigma_init = 2.0;
  /// Evaluate the samples of one iteration in parallel when > 1.
  int threads = 1;
};

inline CrossEntropyState initial_state(const CEConfig& config) {
  return CrossEntropyState{config.mu_init, config.sigma_init, config.mu_init,
                           config.sigma_init};
}

/// Objective of one risk-sensitivity sample: finite value or infeasible
/// (inner solve hit neurotic breakdown). Infeasible is a value, not an error.
using Objective = std::optional<double>;

/// Inner-loop evaluation: theta -> cost-to-go s_0(theta), or nullopt on
/// breakdown.
using InnerSolve = std::function<Objective(double)>;

/// Draws num_samples Gaussian samples from N(mu, sigma^2) and returns the
/// strictly positive subset (possibly empty).
std::vector<double> draw_samples(double mu, double sigma, int num_samples,
                                 Rng& rng);

/// Bilevel objective s_0(theta) + d / theta; nullopt when the inner solve is
/// infeasible at theta.
Objective evaluate_objective(double theta, const InnerSolve& inner, double d);

/// Number of finite objectives.
int count_valid(const std::vector<Objective>& objectives);

/// Fits (mu, sigma) to the num_elite best samples: lowest objectives, ties
/// broken by smaller theta then input order. Sigma is the population MLE
/// (divide by num_elite) floored at sigma_floor.
std::pair<double, double> select_elite_and_fit(
    const std::vector<double>& samples, const std::vector<Objective>& objectives,
    int num_elite, double sigma_floor);

enum class CEStatus {
  ok,
  /// Re-sampling hit the cap; theta_star is the best feasible sample seen.
  degraded,
  /// No feasible sample was ever found; the feasible set looks empty.
  infeasible,
};

struct CEResult {
  CEStatus status = CEStatus::ok;
  double theta_star = 0.0;
  /// Largest theta with a finite objective seen during this call.
  double theta_max_seen = 0.0;
  /// Feasible sample with the lowest objective seen during this call; used
  /// as the fallback when the final solve at theta_star breaks down.
  double best_feasible_theta = 0.0;
  double best_feasible_objective = 0.0;
  /// Valid-sample count of each accepted iteration.
  std::vector<int> valid_counts;
};

/// Cross-entropy optimization over theta with rejection/re-sampling and
/// adaptive first-iteration initialization. Mutates `state`: (mu, sigma) are
/// refit each iteration and (mu_init, sigma_init) are halved/doubled by the
/// first-iteration rules.
CEResult optimize(CrossEntropyState& state, const CEConfig& config,
                  const InnerSolve& inner, double d, Rng& rng);

}  // namespace ratilqr
