#pragma once

#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "ratilqr/cross_entropy.hpp"
#include "ratilqr/dynamics.hpp"
#include "ratilqr/ileqg.hpp"
#include "ratilqr/rng.hpp"

namespace ratilqr {

enum class SolverMode {
  rat_ilqr,        // bilevel: cross-entropy over theta + iLEQG
  ilqg_baseline,   // risk-neutral single solve (theta = 0)
  ileqg_fixed,     // single solve at a user-supplied theta
  ileqg_theta_max, // cross-entropy feasibility probe, then solve at theta_max
};

std::string to_string(SolverMode mode);
SolverMode solver_mode_from_string(const std::string& name);

struct RatIlqrConfig {
  double kl_bound = 0.0;  // d >= 0
  SolverMode mode = SolverMode::rat_ilqr;
  double fixed_theta = 0.0;  // used by ileqg_fixed
  ILEQGConfig ileqg;
  CEConfig ce;
};

struct MpcStepResult {
  AffinePolicy policy;
  double theta_star = 0.0;
  double theta_max_seen = 0.0;
  double cost_to_go = 0.0;
  double wall_time_s = 0.0;
  /// True when the final solve fell back to the best evaluated elite because
  /// theta_star itself hit neurotic breakdown.
  bool used_fallback = false;
};

/// Raised when the outer loop never finds a feasible theta, or a fixed-theta
/// solve breaks down.
struct InfeasibleProblem : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One bilevel MPC solve from x0 with the given warm-start controls.
/// Mutates `ce_state` (mu_init / sigma_init carry over between calls).
MpcStepResult solve_once(const SystemModel& model, const CostModel& cost,
                         const Eigen::VectorXd& x0,
                         const std::vector<Eigen::VectorXd>& warm_controls,
                         const RatIlqrConfig& config, CrossEntropyState& ce_state,
                         Rng& rng);

struct EpisodeStep {
  int step = 0;
  Eigen::VectorXd state;    // state the solve started from
  Eigen::VectorXd control;  // executed control u_0
  double theta_star = 0.0;
  double theta_max = 0.0;
  double cost_to_go = 0.0;
  double wall_time_s = 0.0;
};

struct EpisodeLog {
  std::vector<EpisodeStep> steps;
  Eigen::VectorXd final_state;
  double realized_cost = 0.0;  // sum of executed stage costs
  bool aborted = false;
  std::string abort_reason;
};

/// Noise applied to the ground-truth transition at a given MPC step. The
/// source, not the model, defines the executed distribution.
using NoiseSource = std::function<Eigen::VectorXd(int step, Rng& rng)>;

/// Cost model used for the solve starting at a given MPC step (tracking
/// references advance with time).
using CostProvider = std::function<CostModel(int step)>;

/// Receding-horizon execution: at each step solve from the current state,
/// apply u_0 = l_0 to the ground-truth system, and warm-start the next solve
/// with the shifted control sequence (last control repeated). A solver
/// failure aborts the episode and returns the partial log.
EpisodeLog mpc_run(const SystemModel& model, const CostProvider& cost_at_step,
                   const Eigen::VectorXd& x0, const RatIlqrConfig& config,
                   const NoiseSource& noise_source, int num_steps, Rng& rng);

/// Shift-by-one warm start: drops the first control and repeats the last.
std::vector<Eigen::VectorXd> shift_controls(
    const std::vector<Eigen::VectorXd>& controls);

}  // namespace ratilqr
