#pragma once

#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ratilqr/approximation.hpp"
#include "ratilqr/cost.hpp"
#include "ratilqr/dynamics.hpp"

namespace ratilqr {

/// Risk-sensitive backward pass failure: M_k = W_k^-1 - theta * S_{k+1}
/// lost positive definiteness at `stage`, i.e. the entropic cost-to-go for
/// this theta is infinite ("neurotic breakdown").
struct NeuroticBreakdown {
  int stage = -1;
};

/// Stage quantities of the risk-sensitive dynamic-programming recursion.
/// s / s_lin / S hold the value expansion for k = 0..N+1; M, g, G, H are the
/// per-decision blocks for k = 0..N.
struct ValueRecursion {
  std::vector<double> s;
  std::vector<Eigen::VectorXd> s_lin;
  std::vector<Eigen::MatrixXd> S;
  std::vector<Eigen::MatrixXd> M;
  std::vector<Eigen::VectorXd> g;
  std::vector<Eigen::MatrixXd> G;
  std::vector<Eigen::MatrixXd> H;

  double cost_to_go() const { return s.front(); }
};

struct ILEQGConfig {
  /// Risk-sensitivity parameter; exactly 0 selects the risk-neutral branch.
  double theta = 0.0;
  /// Max-norm threshold on the nominal-control change between iterations.
  double convergence_tolerance = 1e-4;
  int max_iterations = 100;
  double regularization_init = 1.0;
  double regularization_min = 1e-6;
  double regularization_scale = 10.0;
  int max_linesearch_steps = 20;
};

struct ILEQGSolution {
  AffinePolicy policy;
  double cost_to_go = 0.0;  // s_0 of the returned policy
  int iterations = 0;
  bool converged = false;
  /// Cost-to-go of each accepted line-search step, in order.
  std::vector<double> accepted_values;
};

/// Policy-evaluation backward pass. Starting from the terminal expansion of
/// `approx`, recursively computes M, g, G, H and propagates (s, s_lin, S)
/// for the affine perturbation policy du_k = gains[k] dx_k + offsets[k]
/// around the approximated trajectory. `offsets` are feedforward steps
/// relative to the trajectory's own nominal controls; pass zeros to evaluate
/// the trajectory's policy as-is.
///
/// Returns NeuroticBreakdown as soon as the Cholesky factorization of some
/// M_k fails; otherwise every returned entry is finite.
std::variant<ValueRecursion, NeuroticBreakdown> backward_pass(
    const StageApproximation& approx, const std::vector<Eigen::MatrixXd>& gains,
    const std::vector<Eigen::VectorXd>& offsets, double theta,
    const std::vector<Eigen::MatrixXd>& noise_covariances);

struct GainUpdate {
  std::vector<Eigen::MatrixXd> gains;           // L_k = -(H_k + mu I)^-1 G_k
  std::vector<Eigen::VectorXd> offset_updates;  // dl_k = -(H_k + mu I)^-1 g_k
};

/// Computes regularized gains from a recursion. Returns nullopt when some
/// H_k + mu I is not positive definite (caller escalates mu).
std::optional<GainUpdate> compute_gains(const ValueRecursion& recursion,
                                        double mu);

struct LineSearchResult {
  NominalTrajectory trajectory;  // accepted candidate, or the incumbent
  StageApproximation approximation;  // local approximation of `trajectory`
  double cost_to_go = 0.0;
  double epsilon_used = 1.0;
  bool progressed = false;
};

/// Backtracking line search over the step size epsilon. Candidates are built
/// by the closed-loop forward recursion
///   lhat_k = L_k (xhat_k - xbar_k) + l_k + epsilon * dl_k
/// and scored by re-approximating the candidate trajectory and evaluating the
/// backward pass with the candidate's gains; a candidate is accepted when its
/// cost-to-go is strictly below `incumbent_cost_to_go`. Candidates whose
/// backward pass breaks down are rejected. After max_linesearch_steps
/// rejections the incumbent is returned unchanged with progressed = false.
LineSearchResult line_search(const SystemModel& model, const CostModel& cost,
                             const NominalTrajectory& current,
                             double incumbent_cost_to_go,
                             const std::vector<Eigen::MatrixXd>& new_gains,
                             const std::vector<Eigen::VectorXd>& offset_updates,
                             double theta, const ILEQGConfig& config);

/// Iterative LEQG: alternates local approximation, risk-sensitive backward
/// sweep, regularized gain computation and backtracking line search until the
/// nominal controls stop changing. Returns the locally optimal affine policy
/// and its cost-to-go s_0, or NeuroticBreakdown when theta is infeasible.
std::variant<ILEQGSolution, NeuroticBreakdown> solve(
    const SystemModel& model, const CostModel& cost, const Eigen::VectorXd& x0,
    const std::vector<Eigen::VectorXd>& initial_controls,
    const ILEQGConfig& config);

}  // namespace ratilqr
