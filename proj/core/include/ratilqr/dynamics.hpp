#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ratilqr/cost.hpp"

namespace ratilqr {

/// Discrete-time stochastic system x_{k+1} = f(x_k, u_k) + w_k with
/// w_k ~ N(0, W_k). The noise enters additively on the full state.
struct SystemModel {
  int state_dim = 0;
  int control_dim = 0;

  /// Deterministic transition f.
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&)>
      transition;

  /// Optional analytic Jacobians (A = df/dx, B = df/du). When absent the
  /// local approximation falls back to central finite differences.
  std::function<void(const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::MatrixXd&, Eigen::MatrixXd&)>
      jacobians;

  /// Per-stage noise covariances W_k, k = 0..N. Each must be symmetric
  /// positive definite.
  std::vector<Eigen::MatrixXd> noise_covariances;

  int horizon() const { return static_cast<int>(noise_covariances.size()) - 1; }
};

/// An open-loop control sequence l_0:N together with the state sequence it
/// induces on the noiseless dynamics (states has one more entry than
/// controls).
struct NominalTrajectory {
  std::vector<Eigen::VectorXd> controls;
  std::vector<Eigen::VectorXd> states;

  int horizon() const { return static_cast<int>(controls.size()) - 1; }
};

/// Time-varying affine feedback law u_k = L_k (x_k - xbar_k) + l_k, where
/// (l, xbar) are the offsets and reference states of the stored trajectory.
struct AffinePolicy {
  std::vector<Eigen::MatrixXd> gains;
  NominalTrajectory trajectory;

  Eigen::VectorXd control_at(int k, const Eigen::VectorXd& x) const {
    return gains[k] * (x - trajectory.states[k]) + trajectory.controls[k];
  }
};

/// Applies the control sequence to the noiseless dynamics from x0.
/// Throws std::invalid_argument on dimension mismatch.
NominalTrajectory rollout_nominal(const SystemModel& model,
                                  const Eigen::VectorXd& x0,
                                  const std::vector<Eigen::VectorXd>& controls);

struct StochasticRollout {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> controls;
  double cost = 0.0;
};

/// Closed-loop rollout x_{k+1} = f(x_k, u_k) + w_k under the policy, with
/// the realized cost sum c(k, x_k, u_k) + h(x_{N+1}).
StochasticRollout rollout_stochastic(const SystemModel& model,
                                     const CostModel& cost,
                                     const AffinePolicy& policy,
                                     const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& noise);

}  // namespace ratilqr
