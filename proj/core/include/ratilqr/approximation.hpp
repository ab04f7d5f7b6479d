#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "ratilqr/cost.hpp"
#include "ratilqr/dynamics.hpp"

namespace ratilqr {

/// Per-stage linearized dynamics and quadraticized cost around a nominal
/// trajectory. Stage blocks are indexed k = 0..N; the terminal expansion of
/// h lives in the N+1 slots of value / grad_x / hess_xx.
struct StageApproximation {
  std::vector<Eigen::MatrixXd> A;        // df/dx, k = 0..N
  std::vector<Eigen::MatrixXd> B;        // df/du
  std::vector<double> value;             // c at the expansion point, k = 0..N+1
  std::vector<Eigen::VectorXd> grad_x;   // dc/dx, k = 0..N+1
  std::vector<Eigen::MatrixXd> hess_xx;  // d2c/dx2 (symmetrized), k = 0..N+1
  std::vector<Eigen::VectorXd> grad_u;   // dc/du, k = 0..N
  std::vector<Eigen::MatrixXd> hess_uu;  // d2c/du2 (symmetrized)
  std::vector<Eigen::MatrixXd> hess_ux;  // d2c/dudx

  int horizon() const { return static_cast<int>(A.size()) - 1; }
};

/// Central-difference step for coordinate value v: 1e-5 * max(1, |v|).
double fd_step(double v);

/// Central finite-difference Jacobian of f with respect to x.
Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x);

/// Central finite-difference gradient of a scalar function.
Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x);

/// Central finite-difference Hessian blocks of c(x, u): d2c/dx2, d2c/du2 and
/// the mixed block d2c/dudx.
void fd_hessian_blocks(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& c,
    const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& hess_xx,
    Eigen::MatrixXd& hess_uu, Eigen::MatrixXd& hess_ux);

/// Builds the local approximation along a nominal trajectory, preferring the
/// model's analytic callbacks and falling back to finite differences.
/// Throws std::runtime_error naming the stage if any entry is non-finite.
StageApproximation approximate(const SystemModel& model, const CostModel& cost,
                               const NominalTrajectory& traj);

}  // namespace ratilqr
