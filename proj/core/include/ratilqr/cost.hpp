#pragma once

#include <functional>

#include <Eigen/Dense>

namespace ratilqr {

/// Additive cost model J = sum_k c(k, x_k, u_k) + h(x_{N+1}) over a horizon
/// of N+1 stages. Stage and terminal costs must be nonnegative.
struct CostModel {
  int horizon = 0;  // N

  std::function<double(int, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      stage_cost;
  std::function<double(const Eigen::VectorXd&)> terminal_cost;

  /// Optional analytic derivatives. When absent the local approximation uses
  /// central finite differences.
  std::function<void(int, const Eigen::VectorXd&, const Eigen::VectorXd&,
                     Eigen::VectorXd& grad_x, Eigen::VectorXd& grad_u,
                     Eigen::MatrixXd& hess_xx, Eigen::MatrixXd& hess_uu,
                     Eigen::MatrixXd& hess_ux)>
      stage_derivatives;
  std::function<void(const Eigen::VectorXd&, Eigen::VectorXd& grad_x,
                     Eigen::MatrixXd& hess_xx)>
      terminal_derivatives;
};

}  // namespace ratilqr
