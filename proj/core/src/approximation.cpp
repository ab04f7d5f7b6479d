#include "ratilqr/approximation.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ratilqr {

double fd_step(double v) { return 1e-5 * std::max(1.0, std::abs(v)); }

Eigen::MatrixXd fd_jacobian(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd fx = f(x);
  Eigen::MatrixXd jac(fx.size(), n);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x(j));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    jac.col(j) = (f(xp) - f(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return jac;
}

Eigen::VectorXd fd_gradient(const std::function<double(const Eigen::VectorXd&)>& f,
                            const Eigen::VectorXd& x) {
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd grad(n);
  Eigen::VectorXd xp = x, xm = x;
  for (int j = 0; j < n; ++j) {
    const double h = fd_step(x(j));
    xp(j) = x(j) + h;
    xm(j) = x(j) - h;
    grad(j) = (f(xp) - f(xm)) / (2.0 * h);
    xp(j) = x(j);
    xm(j) = x(j);
  }
  return grad;
}

namespace {

// Symmetric second differences on a scalar function of a single vector
// argument; `mixed` fills cross second derivatives d2f/dz_i dz_j.
Eigen::MatrixXd fd_hessian(const std::function<double(const Eigen::VectorXd&)>& f,
                           const Eigen::VectorXd& z) {
  const int n = static_cast<int>(z.size());
  Eigen::MatrixXd hess(n, n);
  const double f0 = f(z);
  Eigen::VectorXd zp = z;
  for (int i = 0; i < n; ++i) {
    const double hi = fd_step(z(i));
    zp(i) = z(i) + hi;
    const double fp = f(zp);
    zp(i) = z(i) - hi;
    const double fm = f(zp);
    zp(i) = z(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (int j = i + 1; j < n; ++j) {
      const double hj = fd_step(z(j));
      zp(i) = z(i) + hi;
      zp(j) = z(j) + hj;
      const double fpp = f(zp);
      zp(j) = z(j) - hj;
      const double fpm = f(zp);
      zp(i) = z(i) - hi;
      const double fmm = f(zp);
      zp(j) = z(j) + hj;
      const double fmp = f(zp);
      zp(i) = z(i);
      zp(j) = z(j);
      hess(i, j) = hess(j, i) = (fpp - fpm - fmp + fmm) / (4.0 * hi * hj);
    }
  }
  return hess;
}

}  // namespace

void fd_hessian_blocks(
    const std::function<double(const Eigen::VectorXd&, const Eigen::VectorXd&)>& c,
    const Eigen::VectorXd& x, const Eigen::VectorXd& u, Eigen::MatrixXd& hess_xx,
    Eigen::MatrixXd& hess_uu, Eigen::MatrixXd& hess_ux) {
  const int n = static_cast<int>(x.size());
  const int m = static_cast<int>(u.size());
  // Joint z = (x, u) so the cross block falls out of one Hessian evaluation.
  Eigen::VectorXd z(n + m);
  z << x, u;
  const Eigen::MatrixXd joint = fd_hessian(
      [&](const Eigen::VectorXd& zz) { return c(zz.head(n), zz.tail(m)); }, z);
  hess_xx = joint.topLeftCorner(n, n);
  hess_uu = joint.bottomRightCorner(m, m);
  hess_ux = joint.bottomLeftCorner(m, n);
}

StageApproximation approximate(const SystemModel& model, const CostModel& cost,
                               const NominalTrajectory& traj) {
  const int N = traj.horizon();

  StageApproximation out;
  out.A.resize(N + 1);
  out.B.resize(N + 1);
  out.value.resize(N + 2);
  out.grad_x.resize(N + 2);
  out.hess_xx.resize(N + 2);
  out.grad_u.resize(N + 1);
  out.hess_uu.resize(N + 1);
  out.hess_ux.resize(N + 1);

  auto check_finite = [](const Eigen::MatrixXd& mat, int stage) {
    if (!mat.allFinite())
      throw std::runtime_error("approximate: non-finite derivative at stage " +
                               std::to_string(stage));
  };

  for (int k = 0; k <= N; ++k) {
    const Eigen::VectorXd& x = traj.states[k];
    const Eigen::VectorXd& u = traj.controls[k];

    if (model.jacobians) {
      model.jacobians(x, u, out.A[k], out.B[k]);
    } else {
      out.A[k] = fd_jacobian(
          [&](const Eigen::VectorXd& xx) { return model.transition(xx, u); }, x);
      out.B[k] = fd_jacobian(
          [&](const Eigen::VectorXd& uu) { return model.transition(x, uu); }, u);
    }

    out.value[k] = cost.stage_cost(k, x, u);
    if (cost.stage_derivatives) {
      cost.stage_derivatives(k, x, u, out.grad_x[k], out.grad_u[k],
                             out.hess_xx[k], out.hess_uu[k], out.hess_ux[k]);
    } else {
      out.grad_x[k] = fd_gradient(
          [&](const Eigen::VectorXd& xx) { return cost.stage_cost(k, xx, u); }, x);
      out.grad_u[k] = fd_gradient(
          [&](const Eigen::VectorXd& uu) { return cost.stage_cost(k, x, uu); }, u);
      fd_hessian_blocks(
          [&](const Eigen::VectorXd& xx, const Eigen::VectorXd& uu) {
            return cost.stage_cost(k, xx, uu);
          },
          x, u, out.hess_xx[k], out.hess_uu[k], out.hess_ux[k]);
    }
    out.hess_xx[k] = 0.5 * (out.hess_xx[k] + out.hess_xx[k].transpose()).eval();
    out.hess_uu[k] = 0.5 * (out.hess_uu[k] + out.hess_uu[k].transpose()).eval();

    check_finite(out.A[k], k);
    check_finite(out.B[k], k);
    check_finite(out.grad_x[k], k);
    check_finite(out.grad_u[k], k);
    check_finite(out.hess_xx[k], k);
    check_finite(out.hess_uu[k], k);
    check_finite(out.hess_ux[k], k);
    if (!std::isfinite(out.value[k]))
      throw std::runtime_error("approximate: non-finite cost at stage " +
                               std::to_string(k));
  }

  const Eigen::VectorXd& xT = traj.states[N + 1];
  out.value[N + 1] = cost.terminal_cost(xT);
  if (cost.terminal_derivatives) {
    cost.terminal_derivatives(xT, out.grad_x[N + 1], out.hess_xx[N + 1]);
  } else {
    out.grad_x[N + 1] = fd_gradient(
        [&](const Eigen::VectorXd& xx) { return cost.terminal_cost(xx); }, xT);
    Eigen::MatrixXd unused_uu, unused_ux;
    fd_hessian_blocks(
        [&](const Eigen::VectorXd& xx, const Eigen::VectorXd&) {
          return cost.terminal_cost(xx);
        },
        xT, Eigen::VectorXd::Zero(0), out.hess_xx[N + 1], unused_uu, unused_ux);
  }
  out.hess_xx[N + 1] =
      0.5 * (out.hess_xx[N + 1] + out.hess_xx[N + 1].transpose()).eval();
  check_finite(out.grad_x[N + 1], N + 1);
  check_finite(out.hess_xx[N + 1], N + 1);
  if (!std::isfinite(out.value[N + 1]))
    throw std::runtime_error("approximate: non-finite terminal cost");

  return out;
}

}  // namespace ratilqr
