#include "ratilqr/ileqg.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace ratilqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct NoiseInfo {
  Eigen::MatrixXd cov;
  Eigen::MatrixXd inverse;
  double log_det = 0.0;
};

std::vector<NoiseInfo> prepare_noise(
    const std::vector<Eigen::MatrixXd>& covariances) {
  std::vector<NoiseInfo> out(covariances.size());
  for (std::size_t k = 0; k < covariances.size(); ++k) {
    Eigen::LLT<Eigen::MatrixXd> llt(covariances[k]);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("noise covariance W_k is not positive definite");
    const int n = static_cast<int>(covariances[k].rows());
    out[k].cov = covariances[k];
    out[k].inverse = llt.solve(Eigen::MatrixXd::Identity(n, n));
    out[k].log_det =
        2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  }
  return out;
}

// Risk-adjusted stage quantities derived from the value expansion at k+1.
struct StageKernel {
  bool breakdown = false;
  Eigen::MatrixXd M;
  Eigen::VectorXd g;
  Eigen::MatrixXd G;
  Eigen::MatrixXd H;
  Eigen::VectorXd s_hat;    // (I + theta S' M^-1) s'
  Eigen::MatrixXd S_tilde;  // (I + theta S' M^-1) S'
  double noise_const = 0.0;
};

StageKernel make_kernel(const StageApproximation& approx, int k, double theta,
                        const NoiseInfo& noise,
                        const Eigen::VectorXd& s_lin_next,
                        const Eigen::MatrixXd& S_next) {
  StageKernel ker;
  const Eigen::MatrixXd& A = approx.A[k];
  const Eigen::MatrixXd& B = approx.B[k];

  if (theta == 0.0) {
    // Risk-neutral limit: theta S' M^-1 terms vanish and the log-det term
    // tends to (1/2) tr(W S').
    ker.M = noise.inverse;
    ker.s_hat = s_lin_next;
    ker.S_tilde = S_next;
    ker.noise_const = 0.5 * noise.cov.cwiseProduct(S_next).sum();
  } else {
    ker.M = noise.inverse - theta * S_next;
    Eigen::LLT<Eigen::MatrixXd> M_llt(ker.M);
    if (M_llt.info() != Eigen::Success) {
      ker.breakdown = true;
      return ker;
    }
    const double log_det_M =
        2.0 * M_llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    // det(I - theta W S') = det(M) det(W).
    const double log_det_risk = log_det_M + noise.log_det;

    const Eigen::VectorXd y = M_llt.solve(s_lin_next);
    ker.s_hat = s_lin_next + theta * S_next * y;
    const Eigen::MatrixXd Y = M_llt.solve(S_next);
    ker.S_tilde = S_next + theta * S_next * Y;
    ker.S_tilde = 0.5 * (ker.S_tilde + ker.S_tilde.transpose()).eval();
    ker.noise_const =
        -0.5 / theta * log_det_risk + 0.5 * theta * s_lin_next.dot(y);
  }

  ker.g = approx.grad_u[k] + B.transpose() * ker.s_hat;
  ker.G = approx.hess_ux[k] + B.transpose() * ker.S_tilde * A;
  ker.H = approx.hess_uu[k] + B.transpose() * ker.S_tilde * B;
  ker.H = 0.5 * (ker.H + ker.H.transpose()).eval();
  return ker;
}

// Value propagation for the affine perturbation policy du = L dx + l.
void propagate(const StageApproximation& approx, int k, const StageKernel& ker,
               const Eigen::MatrixXd& L, const Eigen::VectorXd& l,
               double s_next, ValueRecursion& rec) {
  const Eigen::MatrixXd& A = approx.A[k];
  rec.s[k] = approx.value[k] + s_next + ker.noise_const +
             0.5 * l.dot(ker.H * l) + l.dot(ker.g);
  rec.s_lin[k] = approx.grad_x[k] + A.transpose() * ker.s_hat +
                 L.transpose() * (ker.H * l) + L.transpose() * ker.g +
                 ker.G.transpose() * l;
  Eigen::MatrixXd S = approx.hess_xx[k] + A.transpose() * ker.S_tilde * A +
                      L.transpose() * ker.H * L + L.transpose() * ker.G +
                      ker.G.transpose() * L;
  rec.S[k] = 0.5 * (S + S.transpose());
  rec.M[k] = ker.M;
  rec.g[k] = ker.g;
  rec.G[k] = ker.G;
  rec.H[k] = ker.H;
}

void init_recursion(const StageApproximation& approx, ValueRecursion& rec) {
  const int N = approx.horizon();
  rec.s.resize(N + 2);
  rec.s_lin.resize(N + 2);
  rec.S.resize(N + 2);
  rec.M.resize(N + 1);
  rec.g.resize(N + 1);
  rec.G.resize(N + 1);
  rec.H.resize(N + 1);
  rec.s[N + 1] = approx.value[N + 1];
  rec.s_lin[N + 1] = approx.grad_x[N + 1];
  rec.S[N + 1] = approx.hess_xx[N + 1];
}

struct SweepResult {
  ValueRecursion recursion;
  std::vector<Eigen::MatrixXd> gains;
  std::vector<Eigen::VectorXd> offset_updates;
  int breakdown_stage = -1;        // >= 0 when M_k failed
  bool needs_regularization = false;  // H_k + mu I not PD
};

// One backward sweep that computes the regularized gains stage by stage and
// propagates the value expansion with them (the offset-update terms make the
// propagated s, s_lin, S the minimized expansion when mu is small).
SweepResult minimizing_sweep(const StageApproximation& approx, double theta,
                             const std::vector<NoiseInfo>& noise, double mu) {
  const int N = approx.horizon();
  SweepResult out;
  init_recursion(approx, out.recursion);
  out.gains.resize(N + 1);
  out.offset_updates.resize(N + 1);

  for (int k = N; k >= 0; --k) {
    StageKernel ker = make_kernel(approx, k, theta, noise[k],
                                  out.recursion.s_lin[k + 1],
                                  out.recursion.S[k + 1]);
    if (ker.breakdown) {
      out.breakdown_stage = k;
      return out;
    }
    const int m = static_cast<int>(ker.H.rows());
    Eigen::LLT<Eigen::MatrixXd> reg_llt(
        ker.H + mu * Eigen::MatrixXd::Identity(m, m));
    if (reg_llt.info() != Eigen::Success) {
      out.needs_regularization = true;
      return out;
    }
    out.gains[k] = -reg_llt.solve(ker.G);
    out.offset_updates[k] = -reg_llt.solve(ker.g);
    propagate(approx, k, ker, out.gains[k], out.offset_updates[k],
              out.recursion.s[k + 1], out.recursion);
  }
  return out;
}

// Cost-to-go of the policy {gains, trajectory} as evaluated by the backward
// pass on `approx`; +inf on breakdown.
double evaluate_policy(const StageApproximation& approx,
                       const std::vector<Eigen::MatrixXd>& gains, double theta,
                       const std::vector<NoiseInfo>& noise, int* breakdown_stage) {
  const int N = approx.horizon();
  ValueRecursion rec;
  init_recursion(approx, rec);
  const int m = static_cast<int>(approx.B[0].cols());
  const Eigen::VectorXd zero_offset = Eigen::VectorXd::Zero(m);
  for (int k = N; k >= 0; --k) {
    StageKernel ker = make_kernel(approx, k, theta, noise[k],
                                  rec.s_lin[k + 1], rec.S[k + 1]);
    if (ker.breakdown) {
      if (breakdown_stage) *breakdown_stage = k;
      return kInf;
    }
    propagate(approx, k, ker, gains[k], zero_offset, rec.s[k + 1], rec);
  }
  if (breakdown_stage) *breakdown_stage = -1;
  return rec.cost_to_go();
}

NominalTrajectory forward_candidate(const SystemModel& model,
                                    const NominalTrajectory& current,
                                    const std::vector<Eigen::MatrixXd>& gains,
                                    const std::vector<Eigen::VectorXd>& steps,
                                    double epsilon) {
  const int N = current.horizon();
  NominalTrajectory cand;
  cand.controls.resize(N + 1);
  cand.states.reserve(N + 2);
  cand.states.push_back(current.states.front());
  for (int k = 0; k <= N; ++k) {
    cand.controls[k] = gains[k] * (cand.states.back() - current.states[k]) +
                       current.controls[k] + epsilon * steps[k];
    cand.states.push_back(model.transition(cand.states.back(), cand.controls[k]));
  }
  return cand;
}

double max_control_change(const NominalTrajectory& a,
                          const NominalTrajectory& b) {
  double change = 0.0;
  for (std::size_t k = 0; k < a.controls.size(); ++k)
    change = std::max(change,
                      (a.controls[k] - b.controls[k]).lpNorm<Eigen::Infinity>());
  return change;
}

}  // namespace

std::variant<ValueRecursion, NeuroticBreakdown> backward_pass(
    const StageApproximation& approx, const std::vector<Eigen::MatrixXd>& gains,
    const std::vector<Eigen::VectorXd>& offsets, double theta,
    const std::vector<Eigen::MatrixXd>& noise_covariances) {
  if (theta < 0.0) throw std::invalid_argument("backward_pass: theta < 0");
  const int N = approx.horizon();
  if (static_cast<int>(noise_covariances.size()) != N + 1)
    throw std::invalid_argument("backward_pass: need N + 1 noise covariances");
  const std::vector<NoiseInfo> noise = prepare_noise(noise_covariances);

  ValueRecursion rec;
  init_recursion(approx, rec);
  for (int k = N; k >= 0; --k) {
    StageKernel ker = make_kernel(approx, k, theta, noise[k],
                                  rec.s_lin[k + 1], rec.S[k + 1]);
    if (ker.breakdown) return NeuroticBreakdown{k};
    propagate(approx, k, ker, gains[k], offsets[k], rec.s[k + 1], rec);
  }
  return rec;
}

std::optional<GainUpdate> compute_gains(const ValueRecursion& recursion,
                                        double mu) {
  const int n_stages = static_cast<int>(recursion.H.size());
  GainUpdate out;
  out.gains.resize(n_stages);
  out.offset_updates.resize(n_stages);
  for (int k = 0; k < n_stages; ++k) {
    const int m = static_cast<int>(recursion.H[k].rows());
    Eigen::LLT<Eigen::MatrixXd> llt(recursion.H[k] +
                                    mu * Eigen::MatrixXd::Identity(m, m));
    if (llt.info() != Eigen::Success) return std::nullopt;
    out.gains[k] = -llt.solve(recursion.G[k]);
    out.offset_updates[k] = -llt.solve(recursion.g[k]);
  }
  return out;
}

LineSearchResult line_search(const SystemModel& model, const CostModel& cost,
                             const NominalTrajectory& current,
                             double incumbent_cost_to_go,
                             const std::vector<Eigen::MatrixXd>& new_gains,
                             const std::vector<Eigen::VectorXd>& offset_updates,
                             double theta, const ILEQGConfig& config) {
  const std::vector<NoiseInfo> noise = prepare_noise(model.noise_covariances);
  double epsilon = 1.0;
  for (int step = 0; step < config.max_linesearch_steps; ++step) {
    NominalTrajectory cand =
        forward_candidate(model, current, new_gains, offset_updates, epsilon);
    StageApproximation cand_approx = approximate(model, cost, cand);
    const double cand_value =
        evaluate_policy(cand_approx, new_gains, theta, noise, nullptr);
    if (cand_value < incumbent_cost_to_go) {
      LineSearchResult out;
      out.trajectory = std::move(cand);
      out.approximation = std::move(cand_approx);
      out.cost_to_go = cand_value;
      out.epsilon_used = epsilon;
      out.progressed = true;
      return out;
    }
    epsilon *= 0.5;
  }
  LineSearchResult out;
  out.trajectory = current;
  out.approximation = approximate(model, cost, current);
  out.cost_to_go = incumbent_cost_to_go;
  out.epsilon_used = 0.0;
  out.progressed = false;
  return out;
}

std::variant<ILEQGSolution, NeuroticBreakdown> solve(
    const SystemModel& model, const CostModel& cost, const Eigen::VectorXd& x0,
    const std::vector<Eigen::VectorXd>& initial_controls,
    const ILEQGConfig& config) {
  const int N = cost.horizon;
  if (static_cast<int>(initial_controls.size()) != N + 1)
    throw std::invalid_argument("solve: initial controls must have N + 1 entries");
  if (model.horizon() != N)
    throw std::invalid_argument("solve: model covariances do not match horizon");
  if (config.theta < 0.0) throw std::invalid_argument("solve: theta < 0");

  const std::vector<NoiseInfo> noise = prepare_noise(model.noise_covariances);
  const double theta = config.theta;

  NominalTrajectory traj = rollout_nominal(model, x0, initial_controls);
  StageApproximation approx = approximate(model, cost, traj);

  double mu = config.regularization_init;
  constexpr double kMuMax = 1e12;

  ILEQGSolution sol;
  double last_accepted = kInf;
  std::vector<Eigen::MatrixXd> gains;

  auto finish = [&](double value,
                    bool converged) -> std::variant<ILEQGSolution, NeuroticBreakdown> {
    sol.policy.gains = gains;
    sol.policy.trajectory = std::move(traj);
    sol.cost_to_go = value;
    sol.converged = converged;
    return sol;
  };

  for (int iter = 0; iter < config.max_iterations; ++iter) {
    sol.iterations = iter + 1;

    SweepResult sweep = minimizing_sweep(approx, theta, noise, mu);
    while (sweep.needs_regularization && mu < kMuMax) {
      mu = std::max(config.regularization_init, mu * config.regularization_scale);
      sweep = minimizing_sweep(approx, theta, noise, mu);
    }
    if (sweep.breakdown_stage >= 0 || sweep.needs_regularization) {
      if (!gains.empty()) {
        // The incumbent trajectory was accepted with a finite evaluation, so
        // return it rather than fail; reaching this point means the fresh
        // sweep diverged only marginally.
        return finish(last_accepted, false);
      }
      return NeuroticBreakdown{sweep.breakdown_stage};
    }
    gains = sweep.gains;

    int eval_breakdown = -1;
    const double incumbent_value =
        evaluate_policy(approx, gains, theta, noise, &eval_breakdown);

    double step_size = 0.0;
    for (const auto& dl : sweep.offset_updates)
      step_size = std::max(step_size, dl.lpNorm<Eigen::Infinity>());
    if (step_size < config.convergence_tolerance) {
      if (eval_breakdown >= 0) return NeuroticBreakdown{eval_breakdown};
      return finish(incumbent_value, true);
    }

    const double comparator = std::min(incumbent_value, last_accepted);
    LineSearchResult ls =
        line_search(model, cost, traj, comparator, gains, sweep.offset_updates,
                    theta, config);
    if (!ls.progressed) {
      // No candidate improved: treat as converged at the incumbent.
      if (eval_breakdown >= 0) return NeuroticBreakdown{eval_breakdown};
      return finish(incumbent_value, true);
    }

    const double change = max_control_change(ls.trajectory, traj);
    traj = std::move(ls.trajectory);
    approx = std::move(ls.approximation);
    last_accepted = ls.cost_to_go;
    sol.accepted_values.push_back(ls.cost_to_go);

    if (ls.epsilon_used == 1.0) {
      mu = std::max(config.regularization_min, mu / config.regularization_scale);
    } else {
      mu = std::max(config.regularization_init, mu * config.regularization_scale);
    }

    if (change < config.convergence_tolerance) return finish(last_accepted, true);
  }
  return finish(last_accepted, false);
}

}  // namespace ratilqr
