#include "ratilqr/dynamics.hpp"

#include <stdexcept>

namespace ratilqr {

NominalTrajectory rollout_nominal(const SystemModel& model,
                                  const Eigen::VectorXd& x0,
                                  const std::vector<Eigen::VectorXd>& controls) {
  if (x0.size() != model.state_dim)
    throw std::invalid_argument("rollout_nominal: x0 has wrong dimension");
  NominalTrajectory traj;
  traj.controls = controls;
  traj.states.reserve(controls.size() + 1);
  traj.states.push_back(x0);
  for (const auto& u : controls) {
    if (u.size() != model.control_dim)
      throw std::invalid_argument("rollout_nominal: control has wrong dimension");
    traj.states.push_back(model.transition(traj.states.back(), u));
  }
  return traj;
}

StochasticRollout rollout_stochastic(const SystemModel& model,
                                     const CostModel& cost,
                                     const AffinePolicy& policy,
                                     const Eigen::VectorXd& x0,
                                     const std::vector<Eigen::VectorXd>& noise) {
  const int n_stages = static_cast<int>(policy.trajectory.controls.size());
  if (static_cast<int>(noise.size()) != n_stages)
    throw std::invalid_argument("rollout_stochastic: noise length != N + 1");
  if (x0.size() != model.state_dim)
    throw std::invalid_argument("rollout_stochastic: x0 has wrong dimension");

  StochasticRollout out;
  out.states.reserve(n_stages + 1);
  out.controls.reserve(n_stages);
  out.states.push_back(x0);
  for (int k = 0; k < n_stages; ++k) {
    const Eigen::VectorXd u = policy.control_at(k, out.states.back());
    out.cost += cost.stage_cost(k, out.states.back(), u);
    out.states.push_back(model.transition(out.states.back(), u) + noise[k]);
    out.controls.push_back(u);
  }
  out.cost += cost.terminal_cost(out.states.back());
  return out;
}

}  // namespace ratilqr
