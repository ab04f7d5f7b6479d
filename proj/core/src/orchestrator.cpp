#include "ratilqr/orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

namespace ratilqr {

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::rat_ilqr: return "rat-ilqr";
    case SolverMode::ilqg_baseline: return "ilqg";
    case SolverMode::ileqg_fixed: return "ileqg-fixed";
    case SolverMode::ileqg_theta_max: return "ileqg-theta-max";
  }
  return "unknown";
}

SolverMode solver_mode_from_string(const std::string& name) {
  if (name == "rat-ilqr") return SolverMode::rat_ilqr;
  if (name == "ilqg" || name == "ilqg-baseline") return SolverMode::ilqg_baseline;
  if (name == "ileqg-fixed") return SolverMode::ileqg_fixed;
  if (name == "ileqg-theta-max") return SolverMode::ileqg_theta_max;
  throw std::invalid_argument("unknown solver mode: " + name);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

ILEQGSolution solve_or_throw(const SystemModel& model, const CostModel& cost,
                             const Eigen::VectorXd& x0,
                             const std::vector<Eigen::VectorXd>& warm,
                             ILEQGConfig config, double theta,
                             const char* what) {
  config.theta = theta;
  auto res = solve(model, cost, x0, warm, config);
  if (std::holds_alternative<NeuroticBreakdown>(res))
    throw InfeasibleProblem(std::string(what) + " (neurotic breakdown at stage " +
                            std::to_string(std::get<NeuroticBreakdown>(res).stage) +
                            ")");
  return std::get<ILEQGSolution>(std::move(res));
}

}  // namespace

MpcStepResult solve_once(const SystemModel& model, const CostModel& cost,
                         const Eigen::VectorXd& x0,
                         const std::vector<Eigen::VectorXd>& warm_controls,
                         const RatIlqrConfig& config, CrossEntropyState& ce_state,
                         Rng& rng) {
  const auto start = Clock::now();
  MpcStepResult out;

  const bool risk_neutral =
      config.mode == SolverMode::ilqg_baseline ||
      (config.mode == SolverMode::rat_ilqr && config.kl_bound == 0.0);

  if (risk_neutral) {
    // d = 0 forces p = q, so the bilevel problem degenerates to the
    // risk-neutral solve; short-circuit instead of sampling theta.
    ILEQGSolution sol = solve_or_throw(model, cost, x0, warm_controls,
                                       config.ileqg, 0.0, "risk-neutral solve failed");
    out.policy = std::move(sol.policy);
    out.cost_to_go = sol.cost_to_go;
    out.theta_star = 0.0;
    out.theta_max_seen = 0.0;
    out.wall_time_s = seconds_since(start);
    return out;
  }

  if (config.mode == SolverMode::ileqg_fixed) {
    ILEQGSolution sol =
        solve_or_throw(model, cost, x0, warm_controls, config.ileqg,
                       config.fixed_theta, "fixed-theta solve failed");
    out.policy = std::move(sol.policy);
    out.cost_to_go = sol.cost_to_go;
    out.theta_star = config.fixed_theta;
    out.theta_max_seen = config.fixed_theta;
    out.wall_time_s = seconds_since(start);
    return out;
  }

  // Bilevel: cross-entropy over theta with the iLEQG closure seeded by the
  // warm nominal trajectory.
  InnerSolve inner = [&](double theta) -> Objective {
    ILEQGConfig inner_config = config.ileqg;
    inner_config.theta = theta;
    auto res = solve(model, cost, x0, warm_controls, inner_config);
    if (std::holds_alternative<NeuroticBreakdown>(res)) return std::nullopt;
    return std::get<ILEQGSolution>(res).cost_to_go;
  };

  CEResult ce = optimize(ce_state, config.ce, inner, config.kl_bound, rng);
  if (ce.status == CEStatus::infeasible)
    throw InfeasibleProblem("no feasible risk-sensitivity parameter found");

  const double final_theta = (config.mode == SolverMode::ileqg_theta_max)
                                 ? ce.theta_max_seen
                                 : ce.theta_star;

  ILEQGConfig final_config = config.ileqg;
  final_config.theta = final_theta;
  auto final_res = solve(model, cost, x0, warm_controls, final_config);
  double used_theta = final_theta;
  if (std::holds_alternative<NeuroticBreakdown>(final_res)) {
    // theta_star is the elite mean and was never itself evaluated; fall back
    // to the best evaluated elite.
    used_theta = ce.best_feasible_theta;
    final_config.theta = used_theta;
    final_res = solve(model, cost, x0, warm_controls, final_config);
    if (std::holds_alternative<NeuroticBreakdown>(final_res))
      throw InfeasibleProblem("fallback solve at best evaluated theta failed");
    out.used_fallback = true;
  }

  ILEQGSolution sol = std::get<ILEQGSolution>(std::move(final_res));
  out.policy = std::move(sol.policy);
  out.cost_to_go = sol.cost_to_go;
  out.theta_star = used_theta;
  out.theta_max_seen = ce.theta_max_seen;
  out.wall_time_s = seconds_since(start);
  return out;
}

std::vector<Eigen::VectorXd> shift_controls(
    const std::vector<Eigen::VectorXd>& controls) {
  std::vector<Eigen::VectorXd> shifted(controls.begin() + 1, controls.end());
  shifted.push_back(controls.back());
  return shifted;
}

EpisodeLog mpc_run(const SystemModel& model, const CostProvider& cost_at_step,
                   const Eigen::VectorXd& x0, const RatIlqrConfig& config,
                   const NoiseSource& noise_source, int num_steps, Rng& rng) {
  if (num_steps < 1) throw std::invalid_argument("mpc_run: num_steps < 1");

  EpisodeLog log;
  log.steps.reserve(num_steps);

  CostModel cost0 = cost_at_step(0);
  const int N = cost0.horizon;
  std::vector<Eigen::VectorXd> warm(
      N + 1, Eigen::VectorXd::Zero(model.control_dim));
  CrossEntropyState ce_state = initial_state(config.ce);

  Eigen::VectorXd x = x0;
  Rng solver_rng = rng.spawn(1);
  Rng noise_rng = rng.spawn(2);

  for (int step = 0; step < num_steps; ++step) {
    const CostModel cost = (step == 0) ? cost0 : cost_at_step(step);
    MpcStepResult r;
    try {
      r = solve_once(model, cost, x, warm, config, ce_state, solver_rng);
    } catch (const std::exception& e) {
      log.aborted = true;
      log.abort_reason = e.what();
      log.final_state = x;
      return log;
    }
    if (!std::isfinite(r.cost_to_go)) {
      log.aborted = true;
      log.abort_reason = "non-finite cost-to-go";
      log.final_state = x;
      return log;
    }

    const Eigen::VectorXd u = r.policy.trajectory.controls.front();
    log.realized_cost += cost.stage_cost(0, x, u);

    EpisodeStep rec;
    rec.step = step;
    rec.state = x;
    rec.control = u;
    rec.theta_star = r.theta_star;
    rec.theta_max = r.theta_max_seen;
    rec.cost_to_go = r.cost_to_go;
    rec.wall_time_s = r.wall_time_s;
    log.steps.push_back(std::move(rec));

    x = model.transition(x, u) + noise_source(step, noise_rng);
    warm = shift_controls(r.policy.trajectory.controls);
  }
  log.final_state = x;
  return log;
}

}  // namespace ratilqr
