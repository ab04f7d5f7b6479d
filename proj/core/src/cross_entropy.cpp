#include "ratilqr/cross_entropy.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <numeric>
#include <stdexcept>

namespace ratilqr {

std::vector<double> draw_samples(double mu, double sigma, int num_samples,
                                 Rng& rng) {
  std::vector<double> out;
  out.reserve(num_samples);
  for (int i = 0; i < num_samples; ++i) {
    const double theta = mu + sigma * rng.normal();
    if (theta > 0.0) out.push_back(theta);
  }
  return out;
}

Objective evaluate_objective(double theta, const InnerSolve& inner, double d) {
  if (theta <= 0.0) throw std::invalid_argument("evaluate_objective: theta <= 0");
  const Objective s0 = inner(theta);
  if (!s0) return std::nullopt;
  return *s0 + d / theta;
}

int count_valid(const std::vector<Objective>& objectives) {
  return static_cast<int>(
      std::count_if(objectives.begin(), objectives.end(),
                    [](const Objective& o) { return o.has_value(); }));
}

std::pair<double, double> select_elite_and_fit(
    const std::vector<double>& samples, const std::vector<Objective>& objectives,
    int num_elite, double sigma_floor) {
  std::vector<int> order;
  for (int i = 0; i < static_cast<int>(samples.size()); ++i)
    if (objectives[i].has_value()) order.push_back(i);
  if (static_cast<int>(order.size()) < num_elite)
    throw std::logic_error("select_elite_and_fit: fewer valid samples than elites");

  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if (*objectives[a] != *objectives[b]) return *objectives[a] < *objectives[b];
    return samples[a] < samples[b];
  });

  double mean = 0.0;
  for (int i = 0; i < num_elite; ++i) mean += samples[order[i]];
  mean /= num_elite;
  double var = 0.0;
  for (int i = 0; i < num_elite; ++i) {
    const double dev = samples[order[i]] - mean;
    var += dev * dev;
  }
  var /= num_elite;  // maximum-likelihood estimate
  return {mean, std::max(std::sqrt(var), sigma_floor)};
}

namespace {

std::vector<Objective> evaluate_all(const std::vector<double>& samples,
                                    const InnerSolve& inner, double d,
                                    int threads) {
  std::vector<Objective> out(samples.size());
  if (threads <= 1 || samples.size() <= 1) {
    for (std::size_t j = 0; j < samples.size(); ++j)
      out[j] = evaluate_objective(samples[j], inner, d);
    return out;
  }
  std::vector<std::future<void>> futures;
  std::atomic<std::size_t> next{0};
  const int workers = std::min<int>(threads, static_cast<int>(samples.size()));
  for (int w = 0; w < workers; ++w) {
    futures.push_back(std::async(std::launch::async, [&]() {
      for (std::size_t j = next.fetch_add(1); j < samples.size();
           j = next.fetch_add(1))
        out[j] = evaluate_objective(samples[j], inner, d);
    }));
  }
  for (auto& f : futures) f.get();
  return out;
}

}  // namespace

CEResult optimize(CrossEntropyState& state, const CEConfig& config,
                  const InnerSolve& inner, double d, Rng& rng) {
  if (config.num_elite > config.num_samples || config.num_elite < 1)
    throw std::invalid_argument("optimize: need 1 <= num_elite <= num_samples");

  const int required =
      std::max(config.num_elite, (config.num_samples + 1) / 2);

  CEResult result;
  bool any_feasible = false;

  auto note_feasible = [&](double theta, double objective) {
    if (!any_feasible || theta > result.theta_max_seen)
      result.theta_max_seen = theta;
    if (!any_feasible || objective < result.best_feasible_objective) {
      result.best_feasible_theta = theta;
      result.best_feasible_objective = objective;
    }
    any_feasible = true;
  };

  for (int step = 1; step <= config.num_steps; ++step) {
    std::vector<double> samples;
    std::vector<Objective> objectives;
    int resamples = 0;
    bool accepted = false;

    while (!accepted) {
      const double mu = (step == 1) ? state.mu_init : state.mu;
      const double sigma = (step == 1) ? state.sigma_init : state.sigma;
      samples = draw_samples(mu, sigma, config.num_samples, rng);
      objectives = evaluate_all(samples, inner, d, config.threads);
      for (std::size_t j = 0; j < samples.size(); ++j)
        if (objectives[j]) note_feasible(samples[j], *objectives[j]);

      const int valid = count_valid(objectives);
      if (step == 1 && valid < required) {
        state.mu_init *= 0.5;
        state.sigma_init *= 0.5;
      } else if (step == 1 && valid == config.num_samples) {
        state.mu_init *= 2.0;
        state.sigma_init *= 2.0;
        accepted = true;
      } else if (valid >= required) {
        accepted = true;
      }
      if (accepted) {
        result.valid_counts.push_back(valid);
        break;
      }
      if (++resamples > config.max_resamples) {
        if (!any_feasible) {
          result.status = CEStatus::infeasible;
          return result;
        }
        result.status = CEStatus::degraded;
        result.theta_star = result.best_feasible_theta;
        return result;
      }
    }

    const double sigma_floor = config.sigma_floor_rel * state.mu_init;
    std::tie(state.mu, state.sigma) = select_elite_and_fit(
        samples, objectives, config.num_elite, sigma_floor);
  }

  result.theta_star = state.mu;
  if (!any_feasible) result.status = CEStatus::infeasible;
  return result;
}

}  // namespace ratilqr
