#pragma once

#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "ratilqr/rng.hpp"

namespace ratilqr {

/// Multivariate Gaussian with cached Cholesky factor and log-normalizer.
class GaussianDensity {
 public:
  GaussianDensity() = default;
  GaussianDensity(Eigen::VectorXd mean, Eigen::MatrixXd covariance);

  double log_pdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;

  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& covariance() const { return cov_; }

 private:
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
  Eigen::MatrixXd chol_lower_;
  double log_norm_ = 0.0;  // -(d/2) log(2 pi) - (1/2) log det(cov)
};

/// Mixture of Gaussians. Weights must sum to 1 within 1e-12 and every
/// covariance must be symmetric positive definite (validated on
/// construction).
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  int components() const { return static_cast<int>(weights.size()); }
  int dim() const { return means.empty() ? 0 : static_cast<int>(means[0].size()); }

  /// Copy with every component mean multiplied by `scale`.
  GaussianMixture with_mean_scale(double scale) const;
};

class MixtureDensity {
 public:
  explicit MixtureDensity(GaussianMixture spec);

  double log_pdf(const Eigen::VectorXd& x) const;
  Eigen::VectorXd sample(Rng& rng) const;
  /// Component index drawn from the weights (exposed for tests).
  int sample_component(Rng& rng) const;

  const GaussianMixture& spec() const { return spec_; }

 private:
  GaussianMixture spec_;
  std::vector<GaussianDensity> components_;
  std::vector<double> cumulative_;
};

struct KLEstimate {
  double value = 0.0;
  double std_error = 0.0;
  long n = 0;
  /// Some sample had log q = -inf; value is +inf and must not be trusted.
  bool infinite = false;
};

/// Monte-Carlo estimate of KL(p || q) = E_p[log p - log q] from n samples of
/// p, with the standard error of the mean. All density work is in log space.
KLEstimate estimate_kl_mc(
    const std::function<Eigen::VectorXd(Rng&)>& sample_p,
    const std::function<double(const Eigen::VectorXd&)>& log_p,
    const std::function<double(const Eigen::VectorXd&)>& log_q, long n, Rng& rng);

/// Finds the mean-offset scale at which KL(scaled mixture || q) hits
/// `target` within `rel_tol` by bisection on [0, max_scale]; the KL of the
/// scaled mixture against a fixed Gaussian grows monotonically with the
/// scale. Returns nullopt when the target is unreachable within bounds.
std::optional<double> calibrate_mean_scale(const GaussianMixture& mixture,
                                           const GaussianDensity& q,
                                           double target, double rel_tol, long n,
                                           std::uint64_t seed,
                                           double max_scale = 64.0);

}  // namespace ratilqr
