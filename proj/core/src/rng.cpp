#include "ratilqr/rng.hpp"

#include <cmath>

namespace ratilqr {

namespace {
std::uint64_t split_mix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  std::uint64_t state = master ^ (0xa0761d6478bd642fULL + stream);
  std::uint64_t mixed = split_mix64(state);
  // Second round decorrelates adjacent stream ids.
  return split_mix64(mixed);
}

double Rng::uniform() {
  // 53-bit mantissa in [0, 1).
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() {
  // u1 in (0, 1] keeps the log finite.
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

Eigen::VectorXd Rng::normal_vector(int n) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Eigen::VectorXd Rng::gaussian(const Eigen::VectorXd& mean,
                              const Eigen::MatrixXd& cov_cholesky_lower) {
  return mean + cov_cholesky_lower * normal_vector(static_cast<int>(mean.size()));
}

}  // namespace ratilqr
