#include "mmrl/random.hpp"

#include <cmath>
#include <numbers>

namespace mmrl {

double RandomState::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(angle);
  has_spare_ = true;
  return r * std::cos(angle);
}

Eigen::VectorXd RandomState::normal_vector(Eigen::Index n, double sigma) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = sigma * normal();
  return v;
}

}  // namespace mmrl
