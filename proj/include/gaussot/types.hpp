#pragma once

#include <Eigen/Core>

#include "gaussot/errors.hpp"

namespace gaussot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Scaled Gaussian measure mass * N(mean, cov). The covariance is symmetrized
// on construction; asymmetry beyond 1e-12 * max|entry| is rejected.
struct Gaussian {
  Gaussian(Vector mean_in, Matrix cov_in, double mass_in = 1.0);

  int dim() const { return static_cast<int>(mean.size()); }

  Vector mean;
  Matrix cov;
  double mass = 1.0;
};

}  // namespace gaussot
