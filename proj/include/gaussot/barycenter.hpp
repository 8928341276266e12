#pragma once

#include <vector>

#include "gaussot/types.hpp"

namespace gaussot::barycenter {

// Weighted debiased barycenter problem over unit-mass Gaussians. Weights must
// be positive and sum to 1 within 1e-12.
struct BarycenterProblem {
  BarycenterProblem(std::vector<double> weights_in, std::vector<Gaussian> components_in,
                    double sigma_in);

  int dim() const { return components.empty() ? 0 : components.front().dim(); }

  std::vector<double> weights;
  std::vector<Gaussian> components;
  double sigma = 0.0;
};

struct BarycenterResult {
  Gaussian barycenter;
  double residual = 0.0;
  int iterations = 0;
};

// Frobenius norm of
//   sum_k w_k (B^{1/2} A_k B^{1/2} + sigma^4/4 I)^{1/2} - (B^2 + sigma^4/4 I)^{1/2}.
double barycenter_residual(const Matrix& B, const BarycenterProblem& problem);

// Damped fixed-point iteration for the barycenter covariance, started from
// the Euclidean mean of the component covariances (which sits inside the
// spectral band of the components and away from the spurious zero root).
// Damping is halved (down to damping/8) after two consecutive residual
// increases. Throws NotConverged with the best iterate if tol is not reached.
BarycenterResult debiased_barycenter(const BarycenterProblem& problem, double tol = 1e-10,
                                     int max_iter = 1000, double damping = 1.0);

}  // namespace gaussot::barycenter
