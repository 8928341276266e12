#pragma once

#include "gaussot/types.hpp"

namespace gaussot::gaussian_ot {

// Squared Bures distance between PSD matrices (singular inputs allowed):
// tr A + tr B - 2 tr (A^{1/2} B A^{1/2})^{1/2}.
double bures(const Matrix& A, const Matrix& B);

// Squared 2-Wasserstein distance between unit-mass Gaussians.
double w2_gaussian(const Gaussian& alpha, const Gaussian& beta);

// Linear Monge map T with T A T = B; requires A positive definite.
Matrix monge_map(const Matrix& A, const Matrix& B);

// Gradient of bures(., B) at a positive definite A: I - monge_map(A, B).
Matrix bures_grad(const Matrix& A, const Matrix& B);

}  // namespace gaussot::gaussian_ot
