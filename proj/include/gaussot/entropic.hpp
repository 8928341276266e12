#pragma once

#include <utility>

#include "gaussot/types.hpp"

namespace gaussot::entropic {

// Entropic optimal plan between Gaussians: a 2d-dimensional Gaussian whose
// covariance has blocks (A, C; C^T, B) with the marginals on the diagonal.
struct EntropicPlan {
  Vector mean;  // (a; b)
  Matrix cov;   // 2d x 2d
  double sigma = 0.0;

  int half_dim() const { return static_cast<int>(mean.size()) / 2; }
  Matrix block_a() const;
  Matrix block_b() const;
  Matrix block_c() const;  // top-right d x d block
};

// Positive definite pair solving the matrix Sinkhorn fixed point
// F = sigma^2 A^{-1} + G^{-1}, G = sigma^2 B^{-1} + F^{-1}.
struct SinkhornPair {
  Matrix F;
  Matrix G;
};

struct SinkhornIterateResult {
  SinkhornPair pair;
  int iterations = 0;
};

// D_sigma = (4 A^{1/2} B A^{1/2} + sigma^4 I)^{1/2}; defined for PSD inputs.
Matrix d_sigma(const Matrix& A, const Matrix& B, double sigma);

// Entropic Bures cost between centered Gaussians with covariances A and B.
// Defined (and differentiable) for singular PSD inputs as well.
double bures_sigma_sq(const Matrix& A, const Matrix& B, double sigma);

// Entropic OT cost between unit-mass Gaussians:
// |a - b|^2 + bures_sigma_sq(A, B, sigma).
double ot_sigma(const Gaussian& alpha, const Gaussian& beta, double sigma);

// Cross-covariance block of the optimal plan, the positive solution of
// C^2 + sigma^2 C - A B = 0. Requires A (and the ridge-shifted pair) PD.
Matrix c_sigma(const Matrix& A, const Matrix& B, double sigma, double ridge = 0.0);

EntropicPlan plan_closed_form(const Gaussian& alpha, const Gaussian& beta, double sigma,
                              double ridge = 0.0);

// Closed-form dual potentials (U, V): f/(2 sigma^2) = Q(U), g/(2 sigma^2) = Q(V).
// Well-defined for singular PSD inputs.
std::pair<Matrix, Matrix> dual_potentials(const Matrix& A, const Matrix& B, double sigma);

// Matrix Sinkhorn iterations from F0 = sigma^2 A^{-1} + I, G0 = sigma^2 B^{-1} + I.
// Stops when the operator norm of the F-update falls below tol (bounded from
// above by the Frobenius norm, which is what is monitored).
SinkhornIterateResult sinkhorn_matrix_iterate(const Matrix& A, const Matrix& B, double sigma,
                                              double tol = 1e-12, int max_iter = 10000);

// Gradient of bures_sigma_sq in (A, B); valid for singular PSD inputs.
std::pair<Matrix, Matrix> grad_bures_sigma(const Matrix& A, const Matrix& B, double sigma);

// Minimizer of A -> bures_sigma_sq(A, B, sigma): spectral threshold of B at
// sigma^2.
Matrix argmin_in_a(const Matrix& B, double sigma);

double sinkhorn_divergence(const Gaussian& alpha, const Gaussian& beta, double sigma);

// Dual matrix program value at a feasible pair (F, G > 0 with FG - I > 0):
// <I-F, A> + <I-G, B> + sigma^2 log det((FG - I)/sigma^4)
//   + sigma^2 log det(AB) + 2 d sigma^2.
// Equals bures_sigma_sq at the optimal pair; below it elsewhere.
double dual_objective(const Matrix& F, const Matrix& G, const Matrix& A, const Matrix& B,
                      double sigma);

// Primal contraction program value at K with operator norm <= 1 - 1e-12:
// tr A + tr B - 2 tr(A^{1/2} K B^{1/2}) - sigma^2 log det(I - K K^T).
double primal_k_objective(const Matrix& K, const Matrix& A, const Matrix& B, double sigma);

// (transport cost, KL against the product of marginals) of a plan:
// cost = tr A + tr B - 2 tr C, kl per the Gaussian closed form. Satisfies
// cost + 2 sigma^2 kl = bures_sigma_sq(A, B, sigma) for the optimal plan.
std::pair<double, double> plan_cost_and_kl(const EntropicPlan& plan);

}  // namespace gaussot::entropic
