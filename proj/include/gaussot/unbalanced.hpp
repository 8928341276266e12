#pragma once

#include "gaussot/types.hpp"

namespace gaussot::unbalanced {

// Regularization pair (sigma, gamma) with the derived damping exponent
// tau = gamma / (2 sigma^2 + gamma) and lambda = sigma^2 + gamma/2.
struct UnbalancedParams {
  UnbalancedParams(double sigma_in, double gamma_in);

  double tau() const { return gamma / (2.0 * sigma * sigma + gamma); }
  double lambda() const { return sigma * sigma + 0.5 * gamma; }

  double sigma;
  double gamma;
};

// Scaled Gaussian transport plan: mass * N(mean, cov) over R^{2d}.
struct UnbalancedPlan {
  double mass = 0.0;
  Vector mean;
  Matrix cov;
};

// Optimal dual potentials f/(2 sigma^2) = Q(u, U) + log m_u and symmetrically
// for g; only the product m_u m_v is determined, carried as log_mu_mv.
struct UnbalancedDuals {
  Matrix U, V;
  Vector u, v;
  double log_mu_mv = 0.0;
};

// A_tilde = gamma/2 (I - lambda (A + lambda I)^{-1}); equals
// tau (A^{-1} + lambda^{-1} I)^{-1} for positive definite A and stays
// strictly below gamma/2 I.
Matrix tilde_transform(const Matrix& A, const UnbalancedParams& params);

// Positive root of C^2 + sigma^2 C = A_tilde B_tilde / tau.
Matrix unbalanced_c(const Matrix& A_tilde, const Matrix& B_tilde, const UnbalancedParams& params);

UnbalancedPlan unbalanced_plan(const Gaussian& alpha, const Gaussian& beta,
                               const UnbalancedParams& params);

// Unbalanced entropic OT cost:
// gamma (m_alpha + m_beta) + 2 sigma^2 m_alpha m_beta - 2 (sigma^2 + gamma) m_pi.
double uot(const Gaussian& alpha, const Gaussian& beta, const UnbalancedParams& params);

UnbalancedDuals unbalanced_duals(const Gaussian& alpha, const Gaussian& beta,
                                 const UnbalancedParams& params);

// Rebuilds the plan from a set of duals through the precision-matrix form
// sigma^2 H^{-1} = (F, -I; -I, G); matches unbalanced_plan at the optimum.
UnbalancedPlan plan_from_duals(const Gaussian& alpha, const Gaussian& beta,
                               const UnbalancedDuals& duals, const UnbalancedParams& params);

}  // namespace gaussot::unbalanced
