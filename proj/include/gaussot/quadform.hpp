#pragma once

#include "gaussot/types.hpp"

namespace gaussot::quadform {

// Quadratic potential h(x) = -1/2 (x^T U x - 2 u^T x) + log_m.
struct QuadPotential {
  Matrix U;
  Vector u;
  double log_m = 0.0;

  QuadPotential() = default;
  QuadPotential(Matrix U_in, Vector u_in, double log_m_in = 0.0);

  static QuadPotential zero(int dim);

  int dim() const { return static_cast<int>(u.size()); }
  double eval(const Vector& x) const;
};

// -1/2 ((x-c)^T C (x-c) + q) decomposition of a sum of two factored
// quadratics centered at a and b.
struct FactoredSum {
  Matrix C;
  Vector c;
  double q = 0.0;
};

FactoredSum add_factored(const Matrix& A, const Vector& a, const Matrix& B, const Vector& b);

// Convolution with the Gaussian density N(0, sigma^2 I):
// exp(result) = N(0, sigma^2 I) * exp(h). Requires sigma^2 U + I > 0.
QuadPotential gaussian_convolve_quad(const QuadPotential& h, double sigma);

// tau-damped Sinkhorn transform against a scaled Gaussian measure:
//   result(x) = -tau * log Integral exp(-|x-y|^2 / (2 sigma^2) + h(y)) d measure(y).
// Well-defined iff F = sigma^2 h.U + sigma^2 A^{-1} + I > 0, else NotIntegrable.
// tau = 1 is the balanced transform.
QuadPotential sinkhorn_transform(const QuadPotential& h, const Gaussian& measure, double sigma,
                                 double tau);

}  // namespace gaussot::quadform
