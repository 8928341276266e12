#pragma once

#include <vector>

#include "gaussot/types.hpp"

namespace gaussot::linalg {

// Relative eigenvalue tolerance used when clamping nearly-PSD spectra:
// eigenvalues above -kPsdClampTol * max(lambda_max, 1) are clamped to zero,
// anything lower is an error.
inline constexpr double kPsdClampTol = 1e-10;

// Eigenvalues at or below kSingularRelTol * lambda_max count as singular for
// the strictly-positive-definite code paths.
inline constexpr double kSingularRelTol = 1e-13;

// True when a descending spectrum is strictly positive definite under the
// relative cutoff above.
bool spectrum_is_pd(const Vector& values, double rel_tol = kSingularRelTol);

// Result of a symmetric eigendecomposition with eigenvalues in descending
// order and sign-fixed eigenvectors (largest-magnitude component positive),
// so repeated runs are bitwise reproducible.
struct SymEig {
  Vector values;
  Matrix vectors;
};

// (M + M^T)/2 without any validation. For washing numerical dust off
// products that are symmetric in exact arithmetic.
Matrix sym_part(const Matrix& M);

// Checked symmetrization: rejects matrices whose asymmetry exceeds
// 1e-12 * max|entry|, returns the symmetric average otherwise.
Matrix symmetrized(const Matrix& M);

SymEig sym_eig(const Matrix& M);

// sym_eig with PSD clamping per kPsdClampTol. Throws NotPsd when the
// spectrum is genuinely negative.
SymEig psd_eig(const Matrix& M);

// V diag(f(lambda)) V^T for a decomposition computed by sym_eig/psd_eig.
template <typename F>
Matrix spectral_apply(const SymEig& eig, F&& f) {
  Vector mapped = eig.values.unaryExpr(f);
  return sym_part(eig.vectors * mapped.asDiagonal() * eig.vectors.transpose());
}

Matrix sqrtm_psd(const Matrix& M);
Matrix invsqrtm_pd(const Matrix& M, double ridge = 0.0);

// Inverse of a strictly positive definite symmetric matrix; throws
// SingularMatrix otherwise.
Matrix inverse_pd(const Matrix& M);

double logdet_pd(const Matrix& M);

// Spectral soft-threshold: eigenvalues map to max(lambda - t, 0),
// eigenvectors are kept.
Matrix threshold_psd(const Matrix& M, double t);

double mahalanobis_sq(const Vector& a, const Vector& b, const Matrix& C);

struct NewtonSchulzResult {
  Matrix t_ab;  // Monge map A -> B
  Matrix t_ba;  // its inverse
  int iterations = 0;
  // ||Z_k Y_k - I||_F on the normalized pair, one entry per iteration.
  std::vector<double> residuals;
};

// Coupled Newton-Schulz iterations computing the Monge map pair between two
// positive definite matrices. Pre-scales both inputs to operator norm
// 1/(1+eps); stops when successive Y iterates differ by less than tol in the
// entrywise 1-norm, or after max_iter sweeps. Three consecutive residual
// increases raise NotConverged.
NewtonSchulzResult newton_schulz_monge(const Matrix& A, const Matrix& B, double eps = 1e-2,
                                       double tol = 1e-12, int max_iter = 100);

}  // namespace gaussot::linalg
