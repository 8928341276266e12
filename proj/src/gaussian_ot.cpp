#include "gaussot/gaussian_ot.hpp"

#include <cmath>

#include "gaussot/linalg.hpp"

namespace gaussot::gaussian_ot {

using linalg::SymEig;

double bures(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw InvalidInput("bures: dimension mismatch");
  const SymEig ea = linalg::psd_eig(A);
  const SymEig eb = linalg::psd_eig(B);
  const Matrix Ah = linalg::spectral_apply(ea, [](double x) { return std::sqrt(x); });
  const Matrix Bc = linalg::spectral_apply(eb, [](double x) { return x; });
  const Matrix cross = linalg::sqrtm_psd(linalg::sym_part(Ah * Bc * Ah));
  return std::max(0.0, ea.values.sum() + eb.values.sum() - 2.0 * cross.trace());
}

double w2_gaussian(const Gaussian& alpha, const Gaussian& beta) {
  if (alpha.dim() != beta.dim()) throw InvalidInput("w2_gaussian: dimension mismatch");
  if (std::abs(alpha.mass - 1.0) > 1e-12 || std::abs(beta.mass - 1.0) > 1e-12)
    throw InvalidInput("w2_gaussian: masses must equal 1 (see the unbalanced module)");
  return (alpha.mean - beta.mean).squaredNorm() + bures(alpha.cov, beta.cov);
}

Matrix monge_map(const Matrix& A, const Matrix& B) {
  if (A.rows() != B.rows()) throw InvalidInput("monge_map: dimension mismatch");
  const SymEig ea = linalg::sym_eig(A);
  if (!linalg::spectrum_is_pd(ea.values))
    throw SingularMatrix("monge_map: A must be positive definite");
  const Matrix Ah = linalg::spectral_apply(ea, [](double x) { return std::sqrt(x); });
  const Matrix Aih = linalg::spectral_apply(ea, [](double x) { return 1.0 / std::sqrt(x); });
  const Matrix mid = linalg::sqrtm_psd(linalg::sym_part(Ah * linalg::symmetrized(B) * Ah));
  return linalg::sym_part(Aih * mid * Aih);
}

Matrix bures_grad(const Matrix& A, const Matrix& B) {
  return Matrix::Identity(A.rows(), A.cols()) - monge_map(A, B);
}

}  // namespace gaussot::gaussian_ot
