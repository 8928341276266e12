#include "gaussot/entropic.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "gaussot/linalg.hpp"

namespace gaussot::entropic {

using linalg::SymEig;

namespace {

void check_sigma(double sigma, const char* who) {
  if (!(sigma > 0.0)) throw InvalidInput(std::string(who) + ": sigma must be positive");
}

// Gradient of bures_sigma_sq in its first argument, written with the second
// argument's square root sandwich so singular inputs are fine:
// I - B^{1/2} ((B^{1/2} A B^{1/2} + sigma^4/4 I)^{1/2} + sigma^2/2 I)^{-1} B^{1/2}.
Matrix grad_first(const Matrix& A, const Matrix& B, double sigma) {
  const double s2 = sigma * sigma;
  const Matrix Bh = linalg::sqrtm_psd(B);
  const SymEig mid = linalg::psd_eig(linalg::sym_part(Bh * A * Bh));
  const Matrix inner = linalg::spectral_apply(mid, [s2](double x) {
    return 1.0 / (std::sqrt(x + 0.25 * s2 * s2) + 0.5 * s2);
  });
  return linalg::sym_part(Matrix::Identity(A.rows(), A.cols()) - Bh * inner * Bh);
}

}  // namespace

Matrix EntropicPlan::block_a() const {
  const int d = half_dim();
  return cov.topLeftCorner(d, d);
}
Matrix EntropicPlan::block_b() const {
  const int d = half_dim();
  return cov.bottomRightCorner(d, d);
}
Matrix EntropicPlan::block_c() const {
  const int d = half_dim();
  return cov.topRightCorner(d, d);
}

Matrix d_sigma(const Matrix& A, const Matrix& B, double sigma) {
  check_sigma(sigma, "d_sigma");
  if (A.rows() != B.rows()) throw InvalidInput("d_sigma: dimension mismatch");
  const double s4 = sigma * sigma * sigma * sigma;
  const Matrix Ah = linalg::sqrtm_psd(A);
  const Matrix Bc = linalg::spectral_apply(linalg::psd_eig(B), [](double x) { return x; });
  const Matrix inner =
      linalg::sym_part(4.0 * Ah * Bc * Ah + s4 * Matrix::Identity(A.rows(), A.cols()));
  return linalg::sqrtm_psd(inner);
}

double bures_sigma_sq(const Matrix& A, const Matrix& B, double sigma) {
  check_sigma(sigma, "bures_sigma_sq");
  if (A.rows() != B.rows()) throw InvalidInput("bures_sigma_sq: dimension mismatch");
  const double s2 = sigma * sigma;
  const double s4 = s2 * s2;
  const int d = static_cast<int>(A.rows());

  const SymEig ea = linalg::psd_eig(A);
  const SymEig eb = linalg::psd_eig(B);
  const Matrix Ah = linalg::spectral_apply(ea, [](double x) { return std::sqrt(x); });
  const Matrix Bc = linalg::spectral_apply(eb, [](double x) { return x; });
  // Spectrum of 4 A^{1/2} B A^{1/2} + sigma^4 I carries both tr D_sigma and
  // log det(D_sigma + sigma^2 I).
  const SymEig em = linalg::psd_eig(linalg::sym_part(4.0 * Ah * Bc * Ah));

  double tr_d = 0.0;
  double logdet = 0.0;
  for (int i = 0; i < d; ++i) {
    const double root = std::sqrt(em.values[i] + s4);
    tr_d += root;
    logdet += std::log(root + s2);
  }
  return ea.values.sum() + eb.values.sum() - tr_d + d * s2 * (1.0 - std::log(2.0 * s2)) +
         s2 * logdet;
}

double ot_sigma(const Gaussian& alpha, const Gaussian& beta, double sigma) {
  if (alpha.dim() != beta.dim()) throw InvalidInput("ot_sigma: dimension mismatch");
  if (std::abs(alpha.mass - 1.0) > 1e-12 || std::abs(beta.mass - 1.0) > 1e-12)
    throw InvalidInput("ot_sigma: masses must equal 1 (see the unbalanced module)");
  return (alpha.mean - beta.mean).squaredNorm() + bures_sigma_sq(alpha.cov, beta.cov, sigma);
}

Matrix c_sigma(const Matrix& A, const Matrix& B, double sigma, double ridge) {
  check_sigma(sigma, "c_sigma");
  if (ridge < 0.0) throw InvalidInput("c_sigma: negative ridge");
  if (A.rows() != B.rows()) throw InvalidInput("c_sigma: dimension mismatch");
  const int d = static_cast<int>(A.rows());
  const double s2 = sigma * sigma;

  const Matrix Ar = linalg::symmetrized(A) + ridge * Matrix::Identity(d, d);
  const Matrix Br = linalg::symmetrized(B) + ridge * Matrix::Identity(d, d);
  const SymEig ea = linalg::sym_eig(Ar);
  if (!linalg::spectrum_is_pd(ea.values))
    throw SingularMatrix("c_sigma: A is singular (pass a ridge to regularize)");
  const Matrix Ah = linalg::spectral_apply(ea, [](double x) { return std::sqrt(x); });
  const Matrix Aih = linalg::spectral_apply(ea, [](double x) { return 1.0 / std::sqrt(x); });

  // Similarity form of (AB + sigma^4/4 I)^{1/2} - sigma^2/2 I.
  const Matrix mid = linalg::spectral_apply(
      linalg::psd_eig(linalg::sym_part(Ah * Br * Ah)),
      [s2](double x) { return std::sqrt(x + 0.25 * s2 * s2) - 0.5 * s2; });
  return Ah * mid * Aih;
}

EntropicPlan plan_closed_form(const Gaussian& alpha, const Gaussian& beta, double sigma,
                              double ridge) {
  if (alpha.dim() != beta.dim()) throw InvalidInput("plan_closed_form: dimension mismatch");
  if (std::abs(alpha.mass - 1.0) > 1e-12 || std::abs(beta.mass - 1.0) > 1e-12)
    throw InvalidInput("plan_closed_form: masses must equal 1");
  const int d = alpha.dim();
  const Matrix C = c_sigma(alpha.cov, beta.cov, sigma, ridge);
  {
    // B must be PD too for the plan covariance to be PD.
    SymEig eb = linalg::sym_eig(beta.cov);
    eb.values.array() += ridge;
    if (!linalg::spectrum_is_pd(eb.values))
      throw SingularMatrix("plan_closed_form: B is singular (pass a ridge to regularize)");
  }

  EntropicPlan plan;
  plan.sigma = sigma;
  plan.mean.resize(2 * d);
  plan.mean << alpha.mean, beta.mean;
  plan.cov.resize(2 * d, 2 * d);
  plan.cov.topLeftCorner(d, d) = alpha.cov + ridge * Matrix::Identity(d, d);
  plan.cov.bottomRightCorner(d, d) = beta.cov + ridge * Matrix::Identity(d, d);
  plan.cov.topRightCorner(d, d) = C;
  plan.cov.bottomLeftCorner(d, d) = C.transpose();
  return plan;
}

std::pair<Matrix, Matrix> dual_potentials(const Matrix& A, const Matrix& B, double sigma) {
  check_sigma(sigma, "dual_potentials");
  const double s2 = sigma * sigma;
  // sigma^2 U = B^{1/2}((B^{1/2} A B^{1/2} + s4/4)^{1/2} + s2/2)^{-1} B^{1/2} - I,
  // which is -grad_A; symmetric and defined for singular inputs.
  const Matrix U = -grad_first(A, B, sigma) / s2;
  const Matrix V = -grad_first(B, A, sigma) / s2;
  return {U, V};
}

SinkhornIterateResult sinkhorn_matrix_iterate(const Matrix& A, const Matrix& B, double sigma,
                                              double tol, int max_iter) {
  check_sigma(sigma, "sinkhorn_matrix_iterate");
  const double s2 = sigma * sigma;
  const int d = static_cast<int>(A.rows());
  const Matrix id = Matrix::Identity(d, d);
  const Matrix Ainv = linalg::inverse_pd(linalg::symmetrized(A));
  const Matrix Binv = linalg::inverse_pd(linalg::symmetrized(B));

  Eigen::LLT<Matrix> llt;
  auto inv_spd = [&](const Matrix& M) -> Matrix {
    llt.compute(M);
    if (llt.info() != Eigen::Success) return linalg::inverse_pd(M);
    return llt.solve(Matrix::Identity(M.rows(), M.cols()));
  };

  SinkhornIterateResult out;
  Matrix F = s2 * Ainv + id;
  Matrix G = s2 * Binv + id;
  double change = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Matrix Fnew = s2 * Ainv + inv_spd(G);
    G = s2 * Binv + inv_spd(Fnew);
    // Frobenius norm bounds the operator norm from above.
    change = (Fnew - F).norm();
    F = Fnew;
    out.iterations = it + 1;
    if (change < tol) {
      out.pair = {linalg::sym_part(F), linalg::sym_part(G)};
      return out;
    }
  }
  throw NotConverged("sinkhorn_matrix_iterate: max_iter reached", change);
}

std::pair<Matrix, Matrix> grad_bures_sigma(const Matrix& A, const Matrix& B, double sigma) {
  check_sigma(sigma, "grad_bures_sigma");
  if (A.rows() != B.rows()) throw InvalidInput("grad_bures_sigma: dimension mismatch");
  return {grad_first(A, B, sigma), grad_first(B, A, sigma)};
}

Matrix argmin_in_a(const Matrix& B, double sigma) {
  check_sigma(sigma, "argmin_in_a");
  return linalg::threshold_psd(linalg::symmetrized(B), sigma * sigma);
}

double sinkhorn_divergence(const Gaussian& alpha, const Gaussian& beta, double sigma) {
  return ot_sigma(alpha, beta, sigma) -
         0.5 * (ot_sigma(alpha, alpha, sigma) + ot_sigma(beta, beta, sigma));
}

double dual_objective(const Matrix& F, const Matrix& G, const Matrix& A, const Matrix& B,
                      double sigma) {
  check_sigma(sigma, "dual_objective");
  const double s2 = sigma * sigma;
  const int d = static_cast<int>(A.rows());
  const Matrix id = Matrix::Identity(d, d);

  const SymEig ef = linalg::sym_eig(F);
  const SymEig eg = linalg::sym_eig(G);
  if (ef.values.minCoeff() <= 0.0 || eg.values.minCoeff() <= 0.0)
    throw InfeasibleDual("dual_objective: F and G must be positive definite");
  // FG - I is similar to the symmetric F^{1/2} G F^{1/2} - I.
  const Matrix Fh = linalg::spectral_apply(ef, [](double x) { return std::sqrt(x); });
  const SymEig es = linalg::sym_eig(linalg::sym_part(Fh * G * Fh) - id);
  if (es.values.minCoeff() <= 0.0)
    throw InfeasibleDual("dual_objective: FG - I is not positive definite");

  const double logdet_fg_m1 = es.values.array().log().sum();
  const double logdet_ab = linalg::logdet_pd(A) + linalg::logdet_pd(B);
  const double inner_fa = ((id - F).cwiseProduct(A)).sum();
  const double inner_gb = ((id - G).cwiseProduct(B)).sum();
  return inner_fa + inner_gb + s2 * (logdet_fg_m1 - d * std::log(s2 * s2)) + s2 * logdet_ab +
         2.0 * d * s2;
}

double primal_k_objective(const Matrix& K, const Matrix& A, const Matrix& B, double sigma) {
  check_sigma(sigma, "primal_k_objective");
  if (K.rows() != A.rows() || K.cols() != B.rows())
    throw InvalidInput("primal_k_objective: dimension mismatch");
  Eigen::JacobiSVD<Matrix> svd(K);
  const Vector s = svd.singularValues();
  if (s.size() > 0 && s[0] > 1.0 - 1e-12)
    throw InfeasiblePrimal("primal_k_objective: operator norm of K exceeds 1 - 1e-12");

  const double s2 = sigma * sigma;
  const Matrix Ah = linalg::sqrtm_psd(A);
  const Matrix Bh = linalg::sqrtm_psd(B);
  const double logdet = (1.0 - s.array().square()).log().sum();
  return A.trace() + B.trace() - 2.0 * (Ah * K * Bh).trace() - s2 * logdet;
}

std::pair<double, double> plan_cost_and_kl(const EntropicPlan& plan) {
  const Matrix A = plan.block_a();
  const Matrix B = plan.block_b();
  const Matrix C = plan.block_c();

  const SymEig ecov = linalg::sym_eig(plan.cov);
  if (!linalg::spectrum_is_pd(ecov.values))
    throw NotPositiveDefinite("plan_cost_and_kl: plan covariance is not positive definite");
  const double logdet_cov = ecov.values.array().log().sum();

  const double cost = A.trace() + B.trace() - 2.0 * C.trace();
  const double kl = 0.5 * (linalg::logdet_pd(A) + linalg::logdet_pd(B) - logdet_cov);
  return {cost, kl};
}

}  // namespace gaussot::entropic
