#include "gaussot/quadform.hpp"

#include <cmath>

#include "gaussot/linalg.hpp"

namespace gaussot::quadform {

using linalg::SymEig;

QuadPotential::QuadPotential(Matrix U_in, Vector u_in, double log_m_in)
    : U(std::move(U_in)), u(std::move(u_in)), log_m(log_m_in) {
  if (U.rows() != u.size() || U.cols() != u.size())
    throw InvalidInput("QuadPotential: U shape does not match u");
  U = linalg::symmetrized(U);
}

QuadPotential QuadPotential::zero(int dim) {
  return QuadPotential(Matrix::Zero(dim, dim), Vector::Zero(dim), 0.0);
}

double QuadPotential::eval(const Vector& x) const {
  if (x.size() != u.size()) throw InvalidInput("QuadPotential::eval: dimension mismatch");
  return -0.5 * (x.dot(U * x) - 2.0 * u.dot(x)) + log_m;
}

FactoredSum add_factored(const Matrix& A, const Vector& a, const Matrix& B, const Vector& b) {
  if (a.size() != b.size()) throw InvalidInput("add_factored: dimension mismatch");
  const Matrix As = linalg::symmetrized(A);
  const Matrix Bs = linalg::symmetrized(B);
  if (As.rows() != a.size() || Bs.rows() != b.size())
    throw InvalidInput("add_factored: matrix/vector dimension mismatch");

  FactoredSum out;
  out.C = As + Bs;
  const SymEig eig = linalg::sym_eig(out.C);
  const double top = eig.values.cwiseAbs().maxCoeff();
  if (top == 0.0 || eig.values.cwiseAbs().minCoeff() <= 1e-14 * top)
    throw SingularMatrix("add_factored: A + B is singular");
  const Matrix Cinv = linalg::spectral_apply(eig, [](double x) { return 1.0 / x; });
  out.c = Cinv * (As * a + Bs * b);
  out.q = a.dot(As * a) + b.dot(Bs * b) - out.c.dot(out.C * out.c);
  return out;
}

QuadPotential gaussian_convolve_quad(const QuadPotential& h, double sigma) {
  if (!(sigma > 0.0)) throw InvalidInput("gaussian_convolve_quad: sigma must be positive");
  const double s2 = sigma * sigma;
  const int d = h.dim();
  const Matrix K = linalg::sym_part(s2 * h.U + Matrix::Identity(d, d));
  const SymEig eig = linalg::sym_eig(K);
  if (eig.values.minCoeff() <= 0.0)
    throw NotIntegrable("gaussian_convolve_quad: sigma^2 U + I is not positive definite");
  const Matrix G = linalg::spectral_apply(eig, [](double x) { return 1.0 / x; });

  QuadPotential out;
  out.U = linalg::sym_part(G * h.U);
  out.u = G * h.u;
  out.log_m = h.log_m + 0.5 * s2 * h.u.dot(G * h.u) - 0.5 * eig.values.array().log().sum();
  return out;
}

QuadPotential sinkhorn_transform(const QuadPotential& h, const Gaussian& measure, double sigma,
                                 double tau) {
  if (!(sigma > 0.0)) throw InvalidInput("sinkhorn_transform: sigma must be positive");
  if (!(tau > 0.0 && tau <= 1.0)) throw InvalidInput("sinkhorn_transform: tau must be in (0, 1]");
  if (h.dim() != measure.dim()) throw InvalidInput("sinkhorn_transform: dimension mismatch");

  const double s2 = sigma * sigma;
  const int d = h.dim();

  const SymEig ea = linalg::sym_eig(measure.cov);
  if (!linalg::spectrum_is_pd(ea.values))
    throw SingularMatrix("sinkhorn_transform: measure covariance must be positive definite");
  const Matrix Ainv = linalg::spectral_apply(ea, [](double x) { return 1.0 / x; });
  const double logdet_a = ea.values.array().log().sum();

  const Matrix F = linalg::sym_part(s2 * h.U + s2 * Ainv + Matrix::Identity(d, d));
  const SymEig ef = linalg::sym_eig(F);
  if (ef.values.minCoeff() <= 0.0)
    throw NotIntegrable("sinkhorn_transform: sigma^2 U + sigma^2 A^{-1} + I is not PD");
  const Matrix Finv = linalg::spectral_apply(ef, [](double x) { return 1.0 / x; });
  const double logdet_f = ef.values.array().log().sum();

  const Vector m = h.u + Ainv * measure.mean;
  const double q = s2 * m.dot(Finv * m) - measure.mean.dot(Ainv * measure.mean);

  QuadPotential out;
  out.U = linalg::sym_part((tau / s2) * (Finv - Matrix::Identity(d, d)));
  out.u = -tau * (Finv * m);
  out.log_m = tau * (0.5 * logdet_a + 0.5 * logdet_f - h.log_m - std::log(measure.mass) -
                     0.5 * q - d * std::log(sigma));
  return out;
}

}  // namespace gaussot::quadform
