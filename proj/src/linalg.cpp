#include "gaussot/linalg.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Dense>

namespace gaussot::linalg {

namespace {

void require_square(const Matrix& M, const char* who) {
  if (M.rows() != M.cols()) throw InvalidInput(std::string(who) + ": matrix is not square");
  if (!M.allFinite()) throw InvalidInput(std::string(who) + ": non-finite entries");
}

}  // namespace

Matrix sym_part(const Matrix& M) { return 0.5 * (M + M.transpose()); }

bool spectrum_is_pd(const Vector& values, double rel_tol) {
  if (values.size() == 0) return false;
  const double top = values[0];
  return top > 0.0 && values[values.size() - 1] > rel_tol * top;
}

Matrix symmetrized(const Matrix& M) {
  require_square(M, "symmetrized");
  const double scale = M.cwiseAbs().maxCoeff();
  const double asym = (M - M.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1.0))
    throw InvalidInput("symmetrized: asymmetry " + std::to_string(asym) + " exceeds tolerance");
  return sym_part(M);
}

SymEig sym_eig(const Matrix& M) {
  require_square(M, "sym_eig");
  const Matrix S = sym_part(M);
  Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
  if (solver.info() != Eigen::Success) throw Error("sym_eig: eigensolver failed");

  const int d = static_cast<int>(S.rows());
  SymEig out;
  out.values.resize(d);
  out.vectors.resize(d, d);
  // Eigen returns ascending order; flip to descending and fix signs so the
  // largest-magnitude component of every eigenvector is positive.
  for (int k = 0; k < d; ++k) {
    const int src = d - 1 - k;
    out.values[k] = solver.eigenvalues()[src];
    Vector v = solver.eigenvectors().col(src);
    int imax = 0;
    v.cwiseAbs().maxCoeff(&imax);
    if (v[imax] < 0.0) v = -v;
    out.vectors.col(k) = v;
  }
  return out;
}

SymEig psd_eig(const Matrix& M) {
  SymEig eig = sym_eig(M);
  const double top = eig.values.size() ? eig.values[0] : 0.0;
  const double floor = -kPsdClampTol * std::max(top, 1.0);
  for (int i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] < floor)
      throw NotPsd("psd_eig: eigenvalue " + std::to_string(eig.values[i]) +
                   " below clamping tolerance");
    if (eig.values[i] < 0.0) eig.values[i] = 0.0;
  }
  return eig;
}

Matrix sqrtm_psd(const Matrix& M) {
  return spectral_apply(psd_eig(M), [](double x) { return std::sqrt(x); });
}

Matrix invsqrtm_pd(const Matrix& M, double ridge) {
  if (ridge < 0.0) throw InvalidInput("invsqrtm_pd: negative ridge");
  SymEig eig = sym_eig(M);
  for (int i = 0; i < eig.values.size(); ++i) eig.values[i] += ridge;
  if (!spectrum_is_pd(eig.values))
    throw SingularMatrix("invsqrtm_pd: matrix not invertible with ridge " +
                         std::to_string(ridge));
  return spectral_apply(eig, [](double x) { return 1.0 / std::sqrt(x); });
}

Matrix inverse_pd(const Matrix& M) {
  SymEig eig = sym_eig(M);
  if (!spectrum_is_pd(eig.values))
    throw SingularMatrix("inverse_pd: matrix is not positive definite");
  return spectral_apply(eig, [](double x) { return 1.0 / x; });
}

double logdet_pd(const Matrix& M) {
  const SymEig eig = sym_eig(M);
  double acc = 0.0;
  for (int i = 0; i < eig.values.size(); ++i) {
    if (eig.values[i] <= 0.0)
      throw NotPositiveDefinite("logdet_pd: eigenvalue " + std::to_string(eig.values[i]));
    acc += std::log(eig.values[i]);
  }
  return acc;
}

Matrix threshold_psd(const Matrix& M, double t) {
  return spectral_apply(sym_eig(M), [t](double x) { return std::max(x - t, 0.0); });
}

double mahalanobis_sq(const Vector& a, const Vector& b, const Matrix& C) {
  if (a.size() != b.size() || C.rows() != a.size() || C.cols() != a.size())
    throw InvalidInput("mahalanobis_sq: dimension mismatch");
  const Vector d = a - b;
  return std::max(0.0, d.dot(C * d));
}

NewtonSchulzResult newton_schulz_monge(const Matrix& A, const Matrix& B, double eps, double tol,
                                       int max_iter) {
  if (eps <= 0.0) throw InvalidInput("newton_schulz_monge: eps must be positive");
  const SymEig ea = sym_eig(A);
  const SymEig eb = sym_eig(B);
  if (!spectrum_is_pd(ea.values) || !spectrum_is_pd(eb.values))
    throw NotPsd("newton_schulz_monge: inputs must be positive definite");

  // Operator norms via the top eigenvalue of the symmetric inputs.
  const double na = ea.values[0];
  const double nb = eb.values[0];
  const int d = static_cast<int>(A.rows());
  const Matrix id = Matrix::Identity(d, d);

  Matrix Y = sym_part(B) / ((1.0 + eps) * nb);
  Matrix Z = sym_part(A) / ((1.0 + eps) * na);

  NewtonSchulzResult out;
  int grow_streak = 0;
  double prev_resid = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Matrix ZY = Z * Y;
    const double resid = (ZY - id).norm();
    out.residuals.push_back(resid);
    if (resid > prev_resid) {
      if (++grow_streak >= 3)
        throw NotConverged("newton_schulz_monge: residual grew three times", resid);
    } else {
      grow_streak = 0;
    }
    prev_resid = resid;

    const Matrix T = 0.5 * (3.0 * id - ZY);
    const Matrix Ynew = Y * T;
    const double change = (Ynew - Y).cwiseAbs().sum();
    Z = T * Z;
    Y = Ynew;
    out.iterations = it + 1;
    if (change < tol) break;
  }

  out.t_ab = std::sqrt(nb / na) * Y;
  out.t_ba = std::sqrt(na / nb) * Z;
  return out;
}

}  // namespace gaussot::linalg
