#include "gaussot/unbalanced.hpp"

#include <cmath>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include "gaussot/linalg.hpp"

namespace gaussot::unbalanced {

using linalg::SymEig;

namespace {

constexpr double kPdCutoff = 1e-13;  // relative eigenvalue cutoff for the similarity path

bool strictly_pd(const SymEig& eig) {
  const double top = eig.values.size() ? eig.values[0] : 0.0;
  return top > 0.0 && eig.values.minCoeff() > kPdCutoff * top;
}

// Everything the closed forms need about one (alpha, beta, params) instance.
struct Workspace {
  double s2, s4, tau, lam;
  Matrix Ainv, Binv;
  double logdet_a, logdet_b;
  Matrix At, Bt;           // tilde matrices
  double logdet_at, logdet_bt;
  Matrix Ath, Atih;        // A_tilde^{1/2}, A_tilde^{-1/2}
  SymEig ew;               // eig of sym(Ath Bt Ath), eigenvalues mu >= 0
  Vector z;                // z_i = sqrt(mu_i / tau + s4/4) - s2/2, spectrum of C
  Matrix C;
  double logdet_c = 0.0;
};

Workspace make_workspace(const Gaussian& alpha, const Gaussian& beta,
                         const UnbalancedParams& params) {
  if (alpha.dim() != beta.dim()) throw InvalidInput("unbalanced: dimension mismatch");
  Workspace w;
  w.s2 = params.sigma * params.sigma;
  w.s4 = w.s2 * w.s2;
  w.tau = params.tau();
  w.lam = params.lambda();

  const SymEig ea = linalg::sym_eig(alpha.cov);
  const SymEig eb = linalg::sym_eig(beta.cov);
  if (!linalg::spectrum_is_pd(ea.values) || !linalg::spectrum_is_pd(eb.values))
    throw SingularMatrix("unbalanced: covariances must be positive definite");
  w.Ainv = linalg::spectral_apply(ea, [](double x) { return 1.0 / x; });
  w.Binv = linalg::spectral_apply(eb, [](double x) { return 1.0 / x; });
  w.logdet_a = ea.values.array().log().sum();
  w.logdet_b = eb.values.array().log().sum();

  // Tilde spectra follow the input spectra: lambda_tilde = tau/(1/x + 1/lam).
  const double tau = w.tau;
  const double lam = w.lam;
  auto tilde = [tau, lam](double x) { return tau / (1.0 / x + 1.0 / lam); };
  w.At = linalg::spectral_apply(ea, tilde);
  w.Bt = linalg::spectral_apply(eb, tilde);
  w.logdet_at = ea.values.unaryExpr(tilde).array().log().sum();
  w.logdet_bt = eb.values.unaryExpr(tilde).array().log().sum();

  const SymEig eat = linalg::sym_eig(w.At);
  w.Ath = linalg::spectral_apply(eat, [](double x) { return std::sqrt(x); });
  w.Atih = linalg::spectral_apply(eat, [](double x) { return 1.0 / std::sqrt(x); });

  w.ew = linalg::psd_eig(linalg::sym_part(w.Ath * w.Bt * w.Ath));
  const double s2 = w.s2;
  const double s4 = w.s4;
  w.z = w.ew.values.unaryExpr(
      [tau, s2, s4](double mu) { return std::sqrt(mu / tau + 0.25 * s4) - 0.5 * s2; });

  const Matrix Zt =
      linalg::sym_part(w.ew.vectors * w.z.asDiagonal() * w.ew.vectors.transpose());
  w.C = w.Ath * Zt * w.Atih;
  w.logdet_c = w.z.array().log().sum();
  return w;
}

}  // namespace

UnbalancedParams::UnbalancedParams(double sigma_in, double gamma_in)
    : sigma(sigma_in), gamma(gamma_in) {
  if (!(sigma > 0.0)) throw InvalidInput("UnbalancedParams: sigma must be positive");
  if (!(gamma > 0.0)) throw InvalidInput("UnbalancedParams: gamma must be positive");
}

Matrix tilde_transform(const Matrix& A, const UnbalancedParams& params) {
  const Matrix As = linalg::symmetrized(A);
  const int d = static_cast<int>(As.rows());
  const double lam = params.lambda();
  const Matrix shifted_inv = linalg::inverse_pd(As + lam * Matrix::Identity(d, d));
  return linalg::sym_part(0.5 * params.gamma * (Matrix::Identity(d, d) - lam * shifted_inv));
}

Matrix unbalanced_c(const Matrix& A_tilde, const Matrix& B_tilde,
                    const UnbalancedParams& params) {
  const double s2 = params.sigma * params.sigma;
  const double s4 = s2 * s2;
  const double tau = params.tau();
  const int d = static_cast<int>(A_tilde.rows());
  const Matrix id = Matrix::Identity(d, d);

  const SymEig eat = linalg::psd_eig(linalg::symmetrized(A_tilde));
  const SymEig ebt = linalg::psd_eig(linalg::symmetrized(B_tilde));
  auto via_similarity = [&](const SymEig& left, const Matrix& right) {
    const Matrix Lh = linalg::spectral_apply(left, [](double x) { return std::sqrt(x); });
    const Matrix Lih = linalg::spectral_apply(left, [](double x) { return 1.0 / std::sqrt(x); });
    const Matrix mid = linalg::spectral_apply(
        linalg::psd_eig(linalg::sym_part(Lh * right * Lh)),
        [&](double mu) { return std::sqrt(mu / tau + 0.25 * s4) - 0.5 * s2; });
    return Matrix(Lh * mid * Lih);
  };

  if (strictly_pd(eat)) return via_similarity(eat, linalg::symmetrized(B_tilde));
  if (strictly_pd(ebt))
    return via_similarity(ebt, linalg::symmetrized(A_tilde)).transpose();
  // Both factors degenerate: fall back to a Schur-based square root of the
  // (positive-spectrum) product form.
  const Matrix M = (1.0 / tau) * linalg::symmetrized(A_tilde) * linalg::symmetrized(B_tilde) +
                   0.25 * s4 * id;
  return Matrix(M.sqrt()) - 0.5 * s2 * id;
}

UnbalancedPlan unbalanced_plan(const Gaussian& alpha, const Gaussian& beta,
                               const UnbalancedParams& params) {
  const Workspace w = make_workspace(alpha, beta, params);
  const int d = alpha.dim();
  const Matrix id = Matrix::Identity(d, d);

  const Matrix X = linalg::sym_part(alpha.cov + beta.cov) + w.lam * id;
  const Matrix Xinv = linalg::inverse_pd(X);

  UnbalancedPlan plan;
  plan.mean.resize(2 * d);
  const Vector diff = beta.mean - alpha.mean;
  plan.mean.head(d) = alpha.mean + alpha.cov * (Xinv * diff);
  plan.mean.tail(d) = beta.mean - beta.cov * (Xinv * diff);

  const Matrix IC = id + w.C / w.lam;
  const Matrix ICt = id + w.C.transpose() / w.lam;
  Matrix H(2 * d, 2 * d);
  H.topLeftCorner(d, d) = IC * (alpha.cov - alpha.cov * Xinv * alpha.cov);
  H.topRightCorner(d, d) = w.C + IC * (alpha.cov * Xinv * beta.cov);
  H.bottomLeftCorner(d, d) = w.C.transpose() + ICt * (beta.cov * Xinv * alpha.cov);
  H.bottomRightCorner(d, d) = ICt * (beta.cov - beta.cov * Xinv * beta.cov);
  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double asym = (H - H.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-9 * scale)
    throw NumericalInconsistency("unbalanced_plan: plan covariance asymmetry " +
                                 std::to_string(asym));
  plan.cov = linalg::sym_part(H);

  // Spectrum of C - (2/gamma) At Bt in the shared eigenbasis of the
  // similarity transform; its positivity backs the square root in m_pi.
  double logdet_small = 0.0;
  for (int i = 0; i < d; ++i) {
    const double nu = w.z[i] - (2.0 / params.gamma) * w.ew.values[i];
    if (nu <= 0.0)
      throw NumericalInconsistency("unbalanced_plan: det(C - 2/gamma At Bt) not positive");
    logdet_small += std::log(nu);
  }

  const double tau = w.tau;
  const double log_mass =
      (d * w.s2 / (params.gamma + w.s2)) * std::log(params.sigma) +
      (std::log(alpha.mass) + std::log(beta.mass) + w.logdet_c +
       0.5 * (tau * (w.logdet_at + w.logdet_bt) - (w.logdet_a + w.logdet_b))) /
          (tau + 1.0) -
      linalg::mahalanobis_sq(alpha.mean, beta.mean, Xinv) / (2.0 * (tau + 1.0)) -
      0.5 * logdet_small;
  plan.mass = std::exp(log_mass);
  return plan;
}

double uot(const Gaussian& alpha, const Gaussian& beta, const UnbalancedParams& params) {
  const UnbalancedPlan plan = unbalanced_plan(alpha, beta, params);
  const double s2 = params.sigma * params.sigma;
  return params.gamma * (alpha.mass + beta.mass) + 2.0 * s2 * alpha.mass * beta.mass -
         2.0 * (s2 + params.gamma) * plan.mass;
}

UnbalancedDuals unbalanced_duals(const Gaussian& alpha, const Gaussian& beta,
                                 const UnbalancedParams& params) {
  const Workspace w = make_workspace(alpha, beta, params);
  const int d = alpha.dim();
  const Matrix id = Matrix::Identity(d, d);
  const double tau = w.tau;

  // G = C^{-1} At = Ath Zt^{-1} Ath; F = tau (sigma^2 At^{-1} + G^{-1}).
  const Matrix Zt_inv = linalg::sym_part(
      w.ew.vectors * w.z.cwiseInverse().asDiagonal() * w.ew.vectors.transpose());
  const Matrix G = linalg::sym_part(w.Ath * Zt_inv * w.Ath);
  const Matrix Ginv = linalg::sym_part(
      w.Atih * w.ew.vectors * w.z.asDiagonal() * w.ew.vectors.transpose() * w.Atih);
  const Matrix At_inv = linalg::sym_part(w.Atih * w.Atih);
  const Matrix F = linalg::sym_part(tau * (w.s2 * At_inv + Ginv));

  UnbalancedDuals duals;
  duals.U = linalg::sym_part((F - w.s2 * w.Ainv - id) / w.s2);
  duals.V = linalg::sym_part((G - w.s2 * w.Binv - id) / w.s2);

  const Vector Aa = w.Ainv * alpha.mean;
  const Vector Bb = w.Binv * beta.mean;
  const Matrix Mv = G * F - tau * tau * id;
  const Matrix Mu = F * G - tau * tau * id;
  Eigen::PartialPivLU<Matrix> lu_v(Mv);
  Eigen::PartialPivLU<Matrix> lu_u(Mu);
  duals.v = lu_v.solve(-tau * (G * Aa) + tau * tau * Bb);
  duals.u = lu_u.solve(-tau * (F * Bb) + tau * tau * Aa);
  const double rhs_scale = std::max(1.0, Aa.norm() + Bb.norm());
  if ((Mv * duals.v - (-tau * (G * Aa) + tau * tau * Bb)).norm() > 1e-8 * rhs_scale ||
      (Mu * duals.u - (-tau * (F * Bb) + tau * tau * Aa)).norm() > 1e-8 * rhs_scale)
    throw NumericalInconsistency("unbalanced_duals: GF - tau^2 I solve failed");

  const double logdet_f = linalg::logdet_pd(F);
  const double logdet_g = w.logdet_at - w.logdet_c;  // det G = det At / det C
  const double q_u = (w.s2 / (tau * tau)) * duals.v.dot(F * duals.v) -
                     alpha.mean.dot(w.Ainv * alpha.mean);
  const double q_v = (w.s2 / (tau * tau)) * duals.u.dot(G * duals.u) -
                     beta.mean.dot(w.Binv * beta.mean);
  duals.log_mu_mv =
      (tau * (0.5 * (w.logdet_a + w.logdet_b + logdet_f + logdet_g) -
              2.0 * d * std::log(params.sigma) - std::log(alpha.mass) - std::log(beta.mass)) -
       0.5 * tau * (q_u + q_v)) /
      (tau + 1.0);
  return duals;
}

UnbalancedPlan plan_from_duals(const Gaussian& alpha, const Gaussian& beta,
                               const UnbalancedDuals& duals, const UnbalancedParams& params) {
  const int d = alpha.dim();
  const double s2 = params.sigma * params.sigma;
  const Matrix id = Matrix::Identity(d, d);
  const Matrix Ainv = linalg::inverse_pd(alpha.cov);
  const Matrix Binv = linalg::inverse_pd(beta.cov);

  const Matrix F = linalg::sym_part(s2 * duals.U + s2 * Ainv + id);
  const Matrix G = linalg::sym_part(s2 * duals.V + s2 * Binv + id);
  Matrix gamma_mat(2 * d, 2 * d);
  gamma_mat.topLeftCorner(d, d) = F / s2;
  gamma_mat.topRightCorner(d, d) = -id / s2;
  gamma_mat.bottomLeftCorner(d, d) = -id / s2;
  gamma_mat.bottomRightCorner(d, d) = G / s2;

  const SymEig eg = linalg::sym_eig(gamma_mat);
  if (eg.values.minCoeff() <= 0.0)
    throw NumericalInconsistency("plan_from_duals: precision matrix is not positive definite");
  const Matrix H = linalg::spectral_apply(eg, [](double x) { return 1.0 / x; });
  const double logdet_h = -eg.values.array().log().sum();

  Vector rhs(2 * d);
  rhs.head(d) = Ainv * alpha.mean + duals.u;
  rhs.tail(d) = Binv * beta.mean + duals.v;

  UnbalancedPlan plan;
  plan.cov = H;
  plan.mean = H * rhs;
  const double log_mass = std::log(alpha.mass) + std::log(beta.mass) + duals.log_mu_mv +
                          0.5 * (logdet_h - linalg::logdet_pd(alpha.cov) -
                                 linalg::logdet_pd(beta.cov)) +
                          0.5 * rhs.dot(plan.mean) -
                          0.5 * (alpha.mean.dot(Ainv * alpha.mean) +
                                 beta.mean.dot(Binv * beta.mean));
  plan.mass = std::exp(log_mass);
  return plan;
}

}  // namespace gaussot::unbalanced
