#include "gaussot/barycenter.hpp"

#include <cmath>

#include "gaussot/linalg.hpp"

namespace gaussot::barycenter {

using linalg::SymEig;

namespace {

// sum_k w_k (B^{1/2} A_k B^{1/2} + sigma^4/4 I)^{1/2}, reusing B's eig.
Matrix weighted_cross_sqrt(const SymEig& eb, const BarycenterProblem& problem) {
  const double s4q = 0.25 * std::pow(problem.sigma, 4);
  const int d = problem.dim();
  const Matrix Bh = linalg::spectral_apply(eb, [](double x) { return std::sqrt(x); });
  Matrix acc = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < problem.components.size(); ++k) {
    const Matrix mid = linalg::sym_part(Bh * problem.components[k].cov * Bh) +
                       s4q * Matrix::Identity(d, d);
    acc += problem.weights[k] * linalg::sqrtm_psd(mid);
  }
  return acc;
}

Matrix rhs_sqrt(const SymEig& eb, double sigma) {
  const double s4q = 0.25 * std::pow(sigma, 4);
  return linalg::spectral_apply(eb, [s4q](double x) { return std::sqrt(x * x + s4q); });
}

}  // namespace

BarycenterProblem::BarycenterProblem(std::vector<double> weights_in,
                                     std::vector<Gaussian> components_in, double sigma_in)
    : weights(std::move(weights_in)), components(std::move(components_in)), sigma(sigma_in) {
  if (!(sigma > 0.0)) throw InvalidInput("BarycenterProblem: sigma must be positive");
  if (weights.size() != components.size() || components.empty())
    throw InvalidInput("BarycenterProblem: need one positive weight per component");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput("BarycenterProblem: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw InvalidInput("BarycenterProblem: weights must sum to 1");
  const int d = components.front().dim();
  for (const Gaussian& g : components) {
    if (g.dim() != d) throw InvalidInput("BarycenterProblem: mixed dimensions");
    if (std::abs(g.mass - 1.0) > 1e-12)
      throw InvalidInput("BarycenterProblem: components must have unit mass");
  }
}

double barycenter_residual(const Matrix& B, const BarycenterProblem& problem) {
  const SymEig eb = linalg::psd_eig(B);
  return (weighted_cross_sqrt(eb, problem) - rhs_sqrt(eb, problem.sigma)).norm();
}

BarycenterResult debiased_barycenter(const BarycenterProblem& problem, double tol, int max_iter,
                                     double damping) {
  if (!(damping > 0.0 && damping <= 1.0))
    throw InvalidInput("debiased_barycenter: damping must be in (0, 1]");
  const int d = problem.dim();
  const double s4q = 0.25 * std::pow(problem.sigma, 4);

  Vector mean = Vector::Zero(d);
  Matrix B = Matrix::Zero(d, d);
  for (std::size_t k = 0; k < problem.components.size(); ++k) {
    mean += problem.weights[k] * problem.components[k].mean;
    B += problem.weights[k] * problem.components[k].cov;
  }

  double eta = damping;
  const double eta_floor = damping / 8.0;
  int increase_streak = 0;

  SymEig eb = linalg::psd_eig(B);
  double resid = (weighted_cross_sqrt(eb, problem) - rhs_sqrt(eb, problem.sigma)).norm();
  Matrix best = B;
  double best_resid = resid;

  int it = 0;
  while (resid > tol && it < max_iter) {
    // T(B) = ((sum_k w_k (B^{1/2} A_k B^{1/2} + s4/4)^{1/2})^2 - s4/4 I)^{1/2}
    const Matrix S = weighted_cross_sqrt(eb, problem);
    const Matrix T =
        linalg::sqrtm_psd(linalg::sym_part(S * S) - s4q * Matrix::Identity(d, d));
    B = linalg::sym_part((1.0 - eta) * B + eta * T);
    eb = linalg::psd_eig(B);
    const double next = (weighted_cross_sqrt(eb, problem) - rhs_sqrt(eb, problem.sigma)).norm();
    if (next > resid) {
      if (++increase_streak >= 2) {
        eta = std::max(0.5 * eta, eta_floor);
        increase_streak = 0;
      }
    } else {
      increase_streak = 0;
    }
    resid = next;
    if (resid < best_resid) {
      best_resid = resid;
      best = B;
    }
    ++it;
  }
  if (resid > tol)
    throw NotConverged("debiased_barycenter: residual " + std::to_string(best_resid) +
                           " above tolerance after " + std::to_string(it) + " iterations",
                       best_resid, best);

  return {Gaussian(mean, B), resid, it};
}

}  // namespace gaussot::barycenter
