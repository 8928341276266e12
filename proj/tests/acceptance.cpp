// Acceptance suite: one line per criterion, nonzero exit if any fails.
#include <algorithm>
#include <atomic>
#include <numeric>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "gaussot/barycenter.hpp"
#include "gaussot/empirical.hpp"
#include "gaussot/entropic.hpp"
#include "gaussot/gaussian_ot.hpp"
#include "gaussot/linalg.hpp"
#include "gaussot/quadform.hpp"
#include "gaussot/rng.hpp"
#include "gaussot/unbalanced.hpp"
#include "oracles.hpp"

using namespace gaussot;

namespace {

int g_failures = 0;

void report(int index, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %2d: %-34s %s\n", pass ? "PASS" : "FAIL", index, name,
              detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void parallel_for(int total, const std::function<void(int)>& fn) {
  int threads = 0;
  if (const char* env = std::getenv("GAUSS_EOT_THREADS")) threads = std::atoi(env);
  if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
  threads = std::max(1, std::min(threads, total));
  if (threads == 1) {
    for (int t = 0; t < total; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (int t = next.fetch_add(1); t < total; t = next.fetch_add(1)) fn(t);
    });
  for (auto& th : pool) th.join();
}

double median(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

char buffer[512];

// --- 1. balanced closed-form internal consistency -------------------------

void criterion_balanced_consistency() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> dims{1, 2, 5, 10};
  const std::vector<double> sigmas{0.1, 0.5, 1.0};
  const int n_pairs = 200;

  struct Worst {
    double fixed_point = 0.0, primal = 0.0, gap = 0.0, iterate = 0.0;
  };
  std::vector<Worst> worst(n_pairs);
  std::atomic<bool> threw{false};

  parallel_for(n_pairs, [&](int p) {
    try {
      const int d = dims[p % dims.size()];
      SeededRng rng(stable_hash3(1001, p, 0));
      const Matrix A = empirical::sample_wishart(d, 0.2, d, rng);
      const Matrix B = empirical::sample_wishart(d, 0.2, d, rng);
      const Gaussian alpha(Vector::Zero(d), A);
      const Gaussian beta(Vector::Zero(d), B);
      const Matrix id = Matrix::Identity(d, d);
      for (const double sigma : sigmas) {
        const double s2 = sigma * sigma;
        const Matrix C = entropic::c_sigma(A, B, sigma);
        worst[p].fixed_point =
            std::max(worst[p].fixed_point, (C * C + s2 * C - A * B).norm());

        const double bsq = entropic::bures_sigma_sq(A, B, sigma);
        const auto plan = entropic::plan_closed_form(alpha, beta, sigma);
        const auto [cost, kl] = entropic::plan_cost_and_kl(plan);
        worst[p].primal = std::max(worst[p].primal, std::abs(cost + 2.0 * s2 * kl - bsq));

        // Stable route for the closed-form pair: G solves G B G - s2 G = A,
        // i.e. G = B^{-1/2}((B^{1/2} A B^{1/2} + s4/4)^{1/2} + s2/2) B^{-1/2},
        // which never inverts the small spectrum of A B.
        const Matrix Bh = linalg::sqrtm_psd(B);
        const Matrix Bih = linalg::invsqrtm_pd(B);
        const Matrix M =
            linalg::sqrtm_psd(linalg::sym_part(Bh * A * Bh) + 0.25 * s2 * s2 * id);
        const Matrix G = linalg::sym_part(Bih * (M + 0.5 * s2 * id) * Bih);
        const Matrix Ginv = linalg::sym_part(Bh * linalg::inverse_pd(M + 0.5 * s2 * id) * Bh);
        const Matrix F = linalg::sym_part(s2 * linalg::inverse_pd(A) + Ginv);
        worst[p].gap =
            std::max(worst[p].gap, std::abs(entropic::dual_objective(F, G, A, B, sigma) - bsq));

        const double scale = std::max({1.0, F.norm(), G.norm()});
        const auto it = entropic::sinkhorn_matrix_iterate(A, B, sigma, 1e-13 * scale, 500000);
        worst[p].iterate = std::max(
            worst[p].iterate, std::max((it.pair.F - F).norm() / std::max(1.0, F.norm()),
                                       (it.pair.G - G).norm() / std::max(1.0, G.norm())));
      }
    } catch (const std::exception&) {
      threw = true;
    }
  });

  Worst acc;
  for (const Worst& w : worst) {
    acc.fixed_point = std::max(acc.fixed_point, w.fixed_point);
    acc.primal = std::max(acc.primal, w.primal);
    acc.gap = std::max(acc.gap, w.gap);
    acc.iterate = std::max(acc.iterate, w.iterate);
  }
  const double elapsed = seconds_since(t0);
  const bool pass = !threw && acc.fixed_point < 1e-9 && acc.primal < 1e-8 && acc.gap < 1e-8 &&
                    acc.iterate < 1e-10 && elapsed < 30.0;
  std::snprintf(buffer, sizeof(buffer),
                "fp %.2e primal %.2e gap %.2e iter %.2e (%.1fs)%s", acc.fixed_point, acc.primal,
                acc.gap, acc.iterate, elapsed, threw ? " [exception]" : "");
  report(1, "balanced closed-form consistency", pass, buffer);
}

// --- 2. small- and large-sigma limits --------------------------------------

void criterion_limits() {
  double worst_small = 0.0, worst_large = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    SeededRng rng(stable_hash3(1002, rep, 0));
    const int d = 2 + rep % 4;
    const Matrix A = oracles::random_pd(d, rng);
    const Matrix B = oracles::random_pd(d, rng);
    worst_small = std::max(worst_small, std::abs(entropic::bures_sigma_sq(A, B, 1e-3) -
                                                 gaussian_ot::bures(A, B)));
    const Gaussian a0(Vector::Zero(d), A);
    const Gaussian b0(Vector::Zero(d), B);
    worst_large = std::max(worst_large, std::abs(entropic::sinkhorn_divergence(a0, b0, 1e3)));
  }
  const bool pass = worst_small < 1e-2 && worst_large < 1e-3;
  std::snprintf(buffer, sizeof(buffer), "sigma->0 gap %.2e, sigma->inf divergence %.2e",
                worst_small, worst_large);
  report(2, "regularization limits", pass, buffer);
}

// --- 3. gradients against finite differences -------------------------------

void criterion_gradient() {
  double worst = 0.0;
  for (int batch = 0; batch < 3; ++batch) {
    SeededRng rng(stable_hash3(1003, batch, 0));
    const double sigma = 0.5 + 0.25 * batch;
    for (int rep = 0; rep < 6; ++rep) {
      const int d = 3;
      const Matrix A =
          rep == 0 ? oracles::random_singular_psd(d, rng) : oracles::random_pd(d, rng);
      const Matrix B = oracles::random_pd(d, rng);
      const auto [ga, gb] = entropic::grad_bures_sigma(A, B, sigma);
      const Matrix fd = oracles::fd_gradient(
          [&](const Matrix& X) { return oracles::bures_sigma_value_bside(X, B, sigma); }, A,
          1e-6);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          worst = std::max(worst, std::abs(fd(i, j) - ga(i, j)) /
                                      std::max(std::abs(ga(i, j)), 1e-8));
    }
  }
  const bool pass = worst < 1e-4;
  std::snprintf(buffer, sizeof(buffer), "max entrywise relative error %.2e", worst);
  report(3, "gradient vs finite differences", pass, buffer);
}

// --- 4. in-A minimizer ------------------------------------------------------

void criterion_minimizer() {
  const double sigma = 0.6;
  const double s2 = sigma * sigma;
  double worst = -std::numeric_limits<double>::infinity();
  for (int rep = 0; rep < 20; ++rep) {
    SeededRng rng(stable_hash3(1004, rep, 0));
    Matrix B = oracles::random_pd(3, rng, 0.01);
    if (rep % 2 == 0)
      B += 2.0 * s2 * Matrix::Identity(3, 3);  // B above sigma^2 I
    else
      B *= 0.25 * s2 / linalg::sym_eig(B).values.maxCoeff();  // B below sigma^2 I
    const Matrix A0 = entropic::argmin_in_a(B, sigma);
    const double best = entropic::bures_sigma_sq(A0, B, sigma);
    for (int k = 0; k < 100; ++k) {
      const Matrix A = oracles::random_pd(3, rng, 0.001);
      worst = std::max(worst, best - entropic::bures_sigma_sq(A, B, sigma));
    }
  }
  const bool pass = worst <= 1e-10;
  std::snprintf(buffer, sizeof(buffer), "max (phi(A0) - phi(A)) = %.2e", worst);
  report(4, "thresholded minimizer", pass, buffer);
}

// --- 5. sampled convergence grid (balanced + unbalanced) --------------------

void criterion_sampled_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  empirical::ExperimentConfig config;
  config.dims = {5, 10};
  config.ns = {100, 500, 2000, 5000};
  config.trials = 20;
  config.sigma = 0.5;  // epsilon = 2 sigma^2 = 0.5
  config.base_seed = 20200603;
  config.tol = 2e-4;
  config.max_iter = 20000;

  bool pass = true;
  std::string detail;
  for (const double mass_beta : {1.0, 2.0}) {
    empirical::ExperimentConfig c = config;
    c.mass_beta = mass_beta;
    c.gamma = mass_beta > 1.0 ? 1.0 : 0.0;
    const auto rows = empirical::convergence_experiment(c);
    for (const int d : c.dims) {
      std::vector<double> err_small, err_large;
      for (const auto& r : rows) {
        if (r.d != d) continue;
        const double rel = std::abs(r.empirical - r.closed_form) / std::abs(r.closed_form);
        if (r.n == 100) err_small.push_back(rel);
        if (r.n == 5000) err_large.push_back(rel);
      }
      const double m100 = median(err_small);
      const double m5000 = median(err_large);
      pass = pass && m5000 < 0.05 && m5000 < m100;
      std::snprintf(buffer, sizeof(buffer), " d=%d mb=%g: %.3f->%.4f", d, mass_beta, m100,
                    m5000);
      detail += buffer;
    }
  }
  const double elapsed = seconds_since(t0);
  pass = pass && elapsed < 600.0;
  std::snprintf(buffer, sizeof(buffer), " (%.0fs)", elapsed);
  detail += buffer;
  report(5, "sampled value convergence", pass, detail);
}

// --- 6. unbalanced consistency ----------------------------------------------

// log of int exp(-x^T W x / 2 + w.x) d mu for a scaled Gaussian mu.
double log_gauss_integral(const Gaussian& mu, const Matrix& W, const Vector& w) {
  const Matrix Ainv = linalg::inverse_pd(mu.cov);
  const Matrix M = linalg::sym_part(Ainv + W);
  const auto em = linalg::sym_eig(M);
  if (em.values.minCoeff() <= 0.0) throw NotIntegrable("dual objective integral diverges");
  const Matrix Minv = linalg::spectral_apply(em, [](double x) { return 1.0 / x; });
  const Vector r = w + Ainv * mu.mean;
  const double logdet_iaw = linalg::logdet_pd(mu.cov) + em.values.array().log().sum();
  return std::log(mu.mass) - 0.5 * mu.mean.dot(Ainv * mu.mean) - 0.5 * logdet_iaw +
         0.5 * r.dot(Minv * r);
}

// Eq. 24 dual objective evaluated at quadratic duals, using the split of
// m_u m_v that balances the two single-measure integrals.
double uot_dual_objective(const Gaussian& alpha, const Gaussian& beta,
                          const unbalanced::UnbalancedDuals& duals,
                          const unbalanced::UnbalancedParams& params) {
  const int d = alpha.dim();
  const double s2 = params.sigma * params.sigma;
  const double p = 2.0 * s2 / params.gamma;

  // int exp(-f/gamma) d alpha with m_u = 1, and symmetrically.
  const double log_if = log_gauss_integral(alpha, p * duals.U, Vector(-p * duals.u));
  const double log_ig = log_gauss_integral(beta, p * duals.V, Vector(-p * duals.v));
  const double balanced_pair =
      2.0 * std::exp(0.5 * (log_if + log_ig - p * duals.log_mu_mv));

  // Double integral of exp((f + g - cost) / (2 sigma^2)) d alpha d beta.
  Matrix W2(2 * d, 2 * d);
  W2.setZero();
  W2.topLeftCorner(d, d) = -duals.U + Matrix::Identity(d, d) / s2;
  W2.bottomRightCorner(d, d) = -duals.V + Matrix::Identity(d, d) / s2;
  W2.topRightCorner(d, d) = -Matrix::Identity(d, d) / s2;
  W2.bottomLeftCorner(d, d) = -Matrix::Identity(d, d) / s2;
  Vector w2(2 * d);
  w2.head(d) = duals.u;
  w2.tail(d) = duals.v;
  Vector mean2(2 * d);
  mean2.head(d) = alpha.mean;
  mean2.tail(d) = beta.mean;
  Matrix cov2 = Matrix::Zero(2 * d, 2 * d);
  cov2.topLeftCorner(d, d) = alpha.cov;
  cov2.bottomRightCorner(d, d) = beta.cov;
  const Gaussian product(mean2, cov2, alpha.mass * beta.mass);
  const double log_ifg = log_gauss_integral(product, W2, w2) + duals.log_mu_mv;

  return params.gamma * (alpha.mass + beta.mass - balanced_pair) -
         2.0 * s2 * (std::exp(log_ifg) - alpha.mass * beta.mass);
}

void criterion_unbalanced() {
  double worst_block = 0.0, worst_roundtrip = 0.0, worst_gap = 0.0, worst_limit = 0.0;
  bool threw = false;
  for (int rep = 0; rep < 100; ++rep) {
    try {
      SeededRng rng(stable_hash3(1006, rep, 0));
      const int d = 1 + rep % 5;
      const double sigma = 0.4 + 0.4 * rng.uniform();
      const double gamma = 0.5 + 1.5 * rng.uniform();
      const unbalanced::UnbalancedParams params(sigma, gamma);
      const Gaussian alpha(oracles::random_vec(d, rng), oracles::random_pd(d, rng),
                           0.5 + rng.uniform());
      const Gaussian beta(oracles::random_vec(d, rng), oracles::random_pd(d, rng),
                          0.5 + rng.uniform());

      const auto plan = unbalanced::unbalanced_plan(alpha, beta, params);
      const Matrix precision = sigma * sigma * linalg::inverse_pd(plan.cov);
      worst_block = std::max(
          worst_block, (precision.topRightCorner(d, d) + Matrix::Identity(d, d))
                           .cwiseAbs()
                           .maxCoeff());

      const auto duals = unbalanced::unbalanced_duals(alpha, beta, params);
      const auto f_back = quadform::sinkhorn_transform(
          quadform::QuadPotential(duals.V, duals.v, 0.0), beta, sigma, params.tau());
      worst_roundtrip =
          std::max(worst_roundtrip, (f_back.U - duals.U).cwiseAbs().maxCoeff());
      worst_roundtrip =
          std::max(worst_roundtrip, (f_back.u - duals.u).cwiseAbs().maxCoeff());

      const double closed = unbalanced::uot(alpha, beta, params);
      const double dual = uot_dual_objective(alpha, beta, duals, params);
      worst_gap = std::max(worst_gap, std::abs(closed - dual) / std::abs(closed));
    } catch (const std::exception&) {
      threw = true;
    }
  }
  for (int rep = 0; rep < 10; ++rep) {
    SeededRng rng(stable_hash3(1006, rep, 1));
    const int d = 1 + rep % 3;
    const double sigma = 0.5;
    const Gaussian alpha(oracles::random_vec(d, rng), oracles::random_pd(d, rng));
    const Gaussian beta(oracles::random_vec(d, rng), oracles::random_pd(d, rng));
    const unbalanced::UnbalancedParams params(sigma, 1e6);
    worst_limit = std::max(worst_limit, std::abs(unbalanced::uot(alpha, beta, params) -
                                                 entropic::ot_sigma(alpha, beta, sigma)));
  }
  const bool pass = !threw && worst_block < 1e-8 && worst_roundtrip < 1e-8 &&
                    worst_gap < 1e-6 && worst_limit < 1e-3;
  std::snprintf(buffer, sizeof(buffer),
                "block %.2e roundtrip %.2e dual gap %.2e large-gamma %.2e%s", worst_block,
                worst_roundtrip, worst_gap, worst_limit, threw ? " [exception]" : "");
  report(6, "unbalanced consistency", pass, buffer);
}

// --- 7. empirical plan moments (unbalanced) ---------------------------------

void criterion_plan_moments() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> dims{1, 2, 5, 10};
  const std::vector<int> ns{100, 500, 2000, 5000};
  const int trials = 50;
  const double sigma = 0.5;  // epsilon = 0.5
  const double gamma = 0.1;
  const double mass_beta = 1.1;
  const unbalanced::UnbalancedParams params(sigma, gamma);

  bool pass = true;
  std::string detail;
  for (const int d : dims) {
    SeededRng pair_rng(stable_hash3(1007, d, 0));
    const Gaussian alpha(oracles::random_vec(d, pair_rng),
                         empirical::sample_wishart(d, 0.2, d, pair_rng), 1.0);
    const Gaussian beta(oracles::random_vec(d, pair_rng),
                        empirical::sample_wishart(d, 0.2, d, pair_rng), mass_beta);
    const auto plan = unbalanced::unbalanced_plan(alpha, beta, params);
    const double mean_scale = plan.mean.cwiseAbs().maxCoeff();
    const double cov_scale = plan.cov.cwiseAbs().maxCoeff();

    std::vector<double> med_mean, med_cov;
    for (const int n : ns) {
      std::vector<double> err_mean(trials), err_cov(trials);
      parallel_for(trials, [&](int trial) {
        SeededRng rng(stable_hash3(1007, stable_hash3(d, n, 2), trial));
        const auto X = empirical::sample_gaussian(alpha, n, rng);
        const auto Y = empirical::sample_gaussian(beta, n, rng);
        const auto res =
            empirical::sinkhorn_discrete_unbalanced(X, Y, sigma, gamma, 1e-7, 20000);
        const auto mom = empirical::plan_moments(res.f, res.g, X, Y, sigma);
        err_mean[trial] = (mom.mean - plan.mean).cwiseAbs().maxCoeff() / mean_scale;
        err_cov[trial] = (mom.cov - plan.cov).cwiseAbs().maxCoeff() / cov_scale;
      });
      med_mean.push_back(median(err_mean));
      med_cov.push_back(median(err_cov));
    }
    bool monotone = true;
    for (std::size_t k = 1; k < ns.size(); ++k)
      monotone = monotone && med_mean[k] <= med_mean[k - 1] && med_cov[k] <= med_cov[k - 1];
    bool small_enough = d > 2 || (med_mean.back() < 0.10 && med_cov.back() < 0.10);
    pass = pass && monotone && small_enough;
    std::snprintf(buffer, sizeof(buffer), " d=%d: mean %.3f->%.3f cov %.3f->%.3f%s", d,
                  med_mean.front(), med_mean.back(), med_cov.front(), med_cov.back(),
                  monotone ? "" : " [not monotone]");
    detail += buffer;
  }
  std::snprintf(buffer, sizeof(buffer), " (%.0fs)", seconds_since(t0));
  detail += buffer;
  report(7, "empirical plan moments", pass, detail);
}

// --- 8. barycenters ----------------------------------------------------------

void criterion_barycenter() {
  double worst_resid = 0.0;
  bool exact_k1 = true;
  bool pass = true;

  for (const int k : {2, 3, 5}) {
    for (const int d : {2, 5}) {
      SeededRng rng(stable_hash3(1008, k, d));
      std::vector<double> weights(k);
      std::vector<Gaussian> comps;
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        weights[i] = 0.5 + rng.uniform();
        total += weights[i];
      }
      for (double& w : weights) w /= total;
      weights[0] += 1.0 - std::accumulate(weights.begin(), weights.end(), 0.0);
      for (int i = 0; i < k; ++i)
        comps.emplace_back(Vector::Zero(d), oracles::random_pd(d, rng));
      const barycenter::BarycenterProblem problem(weights, comps, 0.7);
      const auto res = barycenter::debiased_barycenter(problem, 1e-11, 5000);
      worst_resid =
          std::max(worst_resid, barycenter_residual(res.barycenter.cov, problem));
    }
  }

  {
    SeededRng rng(stable_hash3(1008, 1, 1));
    const Matrix A = oracles::random_pd(3, rng);
    const barycenter::BarycenterProblem problem({1.0}, {Gaussian(Vector::Zero(3), A)}, 0.5);
    const auto res = barycenter::debiased_barycenter(problem, 1e-10, 100);
    exact_k1 = (res.barycenter.cov == A);
  }

  double oned_gap = 0.0;
  {
    const std::vector<double> w{0.5, 0.5};
    Matrix A1(1, 1), A2(1, 1);
    A1(0, 0) = 1.0;
    A2(0, 0) = 4.0;
    const double sigma = 1.0;
    const double s4q = 0.25;
    double lo = 1.0, hi = 4.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      const double r = 0.5 * std::sqrt(mid + s4q) + 0.5 * std::sqrt(4.0 * mid + s4q) -
                       std::sqrt(mid * mid + s4q);
      (r > 0.0 ? lo : hi) = mid;
    }
    const barycenter::BarycenterProblem problem(
        w, {Gaussian(Vector::Zero(1), A1), Gaussian(Vector::Zero(1), A2)}, sigma);
    const auto res = barycenter::debiased_barycenter(problem, 1e-13, 5000);
    oned_gap = std::abs(res.barycenter.cov(0, 0) - 0.5 * (lo + hi));
  }

  pass = worst_resid <= 1e-10 && exact_k1 && oned_gap < 1e-8;
  std::snprintf(buffer, sizeof(buffer), "residual %.2e, K=1 exact %s, 1D gap %.2e", worst_resid,
                exact_k1 ? "yes" : "no", oned_gap);
  report(8, "debiased barycenter", pass, buffer);
}

// --- 9. Newton-Schulz --------------------------------------------------------

void criterion_newton_schulz() {
  const std::vector<int> dims{2, 4, 8, 16, 32};
  double worst_gap = 0.0;
  bool quadratic = true;
  for (int rep = 0; rep < 50; ++rep) {
    SeededRng rng(stable_hash3(1009, rep, 0));
    const int d = dims[rep % dims.size()];
    const Matrix A =
        empirical::sample_wishart(d, 1.0 / d, d, rng) + 0.1 * Matrix::Identity(d, d);
    const Matrix B =
        empirical::sample_wishart(d, 1.0 / d, d, rng) + 0.1 * Matrix::Identity(d, d);
    const auto res = linalg::newton_schulz_monge(A, B, 1e-2, 1e-13, 200);

    // Independent eigendecomposition route for the Monge map.
    Eigen::SelfAdjointEigenSolver<Matrix> ea(A);
    const Matrix Ah = ea.operatorSqrt();
    const Matrix Aih = ea.operatorInverseSqrt();
    Eigen::SelfAdjointEigenSolver<Matrix> em(Ah * B * Ah);
    const Matrix T = Aih * em.operatorSqrt() * Aih;
    worst_gap = std::max(worst_gap, (res.t_ab - T).norm());

    // Quadratic decrease over the last (up to) five pre-floor iterations.
    const double floor = 1e-12;
    int checked = 0;
    for (std::size_t k = res.residuals.size(); k-- > 1 && checked < 5;) {
      const double r0 = res.residuals[k - 1];
      const double r1 = res.residuals[k];
      if (r1 < floor || r0 > 0.5) continue;
      quadratic = quadratic && r1 <= 3.0 * std::pow(r0, 1.7);
      ++checked;
    }
    quadratic = quadratic && checked >= 2;
  }
  const bool pass = worst_gap < 1e-6 && quadratic;
  std::snprintf(buffer, sizeof(buffer), "max gap to EVD %.2e, quadratic decrease %s", worst_gap,
                quadratic ? "yes" : "no");
  report(9, "Newton-Schulz agreement", pass, buffer);
}

// --- 10. quadratic-form lemmas against quadrature ----------------------------

void criterion_quadrature() {
  double worst_conv = 0.0, worst_transform = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    SeededRng rng(stable_hash3(1010, rep, 0));
    const double sigma = 0.4 + 0.8 * rng.uniform();
    const double gamma = 0.3 + 2.0 * rng.uniform();
    const double tau = gamma / (2.0 * sigma * sigma + gamma);
    Matrix U(1, 1);
    U(0, 0) = 1.4 * rng.uniform() - 0.2;
    Vector u(1);
    u[0] = 2.0 * rng.uniform() - 1.0;
    const quadform::QuadPotential h(U, u, rng.uniform() - 0.5);

    const auto conv = quadform::gaussian_convolve_quad(h, sigma);
    Vector mean(1);
    mean[0] = 2.0 * rng.uniform() - 1.0;
    Matrix cov(1, 1);
    cov(0, 0) = 0.3 + rng.uniform();
    const Gaussian measure(mean, cov, 0.5 + rng.uniform());
    const auto trans = quadform::sinkhorn_transform(h, measure, sigma, tau);

    for (const double x : {-1.2, 0.1, 0.9}) {
      Vector xx(1);
      xx[0] = x;
      const double conv_expected = oracles::integrate(
          [&](double y) {
            Vector yy(1);
            yy[0] = y;
            return oracles::normal_pdf(x, y, sigma * sigma) * std::exp(h.eval(yy));
          },
          x - 40.0, x + 40.0, 1e-13);
      worst_conv = std::max(
          worst_conv, std::abs(std::exp(conv.eval(xx)) - conv_expected) / conv_expected);

      const double integral = oracles::integrate(
          [&](double y) {
            Vector yy(1);
            yy[0] = y;
            return std::exp(-(x - y) * (x - y) / (2.0 * sigma * sigma) + h.eval(yy)) *
                   measure.mass * oracles::normal_pdf(y, mean[0], cov(0, 0));
          },
          x - 40.0, x + 40.0, 1e-13);
      const double trans_expected = -tau * std::log(integral);
      worst_transform = std::max(
          worst_transform,
          std::abs(trans.eval(xx) - trans_expected) / std::max(1.0, std::abs(trans_expected)));
    }
  }
  const bool pass = worst_conv < 1e-6 && worst_transform < 1e-6;
  std::snprintf(buffer, sizeof(buffer), "convolution %.2e, transform %.2e", worst_conv,
                worst_transform);
  report(10, "quadratic-form lemmas vs quadrature", pass, buffer);
}

}  // namespace

int main() {
  criterion_balanced_consistency();
  criterion_limits();
  criterion_gradient();
  criterion_minimizer();
  criterion_sampled_grid();
  criterion_unbalanced();
  criterion_plan_moments();
  criterion_barycenter();
  criterion_newton_schulz();
  criterion_quadrature();
  if (g_failures) std::printf("%d criterion(s) failed\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
