#include "gaussot/empirical.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <thread>

#include "gaussot/entropic.hpp"
#include "gaussot/linalg.hpp"
#include "gaussot/unbalanced.hpp"

namespace gaussot::empirical {

namespace {

constexpr std::int64_t kDenseDoubleLimit = 1 << 22;   // entries kept in double
constexpr std::int64_t kFloatCacheLimit = 1 << 26;    // ~256 MB of float entries
constexpr std::int64_t kBlockEntries = 10'000'000;    // cost-block cap

Vector log_weights(const Vector& w) {
  Vector lw(w.size());
  for (int i = 0; i < w.size(); ++i) {
    if (w[i] < 0.0) throw InvalidInput("discrete measure: negative weight");
    lw[i] = w[i] > 0.0 ? std::log(w[i]) : -std::numeric_limits<double>::infinity();
  }
  return lw;
}

// Log-sum-exp reductions of left_i + K_ij (over i) and right_j + K_ij
// (over j) where K = X Y^T / sigma^2. The kernel matrix is cached in double
// for small problems and in single precision (with double accumulators) for
// large ones; beyond the cache cap it is rebuilt in blocks of at most
// kBlockEntries entries per pass.
class LseKernel {
 public:
  LseKernel(const Matrix& X, const Matrix& Y, double s2)
      : n_(static_cast<int>(X.rows())), m_(static_cast<int>(Y.rows())) {
    const std::int64_t total = static_cast<std::int64_t>(n_) * m_;
    if (total <= kDenseDoubleLimit) {
      mode_ = Mode::Dense;
      kd_ = (X * Y.transpose()) / s2;
    } else if (total <= kFloatCacheLimit) {
      mode_ = Mode::Float;
      kf_ = ((X * Y.transpose()) / s2).cast<float>();
    } else {
      mode_ = Mode::Blocked;
      xs_ = X / s2;
      y_ = Y;
    }
  }

  // out_j = lse_i(left_i + K_ij)
  void lse_cols(const Vector& left, Vector& out) const {
    out.resize(m_);
    if (mode_ == Mode::Dense) {
      for (int j = 0; j < m_; ++j) {
        Eigen::ArrayXd t = kd_.col(j).array() + left.array();
        const double c = t.maxCoeff();
        out[j] = c + std::log((t - c).exp().sum());
      }
      return;
    }
    if (mode_ == Mode::Float) {
      const Eigen::ArrayXf lf = left.cast<float>().array();
      Eigen::ArrayXf t(n_);
      for (int j = 0; j < m_; ++j) {
        t = kf_.col(j).array() + lf;
        const float c = t.maxCoeff();
        out[j] = static_cast<double>(c) +
                 std::log((t - c).exp().cast<double>().sum());
      }
      return;
    }
    // Blocked: stream row blocks, merging running (max, sum) pairs.
    Vector mx = Vector::Constant(m_, -std::numeric_limits<double>::infinity());
    Vector sum = Vector::Zero(m_);
    const int block = std::max<std::int64_t>(1, kBlockEntries / m_);
    for (int i0 = 0; i0 < n_; i0 += block) {
      const int bi = std::min<int>(block, n_ - i0);
      const Matrix kb = xs_.middleRows(i0, bi) * y_.transpose();
      for (int j = 0; j < m_; ++j) {
        Eigen::ArrayXd t = kb.col(j).array() + left.segment(i0, bi).array();
        const double c = t.maxCoeff();
        if (c > mx[j]) {
          sum[j] *= std::exp(mx[j] - c);
          mx[j] = c;
        }
        sum[j] += (t - mx[j]).exp().sum();
      }
    }
    out = mx.array() + sum.array().log();
  }

  // out_i = lse_j(right_j + K_ij)
  void lse_rows(const Vector& right, Vector& out) const {
    out.resize(n_);
    if (mode_ == Mode::Dense) {
      Vector mx = Vector::Constant(n_, -std::numeric_limits<double>::infinity());
      for (int j = 0; j < m_; ++j)
        mx = mx.cwiseMax(kd_.col(j) + Vector::Constant(n_, right[j]));
      Vector sum = Vector::Zero(n_);
      for (int j = 0; j < m_; ++j)
        sum.array() += (kd_.col(j).array() + right[j] - mx.array()).exp();
      out = mx.array() + sum.array().log();
      return;
    }
    if (mode_ == Mode::Float) {
      Eigen::ArrayXf mx = Eigen::ArrayXf::Constant(n_, -std::numeric_limits<float>::infinity());
      const Eigen::ArrayXf rf = right.cast<float>().array();
      for (int j = 0; j < m_; ++j) mx = mx.max(kf_.col(j).array() + rf[j]);
      Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(n_);
      for (int j = 0; j < m_; ++j)
        sum += (kf_.col(j).array() + rf[j] - mx).exp().cast<double>();
      out = (mx.cast<double>() + sum.log()).matrix();
      return;
    }
    const int block = std::max<std::int64_t>(1, kBlockEntries / m_);
    Vector mx(n_), sum(n_);
    for (int i0 = 0; i0 < n_; i0 += block) {
      const int bi = std::min<int>(block, n_ - i0);
      const Matrix kb = xs_.middleRows(i0, bi) * y_.transpose();
      Vector bmx = Vector::Constant(bi, -std::numeric_limits<double>::infinity());
      for (int j = 0; j < m_; ++j)
        bmx = bmx.cwiseMax(kb.col(j) + Vector::Constant(bi, right[j]));
      Vector bsum = Vector::Zero(bi);
      for (int j = 0; j < m_; ++j)
        bsum.array() += (kb.col(j).array() + right[j] - bmx.array()).exp();
      mx.segment(i0, bi) = bmx;
      sum.segment(i0, bi) = bsum;
    }
    out = mx.array() + sum.array().log();
  }

 private:
  enum class Mode { Dense, Float, Blocked };
  Mode mode_ = Mode::Dense;
  int n_, m_;
  Matrix kd_;
  Eigen::MatrixXf kf_;
  Matrix xs_, y_;
};

struct SinkhornSetup {
  double s2;
  Vector loga, logb, sqx, sqy;
  LseKernel kernel;

  SinkhornSetup(const DiscreteMeasure& X, const DiscreteMeasure& Y, double sigma)
      : s2(sigma * sigma),
        loga(log_weights(X.weights)),
        logb(log_weights(Y.weights)),
        sqx(X.points.rowwise().squaredNorm()),
        sqy(Y.points.rowwise().squaredNorm()),
        kernel(X.points, Y.points, sigma * sigma) {
    if (X.dim() != Y.dim()) throw InvalidInput("sinkhorn_discrete: dimension mismatch");
    if (X.size() == 0 || Y.size() == 0) throw InvalidInput("sinkhorn_discrete: empty measure");
    if (!(sigma > 0.0)) throw InvalidInput("sinkhorn_discrete: sigma must be positive");
  }

  // g_j = -2 s2 tau (lse_i(phi_i + K_ij) + psi_j), phi folding log a and f.
  void update_g(const Vector& f, double tau, Vector& g, Vector& scratch) const {
    const Vector phi = loga.array() + (f.array() - sqx.array()) / (2.0 * s2);
    kernel.lse_cols(phi, scratch);
    g = tau * (sqy - 2.0 * s2 * scratch);
  }

  void update_f(const Vector& g, double tau, Vector& f, Vector& scratch) const {
    const Vector rho = logb.array() + (g.array() - sqy.array()) / (2.0 * s2);
    kernel.lse_rows(rho, scratch);
    f = tau * (sqx - 2.0 * s2 * scratch);
  }

  // L1 violation of the second marginal; only evaluated on failure paths.
  double marginal_violation(const Vector& f, const Vector& g, const Vector& b) const {
    Vector fresh(logb.size());
    const Vector phi = loga.array() + (f.array() - sqx.array()) / (2.0 * s2);
    kernel.lse_cols(phi, fresh);
    double err = 0.0;
    for (int j = 0; j < g.size(); ++j)
      err += std::abs(b[j] * (std::exp((g[j] - sqy[j]) / (2.0 * s2) + fresh[j]) - 1.0));
    return err;
  }
};

}  // namespace

DiscreteMeasure sample_gaussian(const Gaussian& g, int n, SeededRng& rng) {
  if (n <= 0) throw InvalidInput("sample_gaussian: n must be positive");
  const int d = g.dim();
  const Matrix L = linalg::sqrtm_psd(g.cov);
  DiscreteMeasure out;
  out.points.resize(n, d);
  Vector z(d);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < d; ++k) z[k] = rng.normal();
    out.points.row(i) = (g.mean + L * z).transpose();
  }
  out.weights = Vector::Constant(n, g.mass / n);
  return out;
}

Matrix sample_wishart(int d, double scale, int dof, SeededRng& rng) {
  if (dof < d) throw InvalidInput("sample_wishart: dof must be at least d");
  Matrix G(d, dof);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < dof; ++j) G(i, j) = rng.normal();
  return linalg::sym_part(scale * G * G.transpose());
}

SinkhornResult sinkhorn_discrete(const DiscreteMeasure& X, const DiscreteMeasure& Y, double sigma,
                                 double tol, int max_iter) {
  if (std::abs(X.weights.sum() - 1.0) > 1e-9 || std::abs(Y.weights.sum() - 1.0) > 1e-9)
    throw InvalidInput("sinkhorn_discrete: weights must sum to 1");
  const SinkhornSetup setup(X, Y, sigma);

  SinkhornResult out;
  out.f = Vector::Zero(X.size());
  out.g = Vector::Zero(Y.size());
  Vector f_new(X.size()), scratch;
  for (int it = 0; it < max_iter; ++it) {
    setup.update_g(out.f, 1.0, out.g, scratch);
    setup.update_f(out.g, 1.0, f_new, scratch);
    const double change = (f_new - out.f).lpNorm<Eigen::Infinity>();
    out.f = f_new;
    out.iterations = it + 1;
    if (change < tol) {
      out.value = X.weights.dot(out.f) + Y.weights.dot(out.g);
      return out;
    }
  }
  const double violation = setup.marginal_violation(out.f, out.g, Y.weights);
  throw NotConverged(
      "sinkhorn_discrete: max_iter reached, marginal violation " + std::to_string(violation),
      violation);
}

UnbalancedSinkhornResult sinkhorn_discrete_unbalanced(const DiscreteMeasure& X,
                                                      const DiscreteMeasure& Y, double sigma,
                                                      double gamma, double tol, int max_iter) {
  if (!(gamma > 0.0)) throw InvalidInput("sinkhorn_discrete_unbalanced: gamma must be positive");
  const double s2 = sigma * sigma;
  const double tau = gamma / (2.0 * s2 + gamma);
  const double ma = X.weights.sum();
  const double mb = Y.weights.sum();
  if (ma == 0.0 || mb == 0.0) {
    // Nothing can be transported; only the destruction terms remain. The
    // potentials are reported as zeros in this degenerate case.
    UnbalancedSinkhornResult out;
    out.f = Vector::Zero(X.size());
    out.g = Vector::Zero(Y.size());
    out.mass = 0.0;
    out.value = gamma * (ma + mb);
    return out;
  }
  const SinkhornSetup setup(X, Y, sigma);

  UnbalancedSinkhornResult out;
  out.f = Vector::Zero(X.size());
  out.g = Vector::Zero(Y.size());
  Vector f_new(X.size()), scratch;
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    setup.update_g(out.f, tau, out.g, scratch);
    setup.update_f(out.g, tau, f_new, scratch);
    const double change = (f_new - out.f).lpNorm<Eigen::Infinity>();
    out.f = f_new;
    out.iterations = it + 1;
    if (change < tol) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw NotConverged("sinkhorn_discrete_unbalanced: max_iter reached", tol);
  // Both marginal integrals equal the plan mass at optimality; their
  // geometric mean is invariant under the (f+K, g-K) gauge drift that decays
  // only at rate 2 sigma^2 / gamma, so it is the stable estimator for large
  // gamma.
  const double mass_f = (X.weights.array() * (-out.f.array() / gamma).exp()).sum();
  const double mass_g = (Y.weights.array() * (-out.g.array() / gamma).exp()).sum();
  out.mass = std::sqrt(mass_f * mass_g);
  out.value = gamma * (ma + mb) + 2.0 * s2 * ma * mb - 2.0 * (s2 + gamma) * out.mass;
  return out;
}

std::vector<ExperimentRow> convergence_experiment(const ExperimentConfig& config) {
  if (config.dims.empty() || config.ns.empty() || config.trials <= 0)
    throw InvalidInput("convergence_experiment: empty grid");
  const bool unbalanced_mode = config.gamma > 0.0;
  if (!unbalanced_mode &&
      (std::abs(config.mass_alpha - 1.0) > 1e-12 || std::abs(config.mass_beta - 1.0) > 1e-12))
    throw InvalidInput("convergence_experiment: balanced runs need unit masses");

  struct Cell {
    Gaussian alpha{Vector::Zero(1), Matrix::Identity(1, 1)};
    Gaussian beta{Vector::Zero(1), Matrix::Identity(1, 1)};
    double closed_form = 0.0;
  };
  std::vector<Cell> cells;
  cells.reserve(config.dims.size());
  for (int d : config.dims) {
    if (d <= 0) throw InvalidInput("convergence_experiment: dims must be positive");
    // One problem instance per dimension; trials vary only the samples.
    SeededRng rng(config.base_seed + stable_hash3(static_cast<std::uint64_t>(d), 0, 0));
    Vector a(d), b(d);
    for (int k = 0; k < d; ++k) a[k] = 2.0 * rng.uniform() - 1.0;
    for (int k = 0; k < d; ++k) b[k] = 2.0 * rng.uniform() - 1.0;
    const Matrix A = sample_wishart(d, 0.2, d, rng);
    const Matrix B = sample_wishart(d, 0.2, d, rng);
    Cell cell{Gaussian(a, A, config.mass_alpha), Gaussian(b, B, config.mass_beta), 0.0};
    cell.closed_form =
        unbalanced_mode
            ? unbalanced::uot(cell.alpha, cell.beta,
                              unbalanced::UnbalancedParams(config.sigma, config.gamma))
            : entropic::ot_sigma(cell.alpha, cell.beta, config.sigma);
    cells.push_back(std::move(cell));
  }

  const int per_cell = static_cast<int>(config.ns.size()) * config.trials;
  std::vector<ExperimentRow> rows(cells.size() * per_cell);
  auto run_task = [&](int task) {
    const int ci = task / per_cell;
    const int rem = task % per_cell;
    const int ni = rem / config.trials;
    const int trial = rem % config.trials;
    const int d = config.dims[ci];
    const int n = config.ns[ni];
    const Cell& cell = cells[ci];

    const std::uint64_t seed =
        config.base_seed + stable_hash3(static_cast<std::uint64_t>(d),
                                        static_cast<std::uint64_t>(n),
                                        static_cast<std::uint64_t>(trial));
    SeededRng rng(seed);
    const DiscreteMeasure X = sample_gaussian(cell.alpha, n, rng);
    const DiscreteMeasure Y = sample_gaussian(cell.beta, n, rng);
    const double empirical =
        unbalanced_mode
            ? sinkhorn_discrete_unbalanced(X, Y, config.sigma, config.gamma, config.tol,
                                           config.max_iter)
                  .value
            : sinkhorn_discrete(X, Y, config.sigma, config.tol, config.max_iter).value;

    rows[task] = ExperimentRow{d,
                               n,
                               trial,
                               config.sigma,
                               unbalanced_mode ? config.gamma : 0.0,
                               config.mass_alpha,
                               config.mass_beta,
                               empirical,
                               cell.closed_form,
                               seed};
  };

  int threads = config.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("GAUSS_EOT_THREADS")) threads = std::atoi(env);
    if (threads <= 0) threads = static_cast<int>(std::thread::hardware_concurrency());
    if (threads <= 0) threads = 1;
  }
  const int total = static_cast<int>(rows.size());
  threads = std::min(threads, total);
  if (threads <= 1) {
    for (int t = 0; t < total; ++t) run_task(t);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < total; t = next.fetch_add(1)) run_task(t);
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

std::string experiment_csv_header() {
  return "d,n,trial,sigma,gamma,mass_alpha,mass_beta,empirical,closed_form,seed";
}

std::string experiment_csv(const std::vector<ExperimentRow>& rows) {
  std::string out = experiment_csv_header() + "\n";
  char buf[320];
  for (const ExperimentRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu\n", r.d,
                  r.n, r.trial, r.sigma, r.gamma, r.mass_alpha, r.mass_beta, r.empirical,
                  r.closed_form, static_cast<unsigned long long>(r.seed));
    out += buf;
  }
  return out;
}

void write_experiment_csv(const std::string& path, const std::vector<ExperimentRow>& rows) {
  std::ofstream file(path, std::ios::binary);
  if (!file) throw InvalidInput("write_experiment_csv: cannot open " + path);
  file << experiment_csv(rows);
}

PlanHistogram plan_histogram(const Vector& f, const Vector& g, const DiscreteMeasure& X,
                             const DiscreteMeasure& Y, double sigma, int bins) {
  if (X.dim() != 1 || Y.dim() != 1)
    throw Unsupported("plan_histogram: only 1D measures are supported");
  if (bins <= 0) throw InvalidInput("plan_histogram: bins must be positive");
  const double s2 = sigma * sigma;
  const int n = X.size();
  const int m = Y.size();

  PlanHistogram out;
  out.grid = Matrix::Zero(bins, bins);
  const double xlo = X.points.minCoeff(), xhi = X.points.maxCoeff();
  const double ylo = Y.points.minCoeff(), yhi = Y.points.maxCoeff();
  const double xw = std::max(xhi - xlo, 1e-300);
  const double yw = std::max(yhi - ylo, 1e-300);
  out.x_edges = Vector::LinSpaced(bins + 1, xlo, xhi);
  out.y_edges = Vector::LinSpaced(bins + 1, ylo, yhi);

  for (int i = 0; i < n; ++i) {
    const double xi = X.points(i, 0);
    const int bi = std::min(bins - 1, static_cast<int>((xi - xlo) / xw * bins));
    for (int j = 0; j < m; ++j) {
      const double yj = Y.points(j, 0);
      const double c = (xi - yj) * (xi - yj);
      const double w = X.weights[i] * Y.weights[j] * std::exp((f[i] + g[j] - c) / (2.0 * s2));
      const int bj = std::min(bins - 1, static_cast<int>((yj - ylo) / yw * bins));
      out.grid(bi, bj) += w;
      out.total += w;
    }
  }
  return out;
}

PlanMoments plan_moments(const Vector& f, const Vector& g, const DiscreteMeasure& X,
                         const DiscreteMeasure& Y, double sigma) {
  if (X.dim() != Y.dim()) throw InvalidInput("plan_moments: dimension mismatch");
  const int d = X.dim();
  const int n = X.size();
  const int m = Y.size();
  const double s2 = sigma * sigma;

  PlanMoments out;
  out.mean = Vector::Zero(2 * d);
  Matrix second = Matrix::Zero(2 * d, 2 * d);
  Vector z(2 * d);
  for (int i = 0; i < n; ++i) {
    const double fi = f[i];
    const double sqx = X.points.row(i).squaredNorm();
    for (int j = 0; j < m; ++j) {
      const double c = sqx + Y.points.row(j).squaredNorm() -
                       2.0 * X.points.row(i).dot(Y.points.row(j));
      const double w = X.weights[i] * Y.weights[j] * std::exp((fi + g[j] - c) / (2.0 * s2));
      z.head(d) = X.points.row(i).transpose();
      z.tail(d) = Y.points.row(j).transpose();
      out.mass += w;
      out.mean += w * z;
      second += w * z * z.transpose();
    }
  }
  if (out.mass <= 0.0) throw NumericalInconsistency("plan_moments: plan mass is zero");
  out.mean /= out.mass;
  out.cov = second / out.mass - out.mean * out.mean.transpose();
  return out;
}

}  // namespace gaussot::empirical
