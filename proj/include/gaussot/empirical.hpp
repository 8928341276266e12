#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gaussot/rng.hpp"
#include "gaussot/types.hpp"

namespace gaussot::empirical {

// Weighted point cloud; points are rows.
struct DiscreteMeasure {
  Matrix points;   // n x d
  Vector weights;  // n, non-negative

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }
};

struct SinkhornResult {
  Vector f, g;
  double value = 0.0;
  int iterations = 0;
};

struct UnbalancedSinkhornResult {
  Vector f, g;
  double value = 0.0;
  double mass = 0.0;
  int iterations = 0;
};

// One (d, n, trial) comparison of the empirical Sinkhorn estimate against
// the closed form.
struct ExperimentRow {
  int d = 0;
  int n = 0;
  int trial = 0;
  double sigma = 0.0;
  double gamma = 0.0;  // 0 marks a balanced row
  double mass_alpha = 1.0;
  double mass_beta = 1.0;
  double empirical = 0.0;
  double closed_form = 0.0;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::vector<int> dims;
  std::vector<int> ns;
  double sigma = 0.5;
  double gamma = 0.0;  // > 0 switches to unbalanced transport
  double mass_alpha = 1.0;
  double mass_beta = 1.0;
  int trials = 20;
  std::uint64_t base_seed = 0;
  double tol = 1e-9;
  int max_iter = 10000;
  int threads = 0;  // 0: GAUSS_EOT_THREADS env var, else hardware concurrency
};

// n draws x = mean + L z with L the symmetric PSD square root of the
// covariance; weights are mass/n.
DiscreteMeasure sample_gaussian(const Gaussian& g, int n, SeededRng& rng);

// scale * G G^T for a d x dof standard normal matrix G; requires dof >= d.
Matrix sample_wishart(int d, double scale, int dof, SeededRng& rng);

// Log-domain discrete Sinkhorn between probability vectors. Converges when
// the max-norm change of f drops below tol; the reported value is the dual
// sum f.a + g.b (the exponential term vanishes at optimality).
SinkhornResult sinkhorn_discrete(const DiscreteMeasure& X, const DiscreteMeasure& Y, double sigma,
                                 double tol = 1e-9, int max_iter = 10000);

// tau-damped log-domain updates for unbalanced transport; the value follows
// the transported-mass formula with mass = sum_i a_i exp(-f_i / gamma).
UnbalancedSinkhornResult sinkhorn_discrete_unbalanced(const DiscreteMeasure& X,
                                                      const DiscreteMeasure& Y, double sigma,
                                                      double gamma, double tol = 1e-9,
                                                      int max_iter = 10000);

// Runs the sampled-vs-closed-form comparison grid. Deterministic: per-trial
// seed is base_seed + stable_hash3(d, n, trial); trials may run on several
// threads, each writing its own row slot.
std::vector<ExperimentRow> convergence_experiment(const ExperimentConfig& config);

std::string experiment_csv_header();
std::string experiment_csv(const std::vector<ExperimentRow>& rows);
void write_experiment_csv(const std::string& path, const std::vector<ExperimentRow>& rows);

// 2D histogram of the implied plan P_ij = a_i b_j exp((f_i + g_j - c_ij) /
// (2 sigma^2)); only for d = 1.
struct PlanHistogram {
  Matrix grid;  // bins x bins, rows follow x
  Vector x_edges, y_edges;
  double total = 0.0;
};
PlanHistogram plan_histogram(const Vector& f, const Vector& g, const DiscreteMeasure& X,
                             const DiscreteMeasure& Y, double sigma, int bins);

// Mass, mean and covariance of the implied plan over R^{2d}.
struct PlanMoments {
  double mass = 0.0;
  Vector mean;
  Matrix cov;
};
PlanMoments plan_moments(const Vector& f, const Vector& g, const DiscreteMeasure& X,
                         const DiscreteMeasure& Y, double sigma);

}  // namespace gaussot::empirical
