// gaussot: closed-form entropic optimal transport between Gaussian measures,
// with a sample-based Sinkhorn validation harness.
//
// Exit codes: 0 success, 2 input error, 3 numerical precondition failure,
// 4 non-convergence.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gaussot/barycenter.hpp"
#include "gaussot/empirical.hpp"
#include "gaussot/entropic.hpp"
#include "gaussot/gaussian_ot.hpp"
#include "gaussot/linalg.hpp"
#include "gaussot/types.hpp"
#include "gaussot/unbalanced.hpp"

namespace {

using gaussot::Gaussian;
using gaussot::InvalidInput;
using gaussot::Matrix;
using gaussot::Vector;
using nlohmann::json;

// All numeric output carries 17 significant digits.
std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string vec_json(const Vector& v) {
  std::string out = "[";
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += num(v[i]);
  }
  return out + "]";
}

std::string mat_json(const Matrix& m) {
  std::string out = "[";
  for (int i = 0; i < m.rows(); ++i) {
    if (i) out += ",";
    out += "[";
    for (int j = 0; j < m.cols(); ++j) {
      if (j) out += ",";
      out += num(m(i, j));
    }
    out += "]";
  }
  return out + "]";
}

json load_json(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw InvalidInput("cannot open " + path);
  json doc;
  try {
    file >> doc;
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return doc;
}

Matrix parse_cov(const json& rows, const std::string& what) {
  if (!rows.is_array() || rows.empty()) throw InvalidInput(what + ": cov must be a nested array");
  const auto d = rows.size();
  Matrix cov(d, d);
  for (std::size_t i = 0; i < d; ++i) {
    if (!rows[i].is_array() || rows[i].size() != d)
      throw InvalidInput(what + ": cov must be square");
    for (std::size_t j = 0; j < d; ++j) cov(i, j) = rows[i][j].get<double>();
  }
  const double scale = std::max(1.0, cov.cwiseAbs().maxCoeff());
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale)
    throw InvalidInput(what + ": cov is not symmetric within 1e-9");
  return gaussot::linalg::sym_part(cov);
}

Gaussian parse_gaussian(const json& node, const std::string& what) {
  if (!node.contains("mean") || !node.contains("cov"))
    throw InvalidInput(what + ": needs mean and cov");
  const auto& mean_node = node["mean"];
  Vector mean(mean_node.size());
  for (std::size_t i = 0; i < mean_node.size(); ++i) mean[i] = mean_node[i].get<double>();
  Matrix cov = parse_cov(node["cov"], what);
  if (cov.rows() != mean.size()) throw InvalidInput(what + ": mean/cov dimension mismatch");
  const double mass = node.value("mass", 1.0);
  return Gaussian(mean, cov, mass);
}

double sigma_from_spec(const json& doc, const std::string& what) {
  const bool has_sigma = doc.contains("sigma");
  const bool has_epsilon = doc.contains("epsilon");
  if (has_sigma == has_epsilon)
    throw InvalidInput(what + ": exactly one of sigma/epsilon is required");
  if (has_sigma) {
    const double sigma = doc["sigma"].get<double>();
    if (!(sigma > 0.0)) throw InvalidInput(what + ": sigma must be positive");
    return sigma;
  }
  const double epsilon = doc["epsilon"].get<double>();  // epsilon = 2 sigma^2
  if (!(epsilon > 0.0)) throw InvalidInput(what + ": epsilon must be positive");
  return std::sqrt(0.5 * epsilon);
}

struct Problem {
  Gaussian alpha;
  Gaussian beta;
  double sigma = 0.0;
  std::optional<double> gamma;
};

Problem load_problem(const std::string& path) {
  const json doc = load_json(path);
  if (!doc.contains("alpha") || !doc.contains("beta"))
    throw InvalidInput(path + ": needs alpha and beta");
  Problem p{parse_gaussian(doc["alpha"], "alpha"), parse_gaussian(doc["beta"], "beta"),
            sigma_from_spec(doc, path), std::nullopt};
  if (doc.contains("gamma")) {
    const double gamma = doc["gamma"].get<double>();
    if (!(gamma > 0.0)) throw InvalidInput(path + ": gamma must be positive");
    p.gamma = gamma;
  }
  return p;
}

int run_bures(const std::string& file) {
  const Problem p = load_problem(file);
  const double w2 = gaussot::gaussian_ot::w2_gaussian(p.alpha, p.beta);
  const double b = gaussot::gaussian_ot::bures(p.alpha.cov, p.beta.cov);
  std::cout << "{\"w2\":" << num(w2) << ",\"bures\":" << num(b) << "}\n";
  return 0;
}

int run_entropic(const std::string& file, bool with_plan, bool with_duals, bool with_grad,
                 double ridge) {
  namespace ent = gaussot::entropic;
  const Problem p = load_problem(file);
  const double ot = ent::ot_sigma(p.alpha, p.beta, p.sigma);
  const double bsq = ent::bures_sigma_sq(p.alpha.cov, p.beta.cov, p.sigma);
  const double div = ent::sinkhorn_divergence(p.alpha, p.beta, p.sigma);

  std::string out = "{\"sigma\":" + num(p.sigma) + ",\"ot_sigma\":" + num(ot) +
                    ",\"bures_sigma_sq\":" + num(bsq) + ",\"divergence\":" + num(div);
  if (with_plan) {
    const ent::EntropicPlan plan = ent::plan_closed_form(p.alpha, p.beta, p.sigma, ridge);
    out += ",\"plan\":{\"mean\":" + vec_json(plan.mean) + ",\"cov\":" + mat_json(plan.cov) + "}";
  }
  if (with_duals) {
    const auto [U, V] = ent::dual_potentials(p.alpha.cov, p.beta.cov, p.sigma);
    out += ",\"duals\":{\"U\":" + mat_json(U) + ",\"V\":" + mat_json(V) + "}";
  }
  if (with_grad) {
    const auto [ga, gb] = ent::grad_bures_sigma(p.alpha.cov, p.beta.cov, p.sigma);
    out += ",\"grad\":{\"A\":" + mat_json(ga) + ",\"B\":" + mat_json(gb) + "}";
  }
  std::cout << out << "}\n";
  return 0;
}

int run_uot(const std::string& file) {
  namespace unb = gaussot::unbalanced;
  const Problem p = load_problem(file);
  if (!p.gamma) throw InvalidInput(file + ": uot needs gamma");
  const unb::UnbalancedParams params(p.sigma, *p.gamma);
  const unb::UnbalancedPlan plan = unb::unbalanced_plan(p.alpha, p.beta, params);
  const double value = gaussot::unbalanced::uot(p.alpha, p.beta, params);
  std::cout << "{\"uot\":" << num(value) << ",\"mass\":" << num(plan.mass)
            << ",\"mean\":" << vec_json(plan.mean) << ",\"cov\":" << mat_json(plan.cov) << "}\n";
  return 0;
}

int run_barycenter(const std::string& file, double sigma, double tol, int max_iter,
                   double damping) {
  namespace bar = gaussot::barycenter;
  const json doc = load_json(file);
  if (!doc.contains("components") || !doc["components"].is_array())
    throw InvalidInput(file + ": needs a components array");
  std::vector<double> weights;
  std::vector<Gaussian> components;
  for (const auto& node : doc["components"]) {
    if (!node.contains("weight")) throw InvalidInput(file + ": component needs a weight");
    weights.push_back(node["weight"].get<double>());
    components.push_back(parse_gaussian(node, "component"));
  }
  const bar::BarycenterProblem problem(weights, components, sigma);
  if (tol <= 0.0) {
    // Default: 1e-10 relative to the trace of the Euclidean-mean start.
    Matrix b0 = Matrix::Zero(problem.dim(), problem.dim());
    for (std::size_t k = 0; k < problem.components.size(); ++k)
      b0 += problem.weights[k] * problem.components[k].cov;
    tol = 1e-10 * std::max(1.0, b0.trace());
  }
  const bar::BarycenterResult res = bar::debiased_barycenter(problem, tol, max_iter, damping);
  std::cout << "{\"mean\":" << vec_json(res.barycenter.mean)
            << ",\"cov\":" << mat_json(res.barycenter.cov) << ",\"residual\":" << num(res.residual)
            << ",\"iterations\":" << res.iterations << "}\n";
  return 0;
}

int run_validate(const gaussot::empirical::ExperimentConfig& config, double epsilon_flag,
                 const std::string& out_path) {
  namespace emp = gaussot::empirical;
  const std::vector<emp::ExperimentRow> rows = emp::convergence_experiment(config);
  emp::write_experiment_csv(out_path, rows);
  std::cout << "{\"out\":\"" << out_path << "\",\"rows\":" << rows.size()
            << ",\"sigma\":" << num(config.sigma) << ",\"epsilon\":" << num(epsilon_flag)
            << ",\"gamma\":" << num(config.gamma) << ",\"mass_alpha\":" << num(config.mass_alpha)
            << ",\"mass_beta\":" << num(config.mass_beta) << ",\"trials\":" << config.trials
            << ",\"seed\":" << config.base_seed << ",\"tol\":" << num(config.tol)
            << ",\"max_iter\":" << config.max_iter
            << ",\"rng\":\"splitmix64-counter\",\"estimator\":\"dual\"}\n";
  return 0;
}

int run_plan_hist(const std::string& file, int n, int bins, std::uint64_t seed,
                  const std::string& out_path) {
  namespace emp = gaussot::empirical;
  const Problem p = load_problem(file);
  if (p.alpha.dim() != 1) throw gaussot::Unsupported("plan-hist: only 1D problems");

  gaussot::SeededRng rng(seed);
  const emp::DiscreteMeasure X = emp::sample_gaussian(p.alpha, n, rng);
  const emp::DiscreteMeasure Y = emp::sample_gaussian(p.beta, n, rng);

  Vector f, g;
  std::string theory;
  if (p.gamma) {
    const gaussot::unbalanced::UnbalancedParams params(p.sigma, *p.gamma);
    const auto res = emp::sinkhorn_discrete_unbalanced(X, Y, p.sigma, *p.gamma);
    f = res.f;
    g = res.g;
    const auto plan = gaussot::unbalanced::unbalanced_plan(p.alpha, p.beta, params);
    theory = "{\"mass\":" + num(plan.mass) + ",\"mean\":" + vec_json(plan.mean) +
             ",\"cov\":" + mat_json(plan.cov) + "}";
  } else {
    const auto res = emp::sinkhorn_discrete(X, Y, p.sigma);
    f = res.f;
    g = res.g;
    const auto plan = gaussot::entropic::plan_closed_form(p.alpha, p.beta, p.sigma);
    theory = "{\"mean\":" + vec_json(plan.mean) + ",\"cov\":" + mat_json(plan.cov) + "}";
  }

  const emp::PlanHistogram hist = emp::plan_histogram(f, g, X, Y, p.sigma, bins);
  std::ofstream csv(out_path, std::ios::binary);
  if (!csv) throw InvalidInput("cannot open " + out_path);
  csv << "xbin,ybin,x_center,y_center,weight\n";
  for (int i = 0; i < bins; ++i)
    for (int j = 0; j < bins; ++j)
      csv << i << "," << j << "," << num(0.5 * (hist.x_edges[i] + hist.x_edges[i + 1])) << ","
          << num(0.5 * (hist.y_edges[j] + hist.y_edges[j + 1])) << "," << num(hist.grid(i, j))
          << "\n";
  std::cout << "{\"out\":\"" << out_path << "\",\"total_mass\":" << num(hist.total)
            << ",\"seed\":" << seed << ",\"theory\":" << theory << "}\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Closed-form entropic optimal transport between Gaussian measures"};
  app.require_subcommand(1);

  std::string file, out_path = "out.csv";
  bool with_plan = false, with_duals = false, with_grad = false;
  double ridge = 0.0, sigma_flag = 0.0, epsilon_flag = 0.0, tol = 0.0, damping = 1.0;
  int max_iter = 1000, n_samples = 2000, bins = 200;
  std::uint64_t seed = 0;
  gaussot::empirical::ExperimentConfig config;

  auto* bures_cmd = app.add_subcommand("bures", "Wasserstein-Bures distance");
  bures_cmd->add_option("problem", file, "problem JSON file")->required();

  auto* ent_cmd = app.add_subcommand("entropic", "Balanced entropic closed forms");
  ent_cmd->add_option("problem", file)->required();
  ent_cmd->add_flag("--plan", with_plan, "include the optimal plan");
  ent_cmd->add_flag("--duals", with_duals, "include the dual potentials");
  ent_cmd->add_flag("--gradient", with_grad, "include the cost gradient");
  ent_cmd->add_option("--ridge", ridge, "jitter added to covariances for the plan path");

  auto* uot_cmd = app.add_subcommand("uot", "Unbalanced entropic closed forms");
  uot_cmd->add_option("problem", file)->required();

  auto* bar_cmd = app.add_subcommand("barycenter", "Debiased Gaussian barycenter");
  bar_cmd->add_option("components", file)->required();
  auto* bar_sigma = bar_cmd->add_option("--sigma", sigma_flag, "regularization sigma");
  auto* bar_eps = bar_cmd->add_option("--epsilon", epsilon_flag, "epsilon = 2 sigma^2");
  bar_sigma->excludes(bar_eps);
  bar_cmd->add_option("--tol", tol, "fixed-point residual tolerance");
  bar_cmd->add_option("--max-iter", max_iter, "iteration cap");
  bar_cmd->add_option("--damping", damping, "fixed-point damping in (0, 1]");

  auto* val_cmd = app.add_subcommand("validate", "Sampled Sinkhorn vs closed form grid");
  val_cmd->add_option("--dims", config.dims, "dimensions")->required()->delimiter(',');
  val_cmd->add_option("--ns", config.ns, "sample counts")->required()->delimiter(',');
  val_cmd->add_option("--trials", config.trials, "independent trials per cell");
  auto* val_sigma = val_cmd->add_option("--sigma", sigma_flag, "regularization sigma");
  auto* val_eps = val_cmd->add_option("--epsilon", epsilon_flag, "epsilon = 2 sigma^2");
  val_sigma->excludes(val_eps);
  val_cmd->add_option("--gamma", config.gamma, "marginal relaxation (enables unbalanced mode)");
  val_cmd->add_option("--mass-alpha", config.mass_alpha, "mass of alpha");
  val_cmd->add_option("--mass-beta", config.mass_beta, "mass of beta");
  val_cmd->add_option("--seed", config.base_seed, "base seed")->required();
  val_cmd->add_option("--out", out_path, "CSV output path")->required();
  val_cmd->add_option("--tol", config.tol, "Sinkhorn tolerance");
  val_cmd->add_option("--max-iter", config.max_iter, "Sinkhorn iteration cap");

  auto* hist_cmd = app.add_subcommand("plan-hist", "Empirical 1D plan histogram");
  hist_cmd->add_option("problem", file)->required();
  hist_cmd->add_option("--n", n_samples, "samples per measure");
  hist_cmd->add_option("--bins", bins, "histogram bins per axis");
  hist_cmd->add_option("--seed", seed, "sampling seed")->required();
  hist_cmd->add_option("--out", out_path, "CSV output path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (bures_cmd->parsed()) return run_bures(file);
    if (ent_cmd->parsed()) return run_entropic(file, with_plan, with_duals, with_grad, ridge);
    if (uot_cmd->parsed()) return run_uot(file);
    if (bar_cmd->parsed()) {
      if (!*bar_sigma && !*bar_eps)
        throw InvalidInput("barycenter: one of --sigma/--epsilon is required");
      const double sig = *bar_sigma ? sigma_flag : std::sqrt(0.5 * epsilon_flag);
      return run_barycenter(file, sig, tol, max_iter, damping);
    }
    if (val_cmd->parsed()) {
      if (!*val_sigma && !*val_eps)
        throw InvalidInput("validate: one of --sigma/--epsilon is required");
      config.sigma = *val_sigma ? sigma_flag : std::sqrt(0.5 * epsilon_flag);
      const double eps_out = *val_eps ? epsilon_flag : 2.0 * sigma_flag * sigma_flag;
      return run_validate(config, eps_out, out_path);
    }
    if (hist_cmd->parsed()) return run_plan_hist(file, n_samples, bins, seed, out_path);
  } catch (const InvalidInput& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const gaussot::NotConverged& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return 4;
  } catch (const gaussot::Error& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
