#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gaussot/barycenter.hpp"
#include "gaussot/empirical.hpp"
#include "gaussot/entropic.hpp"
#include "gaussot/gaussian_ot.hpp"
#include "gaussot/linalg.hpp"
#include "gaussot/quadform.hpp"
#include "gaussot/rng.hpp"
#include "gaussot/types.hpp"
#include "gaussot/unbalanced.hpp"

namespace py = pybind11;
using namespace gaussot;

PYBIND11_MODULE(_gaussot, m) {
  m.doc() = "Closed-form entropic optimal transport between Gaussian measures";

  py::register_exception<InvalidInput>(m, "InvalidInputError", PyExc_ValueError);
  py::register_exception<NotPsd>(m, "NotPsdError", PyExc_ArithmeticError);
  py::register_exception<SingularMatrix>(m, "SingularMatrixError", PyExc_ArithmeticError);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefiniteError",
                                              PyExc_ArithmeticError);
  py::register_exception<NotIntegrable>(m, "NotIntegrableError", PyExc_ArithmeticError);
  py::register_exception<InfeasiblePrimal>(m, "InfeasiblePrimalError", PyExc_ArithmeticError);
  py::register_exception<InfeasibleDual>(m, "InfeasibleDualError", PyExc_ArithmeticError);
  py::register_exception<NumericalInconsistency>(m, "NumericalInconsistencyError",
                                                 PyExc_ArithmeticError);
  py::register_exception<Unsupported>(m, "UnsupportedError", PyExc_NotImplementedError);
  py::register_exception<NotConverged>(m, "NotConvergedError", PyExc_RuntimeError);

  py::class_<Gaussian>(m, "Gaussian")
      .def(py::init<Vector, Matrix, double>(), py::arg("mean"), py::arg("cov"),
           py::arg("mass") = 1.0)
      .def_readonly("mean", &Gaussian::mean)
      .def_readonly("cov", &Gaussian::cov)
      .def_readonly("mass", &Gaussian::mass)
      .def_property_readonly("dim", &Gaussian::dim);

  // linalg
  m.def("sqrtm_psd", &linalg::sqrtm_psd, py::arg("m"));
  m.def("invsqrtm_pd", &linalg::invsqrtm_pd, py::arg("m"), py::arg("ridge") = 0.0);
  m.def("logdet_pd", &linalg::logdet_pd, py::arg("m"));
  m.def("threshold_psd", &linalg::threshold_psd, py::arg("m"), py::arg("t"));
  m.def("mahalanobis_sq", &linalg::mahalanobis_sq, py::arg("a"), py::arg("b"), py::arg("c"));
  m.def(
      "newton_schulz_monge",
      [](const Matrix& A, const Matrix& B, double eps, double tol, int max_iter) {
        auto r = linalg::newton_schulz_monge(A, B, eps, tol, max_iter);
        return py::make_tuple(r.t_ab, r.t_ba, r.iterations);
      },
      py::arg("a"), py::arg("b"), py::arg("eps") = 1e-2, py::arg("tol") = 1e-12,
      py::arg("max_iter") = 100);

  // unregularized Gaussian OT
  m.def("bures", &gaussian_ot::bures, py::arg("a"), py::arg("b"));
  m.def("w2_gaussian", &gaussian_ot::w2_gaussian, py::arg("alpha"), py::arg("beta"));
  m.def("monge_map", &gaussian_ot::monge_map, py::arg("a"), py::arg("b"));
  m.def("bures_grad", &gaussian_ot::bures_grad, py::arg("a"), py::arg("b"));

  // balanced entropic closed forms
  py::class_<entropic::EntropicPlan>(m, "EntropicPlan")
      .def_readonly("mean", &entropic::EntropicPlan::mean)
      .def_readonly("cov", &entropic::EntropicPlan::cov)
      .def_readonly("sigma", &entropic::EntropicPlan::sigma);
  m.def("d_sigma", &entropic::d_sigma, py::arg("a"), py::arg("b"), py::arg("sigma"));
  m.def("bures_sigma_sq", &entropic::bures_sigma_sq, py::arg("a"), py::arg("b"),
        py::arg("sigma"));
  m.def("ot_sigma", &entropic::ot_sigma, py::arg("alpha"), py::arg("beta"), py::arg("sigma"));
  m.def("c_sigma", &entropic::c_sigma, py::arg("a"), py::arg("b"), py::arg("sigma"),
        py::arg("ridge") = 0.0);
  m.def("plan_closed_form", &entropic::plan_closed_form, py::arg("alpha"), py::arg("beta"),
        py::arg("sigma"), py::arg("ridge") = 0.0);
  m.def("dual_potentials", &entropic::dual_potentials, py::arg("a"), py::arg("b"),
        py::arg("sigma"));
  m.def(
      "sinkhorn_matrix_iterate",
      [](const Matrix& A, const Matrix& B, double sigma, double tol, int max_iter) {
        auto r = entropic::sinkhorn_matrix_iterate(A, B, sigma, tol, max_iter);
        return py::make_tuple(r.pair.F, r.pair.G, r.iterations);
      },
      py::arg("a"), py::arg("b"), py::arg("sigma"), py::arg("tol") = 1e-12,
      py::arg("max_iter") = 10000);
  m.def("grad_bures_sigma", &entropic::grad_bures_sigma, py::arg("a"), py::arg("b"),
        py::arg("sigma"));
  m.def("argmin_in_a", &entropic::argmin_in_a, py::arg("b"), py::arg("sigma"));
  m.def("sinkhorn_divergence", &entropic::sinkhorn_divergence, py::arg("alpha"), py::arg("beta"),
        py::arg("sigma"));
  m.def("dual_objective", &entropic::dual_objective, py::arg("f"), py::arg("g"), py::arg("a"),
        py::arg("b"), py::arg("sigma"));
  m.def("primal_k_objective", &entropic::primal_k_objective, py::arg("k"), py::arg("a"),
        py::arg("b"), py::arg("sigma"));
  m.def("plan_cost_and_kl", &entropic::plan_cost_and_kl, py::arg("plan"));

  // barycenters
  py::class_<barycenter::BarycenterProblem>(m, "BarycenterProblem")
      .def(py::init<std::vector<double>, std::vector<Gaussian>, double>(), py::arg("weights"),
           py::arg("components"), py::arg("sigma"));
  m.def(
      "debiased_barycenter",
      [](const barycenter::BarycenterProblem& p, double tol, int max_iter, double damping) {
        auto r = barycenter::debiased_barycenter(p, tol, max_iter, damping);
        return py::make_tuple(r.barycenter, r.residual, r.iterations);
      },
      py::arg("problem"), py::arg("tol") = 1e-10, py::arg("max_iter") = 1000,
      py::arg("damping") = 1.0);
  m.def("barycenter_residual", &barycenter::barycenter_residual, py::arg("b"),
        py::arg("problem"));

  // unbalanced transport
  py::class_<unbalanced::UnbalancedParams>(m, "UnbalancedParams")
      .def(py::init<double, double>(), py::arg("sigma"), py::arg("gamma"))
      .def_readonly("sigma", &unbalanced::UnbalancedParams::sigma)
      .def_readonly("gamma", &unbalanced::UnbalancedParams::gamma)
      .def_property_readonly("tau", &unbalanced::UnbalancedParams::tau)
      .def_property_readonly("lam", &unbalanced::UnbalancedParams::lambda);
  py::class_<unbalanced::UnbalancedPlan>(m, "UnbalancedPlan")
      .def_readonly("mass", &unbalanced::UnbalancedPlan::mass)
      .def_readonly("mean", &unbalanced::UnbalancedPlan::mean)
      .def_readonly("cov", &unbalanced::UnbalancedPlan::cov);
  py::class_<unbalanced::UnbalancedDuals>(m, "UnbalancedDuals")
      .def_readonly("U", &unbalanced::UnbalancedDuals::U)
      .def_readonly("V", &unbalanced::UnbalancedDuals::V)
      .def_readonly("u", &unbalanced::UnbalancedDuals::u)
      .def_readonly("v", &unbalanced::UnbalancedDuals::v)
      .def_readonly("log_mu_mv", &unbalanced::UnbalancedDuals::log_mu_mv);
  m.def("tilde_transform", &unbalanced::tilde_transform, py::arg("a"), py::arg("params"));
  m.def("unbalanced_c", &unbalanced::unbalanced_c, py::arg("a_tilde"), py::arg("b_tilde"),
        py::arg("params"));
  m.def("unbalanced_plan", &unbalanced::unbalanced_plan, py::arg("alpha"), py::arg("beta"),
        py::arg("params"));
  m.def("uot", &unbalanced::uot, py::arg("alpha"), py::arg("beta"), py::arg("params"));
  m.def("unbalanced_duals", &unbalanced::unbalanced_duals, py::arg("alpha"), py::arg("beta"),
        py::arg("params"));
  m.def("plan_from_duals", &unbalanced::plan_from_duals, py::arg("alpha"), py::arg("beta"),
        py::arg("duals"), py::arg("params"));

  // sample-based oracle
  py::class_<SeededRng>(m, "SeededRng")
      .def(py::init<std::uint64_t>(), py::arg("seed"))
      .def("uniform", &SeededRng::uniform)
      .def("normal", &SeededRng::normal);
  py::class_<empirical::DiscreteMeasure>(m, "DiscreteMeasure")
      .def(py::init([](Matrix points, Vector weights) {
             return empirical::DiscreteMeasure{std::move(points), std::move(weights)};
           }),
           py::arg("points"), py::arg("weights"))
      .def_readonly("points", &empirical::DiscreteMeasure::points)
      .def_readonly("weights", &empirical::DiscreteMeasure::weights);
  m.def("sample_gaussian", &empirical::sample_gaussian, py::arg("g"), py::arg("n"),
        py::arg("rng"));
  m.def("sample_wishart", &empirical::sample_wishart, py::arg("d"), py::arg("scale"),
        py::arg("dof"), py::arg("rng"));
  m.def(
      "sinkhorn_discrete",
      [](const empirical::DiscreteMeasure& X, const empirical::DiscreteMeasure& Y, double sigma,
         double tol, int max_iter) {
        auto r = empirical::sinkhorn_discrete(X, Y, sigma, tol, max_iter);
        return py::make_tuple(r.f, r.g, r.value, r.iterations);
      },
      py::arg("x"), py::arg("y"), py::arg("sigma"), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 10000);
  m.def(
      "sinkhorn_discrete_unbalanced",
      [](const empirical::DiscreteMeasure& X, const empirical::DiscreteMeasure& Y, double sigma,
         double gamma, double tol, int max_iter) {
        auto r = empirical::sinkhorn_discrete_unbalanced(X, Y, sigma, gamma, tol, max_iter);
        return py::make_tuple(r.f, r.g, r.value, r.mass, r.iterations);
      },
      py::arg("x"), py::arg("y"), py::arg("sigma"), py::arg("gamma"), py::arg("tol") = 1e-9,
      py::arg("max_iter") = 10000);
}
