#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <variant>

#include "robustkit/core/error.hpp"
#include "robustkit/core/oracle.hpp"
#include "robustkit/core/solvers.hpp"
#include "robustkit/experiment/config.hpp"
#include "robustkit/experiment/runner.hpp"
#include "robustkit/io/g2o.hpp"
#include "robustkit/problems/linear.hpp"
#include "robustkit/problems/registration.hpp"
#include "robustkit/problems/shape.hpp"
#include "robustkit/stats/stats.hpp"

namespace py = pybind11;
using namespace robustkit;

namespace {

py::object to_py(const Eigen::VectorXd& x) { return py::cast(x); }
py::object to_py(const RigidTransform& t) {
  py::dict d;
  d["rotation"] = t.rotation;
  d["translation"] = t.translation;
  return std::move(d);
}
py::object to_py(const WeakPerspectivePose& p) {
  py::dict d;
  d["scale"] = p.scale;
  d["rotation"] = p.rotation;
  d["translation"] = p.translation;
  return std::move(d);
}

template <class E>
py::dict result_dict(const RobustEstimate<E>& r) {
  py::dict d;
  d["estimate"] = to_py(r.estimate);
  d["inliers"] = r.inliers;
  d["weights"] = r.weights;
  d["converged"] = r.converged;
  d["iterations"] = r.iterations;
  py::list trace;
  for (const auto& t : r.trace) trace.append(py::make_tuple(t.iteration, t.control, t.inlier_count, t.inlier_sq_sum));
  d["trace"] = trace;
  return d;
}

Norm parse_norm(const std::string& s) {
  if (s == "l2") return Norm::kL2;
  if (s == "linf") return Norm::kLinf;
  throw Error(ErrorCode::kConfig, "norm must be 'l2' or 'linf'");
}

// Thresholds may be given as numbers or as callables.
BoundFn as_bound(const py::object& o) {
  if (PyCallable_Check(o.ptr())) {
    auto f = o.cast<std::function<double(std::size_t)>>();
    return [f](std::size_t n) {
      py::gil_scoped_acquire gil;
      return f(n);
    };
  }
  return constant_bound(o.cast<double>());
}

ThetaFn as_theta(const py::object& o) {
  if (PyCallable_Check(o.ptr())) {
    auto f = o.cast<std::function<double(std::size_t, std::size_t)>>();
    return [f](std::size_t a, std::size_t b) {
      py::gil_scoped_acquire gil;
      return f(a, b);
    };
  }
  return constant_theta(o.cast<double>());
}

template <class P>
void bind_solvers(py::module_& m) {
  m.def("greedy", [](const P& p, py::object bound, const std::string& norm) {
    return result_dict(solve_greedy(p, GreedyConfig{parse_norm(norm), as_bound(bound)}));
  }, py::arg("problem"), py::arg("bound"), py::arg("norm") = "l2");

  m.def("adapt", [](const P& p, py::object tau, py::object theta, const std::string& norm, int max_iterations,
                    int samples_to_converge, double thr_discount) {
    AdaptConfig c;
    c.tau = as_bound(tau);
    c.theta = as_theta(theta);
    c.norm = parse_norm(norm);
    c.max_iterations = max_iterations;
    c.samples_to_converge = samples_to_converge;
    c.thr_discount = thr_discount;
    return result_dict(solve_adapt(p, c));
  }, py::arg("problem"), py::arg("tau"), py::arg("theta"), py::arg("norm") = "l2", py::arg("max_iterations") = 1000,
     py::arg("samples_to_converge") = 3, py::arg("thr_discount") = 0.99);

  m.def("gnc", [](const P& p, double epsilon, int max_iterations, double mu_update_factor) {
    GncConfig c;
    c.epsilon = epsilon;
    c.max_iterations = max_iterations;
    c.mu_update_factor = mu_update_factor;
    return result_dict(solve_gnc_tls(p, c));
  }, py::arg("problem"), py::arg("epsilon"), py::arg("max_iterations") = 1000, py::arg("mu_update_factor") = 1.4);

  m.def("adapt_mint", [](const P& p, int max_iterations, int samples_to_converge, double thr_discount) {
    AdaptMintConfig c;
    c.max_iterations = max_iterations;
    c.samples_to_converge = samples_to_converge;
    c.thr_discount = thr_discount;
    return result_dict(solve_adapt_mint(p, c));
  }, py::arg("problem"), py::arg("max_iterations") = 1000, py::arg("samples_to_converge") = 5,
     py::arg("thr_discount") = 0.99);

  m.def("gnc_mint", [](const P& p, double noise_up_bnd, double noise_low_bnd, int max_iterations,
                       int samples_to_converge, double mu_update_factor) {
    GncMintConfig c;
    c.noise_up_bnd = noise_up_bnd;
    c.noise_low_bnd = noise_low_bnd;
    c.max_iterations = max_iterations;
    c.samples_to_converge = samples_to_converge;
    c.mu_update_factor = mu_update_factor;
    return result_dict(solve_gnc_mint(p, c));
  }, py::arg("problem"), py::arg("noise_up_bnd"), py::arg("noise_low_bnd"), py::arg("max_iterations") = 1000,
     py::arg("samples_to_converge") = 2, py::arg("mu_update_factor") = 1.96);
}

Formulation parse_formulation(const std::string& s) {
  if (s == "mc") return Formulation::kMC;
  if (s == "mts") return Formulation::kMTS;
  if (s == "tls") return Formulation::kTLS;
  throw Error(ErrorCode::kConfig, "formulation must be 'mc', 'mts' or 'tls'");
}

}  // namespace

PYBIND11_MODULE(_robustkit, m) {
  m.doc() = "Outlier-robust estimation: GNC, ADAPT and minimally tuned variants";

  static py::exception<Error> error(m, "Error", PyExc_RuntimeError);
  static py::exception<ParseError> parse_error(m, "ParseError", error.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ParseError& e) {
      py::setattr(parse_error, "line", py::int_(e.line()));
      PyErr_SetString(parse_error.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(error.ptr(), e.what());
    }
  });

  py::class_<LinearProblem>(m, "LinearProblem")
      .def(py::init<Eigen::MatrixXd, Eigen::VectorXd>(), py::arg("design"), py::arg("observations"))
      .def("__len__", &LinearProblem::size)
      .def("residuals", &LinearProblem::residuals)
      .def("weighted_solve", [](const LinearProblem& p, const std::vector<double>& w) { return p.weighted_solve(w); });

  py::class_<RegistrationProblem>(m, "RegistrationProblem")
      .def(py::init<Eigen::Matrix3Xd, Eigen::Matrix3Xd>(), py::arg("source"), py::arg("target"))
      .def("__len__", &RegistrationProblem::size)
      .def("weighted_solve", [](const RegistrationProblem& p, const std::vector<double>& w) {
        return to_py(p.weighted_solve(w));
      });

  py::class_<ShapeProblem>(m, "ShapeProblem")
      .def(py::init([](Eigen::Matrix3Xd model, Eigen::Matrix2Xd image) {
             return ShapeProblem(std::move(model), std::move(image));
           }),
           py::arg("model"), py::arg("image"))
      .def("__len__", &ShapeProblem::size)
      .def("weighted_solve", [](const ShapeProblem& p, const std::vector<double>& w) {
        return to_py(p.weighted_solve(w));
      });

  bind_solvers<LinearProblem>(m);
  bind_solvers<RegistrationProblem>(m);
  bind_solvers<ShapeProblem>(m);

  m.def("oracle", [](const LinearProblem& p, const std::string& formulation, double parameter) {
    const auto s = oracle_enumerate(p, parse_formulation(formulation), parameter);
    py::dict d;
    d["outliers"] = s.outliers;
    d["inliers"] = s.inliers;
    d["estimate"] = s.estimate ? to_py(*s.estimate) : py::none();
    d["inlier_norm"] = s.inlier_norm;
    d["objective"] = s.objective;
    return d;
  }, py::arg("problem"), py::arg("formulation"), py::arg("parameter"));

  m.def("gnc_weight_update", [](const std::vector<double>& r, double mu, double eps) { return gnc_weight_update(r, mu, eps); },
        py::arg("residuals"), py::arg("mu"), py::arg("epsilon"));
  m.def("gnc_mu_init", [](const std::vector<double>& r, double eps) { return gnc_mu_init(r, eps); },
        py::arg("residuals"), py::arg("epsilon"));
  m.def("suboptimality_bound", &suboptimality_bound, py::arg("r_empty"), py::arg("r_outliers"));

  m.def("chi2_inv", &chi2_inv, py::arg("p"), py::arg("dof"));
  m.def("gamma_cdf", &gamma_cdf, py::arg("x"), py::arg("shape"), py::arg("scale"));
  m.def("fit_chi", [](const std::vector<double>& r, int dof) {
    const auto f = fit_chi(r, dof);
    return py::make_tuple(f.statistic, f.estimated_sigma2);
  }, py::arg("residuals"), py::arg("dof"));
  m.def("clusters_separation", [](const std::vector<double>& v) { return clusters_separation(v); },
        py::arg("values"));

  m.def("g2o_roundtrip", [](const std::string& text) { return write_g2o(parse_g2o(text)); }, py::arg("text"));
  m.def("cycle_bounds", [](const std::string& text) {
    const auto g = parse_g2o(text);
    return std::visit([](const auto& graph) { return cycle_bounds(graph).bounds; }, g);
  }, py::arg("g2o_text"));

  m.def("run_experiment", [](const std::string& config_json, int threads) {
    const auto cfg = parse_experiment_config(nlohmann::json::parse(config_json));
    std::vector<TrialRecord> rows;
    {
      py::gil_scoped_release release;
      rows = run_experiment(cfg, threads);
    }
    return py::make_tuple(to_csv(rows), summarize(rows).dump());
  }, py::arg("config_json"), py::arg("threads") = 1);
}
