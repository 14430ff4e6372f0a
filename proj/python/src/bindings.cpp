#include "manprox/diagnostics.hpp"
#include "manprox/matrix_io.hpp"
#include "manprox/problems.hpp"
#include "manprox/prox.hpp"
#include "manprox/solvers.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <random>

namespace py = pybind11;
using namespace manprox;

namespace {

py::dict trace_dict(const ConvergenceTrace& tr) {
  std::vector<double> objective;
  std::vector<double> v_norm;
  std::vector<double> alpha;
  std::vector<std::string> phase;
  std::vector<bool> used_newton;
  std::vector<bool> fallback;
  for (const auto& r : tr.records) {
    objective.push_back(r.objective);
    v_norm.push_back(r.v_norm);
    alpha.push_back(r.alpha);
    phase.emplace_back(phase_name(r.phase));
    used_newton.push_back(r.used_newton);
    fallback.push_back(r.fallback);
  }
  py::dict summary;
  summary["iter"] = tr.summary.iter;
  summary["iter_v"] = tr.summary.iter_v;
  summary["iter_u"] = tr.summary.iter_u;
  summary["f"] = tr.summary.f;
  summary["sparsity"] = tr.summary.sparsity;
  summary["v_norm"] = tr.summary.v_norm;
  const RateEstimate rate = estimate_rate(tr);
  py::dict d;
  d["algorithm"] = tr.algorithm;
  d["x"] = tr.x_final;
  d["converged"] = tr.converged;
  d["error"] = tr.error;
  d["objective"] = objective;
  d["v_norm"] = v_norm;
  d["alpha"] = alpha;
  d["phase"] = phase;
  d["used_newton"] = used_newton;
  d["fallback"] = fallback;
  d["summary"] = summary;
  d["rate"] = py::make_tuple(rate.slope, rate_class_name(rate.classification));
  d["audit_ok"] = audit_trace(tr).ok;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Riemannian proximal gradient and proximal Newton methods for sparse PCA";

  py::register_exception<Error>(m, "ManproxError");

  py::class_<Manifold>(m, "Manifold")
      .def_static("sphere", &Manifold::sphere, py::arg("n"))
      .def_static("stiefel", &Manifold::stiefel, py::arg("n"), py::arg("r"))
      .def_static("oblique", &Manifold::oblique, py::arg("n"), py::arg("p"))
      .def_property_readonly("ambient_dim", &Manifold::ambient_dim)
      .def_property_readonly("normal_dim", &Manifold::normal_dim)
      .def_property_readonly("name", &Manifold::name)
      .def("feasibility_residual", &Manifold::feasibility_residual)
      .def("proj_tangent", &Manifold::proj_tangent)
      .def("proj_normal", &Manifold::proj_normal)
      .def("normal_basis", &Manifold::normal_basis)
      .def("retract", &Manifold::retract)
      .def("weingarten", &Manifold::weingarten)
      .def(
          "random_point",
          [](const Manifold& mf, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return mf.random_point(rng);
          },
          py::arg("seed") = 0);

  m.def("soft_threshold", &soft_threshold, py::arg("z"), py::arg("tau"));
  m.def(
      "solve_tangent_prox",
      [](const Manifold& mf, const Vec& x, const Vec& egrad, double t, double mu) {
        const ProxSolution s = solve_tangent_prox(mf, x, egrad, t, mu);
        py::dict d;
        d["v"] = s.v;
        d["lambda"] = s.lambda;
        d["mask"] = s.mask;
        d["residual"] = s.residual;
        d["inner_iters"] = s.inner_iters;
        return d;
      },
      py::arg("manifold"), py::arg("x"), py::arg("egrad"), py::arg("t"), py::arg("mu"));

  m.def("gen_random", &gen_random, py::arg("m"), py::arg("n"), py::arg("seed"));
  m.def("gen_synthetic", &gen_synthetic, py::arg("m"), py::arg("n"), py::arg("seed"), py::arg("noise_sd") = 0.5);
  m.def("standardize_columns", &standardize_columns, py::arg("a"));
  m.def(
      "gen_handcrafted",
      [](std::uint64_t seed, double noise) {
        const HandcraftedInstance h = gen_handcrafted(seed, noise);
        return py::make_tuple(h.a, h.x0);
      },
      py::arg("seed"), py::arg("noise") = 0.1);
  m.def("read_matrix", &read_matrix, py::arg("path"));
  m.def("write_matrix", &write_matrix, py::arg("path"), py::arg("a"));

  m.def(
      "default_step", [](const Mat& a) { return default_step(SparsePcaObjective(a, 1)); }, py::arg("a"));
  m.def(
      "objective",
      [](const Mat& a, Index r, double mu, const Vec& x) { return make_sparse_pca(a, r, mu).objective(x); },
      py::arg("a"), py::arg("r"), py::arg("mu"), py::arg("x"));

  m.def(
      "solve",
      [](const std::string& algo, const Mat& a, Index r, double mu, std::optional<Vec> x0_in, std::optional<double> t,
         double epsilon, double tol, int max_iter, std::uint64_t seed) {
        const Problem p = make_sparse_pca(a, r, mu);
        Vec x0;
        if (x0_in) {
          x0 = std::move(*x0_in);
        } else {
          std::mt19937_64 rng(seed);
          x0 = p.manifold.random_point(rng);
        }
        SolverConfig cfg;
        cfg.t = t.value_or(default_step(p));
        cfg.epsilon = epsilon;
        cfg.tol_final = tol;
        cfg.max_iter = max_iter;
        ConvergenceTrace tr;
        {
          py::gil_scoped_release release;
          if (algo == "manpg") {
            tr = run_manpg(x0, cfg, p);
          } else if (algo == "rpn") {
            tr = run_rpn(x0, cfg, p);
          } else if (algo == "rpn-g") {
            tr = run_rpn_g(x0, cfg, p);
          } else if (algo == "rpn-n") {
            tr = run_rpn_naive(x0, cfg, p);
          } else {
            throw py::value_error("unknown algorithm '" + algo + "'");
          }
        }
        return trace_dict(tr);
      },
      py::arg("algo"), py::arg("a"), py::arg("r"), py::arg("mu"), py::arg("x0") = py::none(),
      py::arg("t") = py::none(), py::arg("epsilon") = 1e-4, py::arg("tol") = 1e-12, py::arg("max_iter") = 3000,
      py::arg("seed") = 0);

  m.def(
      "check_stationarity",
      [](const Mat& a, Index r, double mu, const Vec& x, std::optional<double> t) {
        const Problem p = make_sparse_pca(a, r, mu);
        return check_stationarity(x, p, t.value_or(default_step(p)));
      },
      py::arg("a"), py::arg("r"), py::arg("mu"), py::arg("x"), py::arg("t") = py::none());
}
