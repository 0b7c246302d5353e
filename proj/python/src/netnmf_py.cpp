#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>

#include "netnmf/estim.hpp"
#include "netnmf/identset.hpp"
#include "netnmf/infer.hpp"
#include "netnmf/montecarlo.hpp"

namespace py = pybind11;
using namespace netnmf;

namespace {

ModelSpec make_spec(const std::string& family, Index n, Index m, const std::optional<VectorXd>& intercept,
                    int individuals) {
  ModelSpec spec;
  spec.family = family_from_string(family);
  spec.n = n;
  spec.m = m;
  spec.individuals = individuals;
  if (intercept) spec.intercept = *intercept;
  spec.validate();
  return spec;
}

Trajectory make_traj(const ModelSpec& spec, const py::object& data) {
  Trajectory traj;
  if (spec.family == Family::StaticPoissonMatrix) {
    traj.frames = data.cast<std::vector<MatrixXd>>();
  } else {
    traj.y = data.cast<MatrixXd>();
  }
  validate_trajectory(spec, traj);
  return traj;
}

Index cols_of(const std::string& family, const py::object& data, Index n_hint) {
  if (family_from_string(family) != Family::StaticPoissonMatrix) return n_hint;
  const auto frames = data.cast<std::vector<MatrixXd>>();
  if (frames.empty()) throw InvalidArgument("no frames");
  return frames.front().cols();
}

Index rows_of(const std::string& family, const py::object& data) {
  if (family_from_string(family) == Family::StaticPoissonMatrix) {
    const auto frames = data.cast<std::vector<MatrixXd>>();
    if (frames.empty()) throw InvalidArgument("no frames");
    return frames.front().rows();
  }
  return data.cast<MatrixXd>().cols();
}

}  // namespace

PYBIND11_MODULE(_netnmf, m) {
  m.doc() = "Probabilistic nonnegative matrix factorization for dynamic network models";
  m.attr("__version__") = NETNMF_VERSION;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_RuntimeError);

  py::class_<Nmf>(m, "Nmf")
      .def(py::init([](MatrixXd B, MatrixXd C) {
             Nmf f{std::move(B), std::move(C)};
             f.validate();
             return f;
           }),
           py::arg("B"), py::arg("C"))
      .def_readwrite("B", &Nmf::B)
      .def_readwrite("C", &Nmf::C)
      .def_property_readonly("rank", &Nmf::rank);

  py::class_<NormalizedNmf>(m, "NormalizedNmf")
      .def(py::init([](double a, VectorXd pi, MatrixXd beta_star, MatrixXd gamma_star) {
             NormalizedNmf p{a, std::move(pi), std::move(beta_star), std::move(gamma_star)};
             p.validate(1e-8);
             return p;
           }),
           py::arg("a"), py::arg("pi"), py::arg("beta_star"), py::arg("gamma_star"))
      .def_readwrite("a", &NormalizedNmf::a)
      .def_readwrite("pi", &NormalizedNmf::pi)
      .def_readwrite("beta_star", &NormalizedNmf::beta_star)
      .def_readwrite("gamma_star", &NormalizedNmf::gamma_star)
      .def_property_readonly("rank", &NormalizedNmf::rank)
      .def("compose", [](const NormalizedNmf& p) { return compose(p).values(); });

  py::class_<K2Bounds>(m, "K2Bounds")
      .def_readonly("q12_lo", &K2Bounds::q12_lo)
      .def_readonly("q12_hi", &K2Bounds::q12_hi)
      .def_readonly("q21_lo", &K2Bounds::q21_lo)
      .def_readonly("q21_hi", &K2Bounds::q21_hi)
      .def("contains", &K2Bounds::contains, py::arg("q12"), py::arg("q21"), py::arg("slack") = 0.0)
      .def("collapsed", &K2Bounds::collapsed);

  m.def("compose", [](const Nmf& f) { return compose(f).values(); }, py::arg("nmf"));
  m.def("normalize", &normalize, py::arg("nmf"));
  m.def("denormalize", &denormalize, py::arg("p"));
  m.def("k2_bounds", &k2_bounds, py::arg("seed"), py::arg("zero_tol") = 1e-12);
  m.def("essentially_unique_k2", &essentially_unique_k2, py::arg("seed"), py::arg("zero_tol") = 1e-12);
  m.def(
      "apply_q", [](const Nmf& seed, const MatrixXd& Q) { return apply_q(seed, QTransform::from_matrix(Q)); },
      py::arg("seed"), py::arg("Q"), "B Q and C (Q')^{-1}; Q must have a unit diagonal");
  m.def(
      "criterion", [](const std::string& kind, const NormalizedNmf& p) { return criterion_eval(criterion_from_string(kind), p); },
      py::arg("kind"), py::arg("p"));
  m.def("spectral_radius", &spectral_radius, py::arg("A"));

  m.def(
      "simulate",
      [](const MatrixXd& A, Index T, const std::string& family, std::optional<VectorXd> intercept, Index burn_in,
         std::uint64_t seed, int individuals) -> py::object {
        const ModelSpec spec = make_spec(family, A.rows(), A.cols(), intercept, individuals);
        const Trajectory traj = simulate(spec, A, T, burn_in, seed);
        if (spec.family == Family::StaticPoissonMatrix) return py::cast(traj.frames);
        return py::cast(traj.y);
      },
      py::arg("A"), py::arg("T"), py::arg("family") = "poisson", py::arg("intercept") = py::none(),
      py::arg("burn_in") = 200, py::arg("seed") = 1, py::arg("individuals") = 0,
      "Simulated path: a T x n array, or a list of n x m frames for the static family");

  m.def(
      "loglik",
      [](const MatrixXd& A, const py::object& data, const std::string& family, std::optional<VectorXd> intercept,
         int individuals) {
        const ModelSpec spec = make_spec(family, A.rows(), A.cols(), intercept, individuals);
        return loglik(spec, A, make_traj(spec, data));
      },
      py::arg("A"), py::arg("data"), py::arg("family") = "poisson", py::arg("intercept") = py::none(),
      py::arg("individuals") = 0);

  py::class_<FitResult>(m, "FitResult")
      .def_readonly("method", &FitResult::method)
      .def_readonly("alpha_hat", &FitResult::alpha_hat)
      .def_readonly("loglik", &FitResult::loglik)
      .def_readonly("loglik_path", &FitResult::loglik_path)
      .def_readonly("criterion_path", &FitResult::criterion_path)
      .def_readonly("step_norms", &FitResult::step_norms)
      .def_readonly("converged", &FitResult::converged)
      .def_readonly("boundary_optimum", &FitResult::boundary_optimum)
      .def_readonly("iterations", &FitResult::iterations)
      .def_property_readonly("A_hat", [](const FitResult& r) { return compose_alpha(r.alpha_hat); });

  m.def(
      "fit",
      [](const py::object& data, Index K, const std::string& estimator, const std::string& family,
         std::optional<VectorXd> intercept, const std::string& criterion, std::uint64_t seed, int max_iter) {
        const Index n = rows_of(family, data);
        const ModelSpec spec = make_spec(family, n, cols_of(family, data, n), intercept, 0);
        const Likelihood lik = Likelihood::build(spec, make_traj(spec, data));
        FitConfig cfg;
        cfg.K = K;
        cfg.seed = seed;
        cfg.max_outer_iters = max_iter;
        cfg.iml_warmup = std::min(cfg.iml_warmup, max_iter);
        cfg.criterion.kind = criterion_from_string(criterion);
        const Estimator est = estimator == "auto" ? (K == 1 ? Estimator::ML1 : Estimator::IML)
                                                  : estimator_from_string(estimator);
        py::gil_scoped_release release;
        return netnmf::fit(lik, est, cfg);
      },
      py::arg("data"), py::arg("K") = 1, py::arg("estimator") = "auto", py::arg("family") = "poisson",
      py::arg("intercept") = py::none(), py::arg("criterion") = "entropy", py::arg("seed") = 1,
      py::arg("max_iter") = 2000);

  py::class_<AsymptoticVariance>(m, "AsymptoticResult")
      .def_readonly("V_alpha", &AsymptoticVariance::V_alpha)
      .def_readonly("V_alpha_equality", &AsymptoticVariance::V_alpha_equality)
      .def_readonly("V_A", &AsymptoticVariance::V_A)
      .def_readonly("se_alpha", &AsymptoticVariance::se_alpha)
      .def_readonly("se_A", &AsymptoticVariance::se_A)
      .def_readonly("periods", &AsymptoticVariance::periods)
      .def_readonly("route_discrepancy", &AsymptoticVariance::route_discrepancy);

  m.def(
      "inference",
      [](const py::object& data, const NormalizedNmf& alpha_hat, const std::string& family,
         std::optional<VectorXd> intercept, const std::string& criterion, const std::string& boundary) {
        const Index n = rows_of(family, data);
        const ModelSpec spec = make_spec(family, n, cols_of(family, data, n), intercept, 0);
        const Likelihood lik = Likelihood::build(spec, make_traj(spec, data));
        InfoOptions io;
        io.criterion.kind = criterion_from_string(criterion);
        if (boundary == "active") {
          io.boundary = BoundaryPolicy::ActiveConstraints;
        } else if (boundary != "refuse") {
          throw InvalidArgument("boundary must be refuse or active");
        }
        return variance_of_A(alpha_hat, bordered_variance(info_matrices(lik, alpha_hat, io)));
      },
      py::arg("data"), py::arg("alpha_hat"), py::arg("family") = "poisson", py::arg("intercept") = py::none(),
      py::arg("criterion") = "entropy", py::arg("boundary") = "active");
}
