#include "netnmf/newton.hpp"

#include <cmath>
#include <vector>

namespace netnmf::opt {

namespace {

// Solves (-H_FF) d = g_F, adding a ridge until the factorization is positive definite.
VectorXd newton_direction(const MatrixXd& negH, const VectorXd& g) {
  const Index n = g.size();
  double ridge = 0.0;
  const double scale = std::max(1e-300, negH.diagonal().cwiseAbs().maxCoeff());
  for (int attempt = 0; attempt < 30; ++attempt) {
    Eigen::LLT<MatrixXd> llt(negH + ridge * MatrixXd::Identity(n, n));
    if (llt.info() == Eigen::Success) {
      VectorXd d = llt.solve(g);
      if (d.allFinite()) return d;
    }
    ridge = ridge == 0.0 ? 1e-12 * scale : ridge * 10.0;
  }
  return g / scale;
}

}  // namespace

NewtonReport projected_newton_maximize(const OrthantProblem& problem, const VectorXd& x0,
                                       const NewtonOptions& options) {
  NewtonReport rep;
  rep.x = x0.cwiseMax(0.0);
  rep.value = problem.value(rep.x);
  if (!std::isfinite(rep.value)) throw InnerSolverFailure("projected Newton started outside the domain");
  const Index n = rep.x.size();
  VectorXd g(n);
  MatrixXd H(n, n);

  for (rep.iterations = 0; rep.iterations < options.max_iter; ++rep.iterations) {
    problem.derivatives(rep.x, g, H);
    if (!g.allFinite() || !H.allFinite()) throw InnerSolverFailure("non-finite derivatives");
    std::vector<Index> free;
    for (Index j = 0; j < n; ++j) {
      if (!(rep.x(j) <= options.binding_eps && g(j) <= 0.0)) free.push_back(j);
    }
    const auto nf = static_cast<Index>(free.size());
    double gnorm = 0.0;
    for (Index j : free) gnorm = std::max(gnorm, std::abs(g(j)) * std::max(1.0, rep.x(j)));
    if (nf == 0 || gnorm <= options.grad_tol * (1.0 + std::abs(rep.value))) {
      rep.stationary = true;
      break;
    }
    MatrixXd negH(nf, nf);
    VectorXd gF(nf);
    for (Index a = 0; a < nf; ++a) {
      gF(a) = g(free[static_cast<std::size_t>(a)]);
      for (Index b = 0; b < nf; ++b) negH(a, b) = -H(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
    }
    const VectorXd dF = newton_direction(negH, gF);
    VectorXd d = VectorXd::Zero(n);
    for (Index a = 0; a < nf; ++a) d(free[static_cast<std::size_t>(a)]) = dF(a);

    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      const VectorXd x_new = (rep.x + t * d).cwiseMax(0.0);
      const double v = problem.value(x_new);
      if (!std::isfinite(v)) continue;
      const double predicted = g.dot(x_new - rep.x);
      if (v >= rep.value + options.armijo * predicted && v > rep.value) {
        rep.x = x_new;
        rep.value = v;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      rep.stationary = true;
      break;
    }
  }
  return rep;
}

}  // namespace netnmf::opt
