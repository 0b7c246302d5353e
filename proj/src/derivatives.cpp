#include "netnmf/derivatives.hpp"

namespace netnmf {

AlphaDerivatives alpha_derivatives(const Likelihood& lik, const NormalizedNmf& p, bool with_hessian,
                                   bool with_period_scores) {
  const AlphaLayout lay = AlphaLayout::of(p);
  const Index K = lay.K;
  const Index m = lay.m;
  const Index dim = lay.dim();
  if (lik.n() != lay.n || lik.m() != m) throw InvalidArgument("parameter and likelihood dimensions differ");

  const MatrixXd A = compose_alpha(p);
  AlphaDerivatives out;
  out.score = VectorXd::Zero(dim);
  if (with_hessian) out.hessian = MatrixXd::Zero(dim, dim);
  if (with_period_scores) out.period_scores = MatrixXd::Zero(dim, lik.periods());
  MatrixXd M = MatrixXd::Zero(lay.n, m);

  VectorXd d1, d2;
  for (Index i = 0; i < lay.n; ++i) {
    const auto& r = lik.row(i);
    const Index N = r.u.size();
    if (N == 0) continue;
    const VectorXd theta = lik.theta_row(i, A.row(i).transpose());
    for (Index k = 0; k < N; ++k) {
      if (theta(k) < 0.0 || (theta(k) == 0.0 && r.u(k) > 0.0)) {
        throw DomainError("alpha derivatives undefined at a zero intensity");
      }
    }
    Likelihood::term_derivatives(theta, r.u, r.v, d1, d2);
    const MatrixXd S = p.gamma_star.transpose() * r.Z;  // K x N

    MatrixXd grad = MatrixXd::Zero(dim, N);
    for (Index k = 0; k < K; ++k) {
      const double bki = p.beta_star(i, k);
      grad.row(lay.a()) += p.pi(k) * bki * S.row(k);
      grad.row(lay.pi(k)) = p.a * bki * S.row(k);
      grad.row(lay.beta(k, i)) = p.a * p.pi(k) * S.row(k);
      grad.middleRows(lay.gamma(k, 0), m) = (p.a * p.pi(k) * bki) * r.Z;
    }
    out.score.noalias() += grad * d1;
    if (with_hessian) out.hessian.noalias() += grad * d2.asDiagonal() * grad.transpose();
    if (with_period_scores) {
      for (Index k = 0; k < N; ++k) out.period_scores.col(r.period[static_cast<std::size_t>(k)]) += d1(k) * grad.col(k);
    }
    M.row(i) = (r.Z * d1).transpose();
  }

  if (with_hessian) {
    auto add = [&](Index x, Index y, double v) {
      out.hessian(x, y) += v;
      out.hessian(y, x) += v;
    };
    for (Index k = 0; k < K; ++k) {
      const VectorXd Mg = M * p.gamma_star.col(k);
      const VectorXd Mb = M.transpose() * p.beta_star.col(k);
      add(lay.a(), lay.pi(k), p.beta_star.col(k).dot(Mg));
      for (Index i = 0; i < lay.n; ++i) {
        add(lay.a(), lay.beta(k, i), p.pi(k) * Mg(i));
        add(lay.pi(k), lay.beta(k, i), p.a * Mg(i));
        for (Index j = 0; j < m; ++j) add(lay.beta(k, i), lay.gamma(k, j), p.a * p.pi(k) * M(i, j));
      }
      for (Index j = 0; j < m; ++j) {
        add(lay.a(), lay.gamma(k, j), p.pi(k) * Mb(j));
        add(lay.pi(k), lay.gamma(k, j), p.a * Mb(j));
      }
    }
  }
  return out;
}

double alpha_loglik(const Likelihood& lik, const NormalizedNmf& p) { return lik.value(compose_alpha(p)); }

MatrixXd compose_jacobian(const NormalizedNmf& p) {
  const AlphaLayout lay = AlphaLayout::of(p);
  const Index n = lay.n;
  const Index m = lay.m;
  MatrixXd G = MatrixXd::Zero(n * m, lay.dim());
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) {
      const Index row = i + n * j;
      for (Index k = 0; k < lay.K; ++k) {
        const double b = p.beta_star(i, k);
        const double g = p.gamma_star(j, k);
        G(row, lay.a()) += p.pi(k) * b * g;
        G(row, lay.pi(k)) = p.a * b * g;
        G(row, lay.beta(k, i)) = p.a * p.pi(k) * g;
        G(row, lay.gamma(k, j)) = p.a * p.pi(k) * b;
      }
    }
  }
  return G;
}

}  // namespace netnmf
