#include "netnmf/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace netnmf::opt {

namespace {

bool independent_of(const MatrixXd& A, const std::vector<Index>& rows, Index candidate) {
  if (rows.empty()) return A.row(candidate).norm() > 0.0;
  MatrixXd M(static_cast<Index>(rows.size()) + 1, A.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) M.row(static_cast<Index>(k)) = A.row(rows[k]);
  M.row(M.rows() - 1) = A.row(candidate);
  Eigen::ColPivHouseholderQR<MatrixXd> qr(M.transpose());
  qr.setThreshold(1e-10);
  return qr.rank() == M.rows();
}

}  // namespace

QpResult solve_inequality_qp(const MatrixXd& H, const VectorXd& g, const MatrixXd& A,
                             const VectorXd& b, const VectorXd& x0, int max_iter) {
  const Index n = H.rows();
  const Index nc = A.rows();
  QpResult res;
  res.x = x0;
  res.multipliers = VectorXd::Zero(nc);

  auto slack_tol = [&](Index i) {
    return 1e-12 * (1.0 + std::abs(b(i)) + A.row(i).norm() * res.x.norm());
  };
  std::vector<Index>& W = res.working_set;
  for (Index i = 0; i < nc; ++i) {
    if (A.row(i).dot(res.x) - b(i) <= slack_tol(i) && independent_of(A, W, i)) W.push_back(i);
  }

  for (res.iterations = 0; res.iterations < max_iter; ++res.iterations) {
    const Index w = static_cast<Index>(W.size());
    MatrixXd K = MatrixXd::Zero(n + w, n + w);
    VectorXd rhs = VectorXd::Zero(n + w);
    K.topLeftCorner(n, n) = H;
    for (Index k = 0; k < w; ++k) {
      K.block(0, n + k, n, 1) = -A.row(W[static_cast<std::size_t>(k)]).transpose();
      K.block(n + k, 0, 1, n) = A.row(W[static_cast<std::size_t>(k)]);
    }
    rhs.head(n) = -(H * res.x + g);
    const VectorXd sol = K.fullPivLu().solve(rhs);
    const VectorXd p = sol.head(n);
    const VectorXd lambda = sol.tail(w);

    if (p.lpNorm<Eigen::Infinity>() <= 1e-13 * (1.0 + res.x.lpNorm<Eigen::Infinity>())) {
      Index worst = -1;
      double most_negative = -1e-12;
      for (Index k = 0; k < w; ++k) {
        if (lambda(k) < most_negative) {
          most_negative = lambda(k);
          worst = k;
        }
      }
      if (worst < 0) {
        res.multipliers.setZero();
        for (Index k = 0; k < w; ++k) res.multipliers(W[static_cast<std::size_t>(k)]) = lambda(k);
        res.optimal = true;
        return res;
      }
      W.erase(W.begin() + worst);
      continue;
    }

    double step = 1.0;
    Index blocking = -1;
    for (Index i = 0; i < nc; ++i) {
      if (std::find(W.begin(), W.end(), i) != W.end()) continue;
      const double ap = A.row(i).dot(p);
      if (ap < -1e-14 * A.row(i).norm() * p.norm()) {
        const double s = std::max(0.0, (b(i) - A.row(i).dot(res.x)) / ap);
        if (s < step) {
          step = s;
          blocking = i;
        }
      }
    }
    res.x += step * p;
    if (blocking >= 0) W.push_back(blocking);
  }
  return res;
}

VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& f,
                                    const VectorXd& x, double step) {
  VectorXd g(x.size());
  VectorXd xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const double fp = f(xp);
    xp(i) = x(i) - h;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

MatrixXd finite_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& c,
                                    const VectorXd& x, double step) {
  VectorXd xp = x;
  MatrixXd J;
  for (Index i = 0; i < x.size(); ++i) {
    const double h = step * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + h;
    const VectorXd cp = c(xp);
    xp(i) = x(i) - h;
    const VectorXd cm = c(xp);
    xp(i) = x(i);
    if (i == 0) J.resize(cp.size(), x.size());
    J.col(i) = (cp - cm) / (2.0 * h);
  }
  return J;
}

SqpResult minimize_sqp(const NlpProblem& problem, const VectorXd& x0, const SqpOptions& options) {
  const Index n = x0.size();
  auto gradient = [&](const VectorXd& x) {
    return problem.gradient ? problem.gradient(x)
                            : finite_difference_gradient(problem.objective, x, options.fd_step);
  };
  auto feasible = [&](const VectorXd& c) { return c.size() == 0 || c.minCoeff() >= -options.feas_tol; };

  SqpResult res;
  res.x = x0;
  VectorXd c = problem.constraints(res.x);
  if (!feasible(c)) throw InvalidArgument("SQP start point violates the constraints");
  double f = problem.objective(res.x);
  VectorXd g = gradient(res.x);
  MatrixXd J = finite_difference_jacobian(problem.constraints, res.x, options.fd_step);
  MatrixXd H = problem.hessian ? *problem.hessian : MatrixXd::Identity(n, n);
  res.multipliers = VectorXd::Zero(c.size());

  for (res.iterations = 0; res.iterations < options.max_iter; ++res.iterations) {
    const VectorXd b = -c.cwiseMax(0.0);
    const QpResult qp = solve_inequality_qp(H, g, J, b, VectorXd::Zero(n));
    const VectorXd d = qp.x;
    res.multipliers = qp.multipliers;
    if (d.lpNorm<Eigen::Infinity>() <= options.step_tol * (1.0 + res.x.lpNorm<Eigen::Infinity>())) {
      res.converged = true;
      break;
    }

    const double slope = g.dot(d);
    double t = 1.0;
    bool accepted = false;
    VectorXd x_new;
    VectorXd c_new;
    double f_new = f;
    for (int halving = 0; halving < 60 && !accepted; ++halving, t *= 0.5) {
      x_new = res.x + t * d;
      c_new = problem.constraints(x_new);
      for (int corr = 0; corr < 3 && !feasible(c_new); ++corr) {
        // Pull violated constraints back with a minimum-norm correction.
        std::vector<Index> viol;
        for (Index i = 0; i < c_new.size(); ++i) {
          if (c_new(i) < 0.0) viol.push_back(i);
        }
        MatrixXd Jv(static_cast<Index>(viol.size()), n);
        VectorXd cv(static_cast<Index>(viol.size()));
        for (std::size_t k = 0; k < viol.size(); ++k) {
          Jv.row(static_cast<Index>(k)) = J.row(viol[k]);
          cv(static_cast<Index>(k)) = c_new(viol[k]);
        }
        const VectorXd dc = Jv.completeOrthogonalDecomposition().solve(-cv);
        x_new += dc;
        c_new = problem.constraints(x_new);
      }
      if (!feasible(c_new)) continue;
      f_new = problem.objective(x_new);
      if (f_new <= f + 1e-4 * t * slope || f_new < f) accepted = true;
    }
    if (!accepted) {
      // No feasible descent along the QP direction: stationary to working precision.
      res.converged = true;
      break;
    }

    const VectorXd s = x_new - res.x;
    const VectorXd g_new = gradient(x_new);
    const MatrixXd J_new = finite_difference_jacobian(problem.constraints, x_new, options.fd_step);
    if (!problem.hessian) {
      VectorXd y = (g_new - J_new.transpose() * res.multipliers) - (g - J.transpose() * res.multipliers);
      const VectorXd Hs = H * s;
      const double sHs = s.dot(Hs);
      const double sy = s.dot(y);
      if (sHs > 0.0) {
        if (sy < 0.2 * sHs) {
          const double theta = 0.8 * sHs / (sHs - sy);
          y = theta * y + (1.0 - theta) * Hs;
        }
        const double sy2 = s.dot(y);
        if (sy2 > 1e-300) H += y * y.transpose() / sy2 - Hs * Hs.transpose() / sHs;
      }
    }
    const bool tiny = std::abs(f_new - f) <= 1e-15 * (1.0 + std::abs(f)) &&
                      s.lpNorm<Eigen::Infinity>() <= 1e-10 * (1.0 + res.x.lpNorm<Eigen::Infinity>());
    res.x = x_new;
    c = c_new;
    f = f_new;
    g = g_new;
    J = J_new;
    if (tiny) {
      res.converged = true;
      break;
    }
  }
  res.value = f;
  for (Index i = 0; i < c.size(); ++i) {
    if (c(i) <= std::max(options.feas_tol, 1e-9)) res.active.push_back(i);
  }
  return res;
}

}  // namespace netnmf::opt
