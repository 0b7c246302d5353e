#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "netnmf/newton.hpp"
#include "netnmf/qp.hpp"
#include "oracles.hpp"

using namespace netnmf;
using namespace netnmf::opt;

TEST_CASE("box-constrained QP matches coordinate clipping") {
  // min 0.5 |x - c|^2 s.t. 0 <= x <= 1 has the clipped solution.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-2.0, 3.0);
  for (int rep = 0; rep < 25; ++rep) {
    const Index n = 4;
    VectorXd c(n);
    for (Index i = 0; i < n; ++i) c(i) = u(rng);
    MatrixXd A(2 * n, n);
    A << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
    VectorXd b(2 * n);
    b << VectorXd::Zero(n), -VectorXd::Ones(n);
    const QpResult r = solve_inequality_qp(MatrixXd::Identity(n, n), -c, A, b, VectorXd::Constant(n, 0.5));
    CHECK(r.optimal);
    const VectorXd expect = c.cwiseMax(0.0).cwiseMin(1.0);
    CHECK((r.x - expect).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(r.multipliers.minCoeff() >= -1e-12);
  }
}

TEST_CASE("QP with a redundant degenerate vertex") {
  // min 0.5 |x - (-1,-1)|^2 s.t. x1 >= 0, x2 >= 0, x1 + x2 >= 0
  MatrixXd A(3, 2);
  A << 1, 0, 0, 1, 1, 1;
  const QpResult r = solve_inequality_qp(MatrixXd::Identity(2, 2), VectorXd::Ones(2), A, VectorXd::Zero(3),
                                         VectorXd::Zero(2));
  CHECK(r.optimal);
  CHECK(r.x.norm() < 1e-12);
}

TEST_CASE("SQP on a disc") {
  // min (x - 2)^2 + (y - 2)^2 on the unit disc: optimum (1,1)/sqrt 2
  NlpProblem p;
  p.objective = [](const VectorXd& x) { return (x(0) - 2) * (x(0) - 2) + (x(1) - 2) * (x(1) - 2); };
  p.constraints = [](const VectorXd& x) {
    VectorXd c(1);
    c(0) = 1.0 - x.squaredNorm();
    return c;
  };
  const SqpResult r = minimize_sqp(p, VectorXd::Zero(2));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(r.x(1) == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-6));
  CHECK(r.active.size() == 1);
  CHECK(1.0 - r.x.squaredNorm() >= -1e-10);
}

TEST_CASE("SQP with an interior optimum leaves constraints inactive") {
  NlpProblem p;
  p.objective = [](const VectorXd& x) { return (x(0) - 0.2) * (x(0) - 0.2) + 3 * (x(1) + 0.1) * (x(1) + 0.1); };
  p.gradient = [](const VectorXd& x) {
    VectorXd g(2);
    g << 2 * (x(0) - 0.2), 6 * (x(1) + 0.1);
    return g;
  };
  p.constraints = [](const VectorXd& x) {
    VectorXd c(2);
    c << 1 - x(0), 1 + x(1);
    return c;
  };
  const SqpResult r = minimize_sqp(p, VectorXd::Zero(2));
  CHECK(r.converged);
  CHECK(r.x(0) == doctest::Approx(0.2).epsilon(1e-7));
  CHECK(r.x(1) == doctest::Approx(-0.1).epsilon(1e-7));
  CHECK(r.active.empty());
}

TEST_CASE("finite differences of a quadratic") {
  MatrixXd M(3, 3);
  M << 2, 1, 0, 1, 3, 1, 0, 1, 4;
  auto f = [&](const VectorXd& x) { return 0.5 * x.dot(M * x) + x.sum(); };
  VectorXd x(3);
  x << 0.3, -1.2, 2.0;
  const VectorXd g = finite_difference_gradient(f, x, 1e-5);
  CHECK((g - (M * x + VectorXd::Ones(3))).cwiseAbs().maxCoeff() < 1e-8);
  auto c = [&](const VectorXd& y) -> VectorXd { return M * y; };
  CHECK((finite_difference_jacobian(c, x, 1e-5) - M).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("projected Newton on a Poisson-type objective") {
  // f(x) = sum_i u_i log(x_i) - v_i x_i with u_0 = 0: optimum x_0 = 0, x_i = u_i / v_i.
  VectorXd u(3), v(3);
  u << 0.0, 2.0, 5.0;
  v << 1.0, 4.0, 2.0;
  OrthantProblem p;
  p.value = [&](const VectorXd& x) {
    double s = 0.0;
    for (Index i = 0; i < 3; ++i) {
      if (x(i) < 0) return -std::numeric_limits<double>::infinity();
      if (u(i) > 0) {
        if (x(i) == 0) return -std::numeric_limits<double>::infinity();
        s += u(i) * std::log(x(i));
      }
      s -= v(i) * x(i);
    }
    return s;
  };
  p.derivatives = [&](const VectorXd& x, VectorXd& g, MatrixXd& H) {
    g.resize(3);
    H = MatrixXd::Zero(3, 3);
    for (Index i = 0; i < 3; ++i) {
      g(i) = (u(i) > 0 ? u(i) / x(i) : 0.0) - v(i);
      H(i, i) = u(i) > 0 ? -u(i) / (x(i) * x(i)) : 0.0;
    }
  };
  NewtonOptions o;
  o.max_iter = 100;
  const VectorXd x0 = VectorXd::Ones(3);
  const NewtonReport r = projected_newton_maximize(p, x0, o);
  CHECK(r.x(0) == 0.0);
  CHECK(r.x(1) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(r.x(2) == doctest::Approx(2.5).epsilon(1e-9));
  CHECK(r.value >= p.value(x0));
}

TEST_CASE("projected Newton never decreases the objective") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> un(0.0, 3.0);
  for (int rep = 0; rep < 20; ++rep) {
    MatrixXd Z = MatrixXd::Zero(3, 6);
    for (Index i = 0; i < Z.size(); ++i) Z.data()[i] = un(rng);
    VectorXd y(6);
    for (Index t = 0; t < 6; ++t) y(t) = std::floor(un(rng));
    OrthantProblem p;
    p.value = [&](const VectorXd& x) {
      double s = 0.0;
      for (Index t = 0; t < 6; ++t) {
        const double th = 0.1 + Z.col(t).dot(x);
        s += oracle::poisson_logpmf(y(t), th);
      }
      return x.minCoeff() < 0 ? -std::numeric_limits<double>::infinity() : s;
    };
    p.derivatives = [&](const VectorXd& x, VectorXd& g, MatrixXd& H) {
      g = VectorXd::Zero(3);
      H = MatrixXd::Zero(3, 3);
      for (Index t = 0; t < 6; ++t) {
        const double th = 0.1 + Z.col(t).dot(x);
        g += (y(t) / th - 1.0) * Z.col(t);
        H -= y(t) / (th * th) * Z.col(t) * Z.col(t).transpose();
      }
    };
    VectorXd x(3);
    for (Index i = 0; i < 3; ++i) x(i) = un(rng);
    double prev = p.value(x);
    for (int k = 0; k < 10; ++k) {
      const NewtonReport r = projected_newton_maximize(p, x);
      CHECK(r.value >= prev - 1e-12);
      CHECK(r.x.minCoeff() >= 0.0);
      prev = r.value;
      x = r.x;
    }
  }
}
