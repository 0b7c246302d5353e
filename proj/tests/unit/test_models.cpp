#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "netnmf/likelihood.hpp"
#include "netnmf/models.hpp"
#include "netnmf/trajectory_io.hpp"
#include "oracles.hpp"

using namespace netnmf;

namespace {

MatrixXd test_matrix() {
  MatrixXd A(3, 3);
  A << 0.2, 0.1, 0.05, 0.1, 0.25, 0.1, 0.05, 0.1, 0.3;
  return A;
}

ModelSpec ar_spec(Family f, double c) {
  ModelSpec s;
  s.family = f;
  s.n = 3;
  s.m = 3;
  s.intercept = VectorXd::Constant(3, c);
  return s;
}

}  // namespace

TEST_CASE("family names") {
  CHECK(family_from_string("poisson") == Family::PoissonAR);
  CHECK(family_from_string("Exponential") == Family::ExponentialAR);
  CHECK(family_from_string("static") == Family::StaticPoissonMatrix);
  CHECK(family_from_string("multinomial") == Family::MultinomialPanel);
  CHECK(to_string(Family::ExponentialAR) == "exponential");
  CHECK_THROWS_AS(family_from_string("gamma"), InvalidArgument);
}

TEST_CASE("densities, scores and Hessians match closed forms") {
  VectorXd theta(3), y(3);
  theta << 0.5, 2.0, 1.5;
  y << 0, 3, 1;
  double expect = 0.0;
  for (Index i = 0; i < 3; ++i) expect += oracle::poisson_logpmf(y(i), theta(i));
  CHECK(log_density(Family::PoissonAR, theta, y) == doctest::Approx(expect).epsilon(1e-14));
  const ModelSpec ps = ar_spec(Family::PoissonAR, 1.0);
  const VectorXd s = score_theta(ps, theta, y);
  const VectorXd h = hessian_theta(ps, theta, y);
  for (Index i = 0; i < 3; ++i) {
    CHECK(s(i) == doctest::Approx(y(i) / theta(i) - 1.0));
    CHECK(h(i) == doctest::Approx(-y(i) / (theta(i) * theta(i))));
    auto f = [&](const VectorXd& t) { return log_density(Family::PoissonAR, t, y); };
    CHECK(s(i) == doctest::Approx(oracle::fd_gradient(f, theta, 1e-6)(i)).epsilon(1e-7));
  }
  const ModelSpec es = ar_spec(Family::ExponentialAR, 1.0);
  VectorXd yx(3);
  yx << 0.2, 1.7, 0.4;
  const VectorXd se = score_theta(es, theta, yx);
  for (Index i = 0; i < 3; ++i) CHECK(se(i) == doctest::Approx(1.0 / theta(i) - yx(i)));
  CHECK(log_density(Family::ExponentialAR, theta, yx) ==
        doctest::Approx((theta.array().log() - theta.array() * yx.array()).sum()));

  VectorXd zero = theta;
  zero(1) = 0.0;
  CHECK_THROWS_AS(log_density(Family::PoissonAR, zero, y), DomainError);
  CHECK_THROWS_AS(score_theta(es, zero, yx), DomainError);
}

TEST_CASE("log-likelihood matches explicit loops") {
  const MatrixXd A = test_matrix();
  for (Family f : {Family::PoissonAR, Family::ExponentialAR}) {
    const ModelSpec spec = ar_spec(f, 0.7);
    const Trajectory traj = simulate(spec, A, 300, 50, 9);
    const double expect = oracle::ar_loglik(f == Family::PoissonAR, A, spec.intercept, traj.y);
    CHECK(loglik(spec, A, traj) == doctest::Approx(expect).epsilon(1e-12));
    const Likelihood lik = Likelihood::build(spec, traj);
    CHECK(lik.value(A) == doctest::Approx(expect).epsilon(1e-12));
    CHECK(lik.periods() == 299);
  }
  ModelSpec st;
  st.family = Family::StaticPoissonMatrix;
  st.n = 3;
  st.m = 3;
  const Trajectory frames = simulate(st, 4.0 * test_matrix(), 40, 0, 2);
  CHECK(frames.frames.size() == 40);
  CHECK(loglik(st, 4.0 * test_matrix(), frames) ==
        doctest::Approx(oracle::static_loglik(4.0 * test_matrix(), frames.frames)).epsilon(1e-12));
}

TEST_CASE("likelihood gradient matches finite differences") {
  const MatrixXd A = test_matrix();
  for (Family f : {Family::PoissonAR, Family::ExponentialAR}) {
    const ModelSpec spec = ar_spec(f, 0.7);
    const Likelihood lik = Likelihood::build(spec, simulate(spec, A, 200, 20, 4));
    const MatrixXd G = lik.gradient(A);
    VectorXd x = Eigen::Map<const VectorXd>(A.data(), A.size());
    auto fx = [&](const VectorXd& v) { return lik.value(Eigen::Map<const MatrixXd>(v.data(), 3, 3)); };
    const VectorXd fd = oracle::fd_gradient(fx, x, 1e-6);
    const VectorXd g = Eigen::Map<const VectorXd>(G.data(), G.size());
    CHECK((g - fd).cwiseAbs().maxCoeff() < 1e-5 * std::max(1.0, g.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("multinomial transition agrees with brute-force enumeration") {
  MatrixXd P(3, 3);
  P << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.0, 0.4, 0.6;
  VectorXd prev(3), next(3);
  prev << 3, 2, 2;
  double total = 0.0;
  for (int a = 0; a <= 7; ++a) {
    for (int b = 0; a + b <= 7; ++b) {
      next << a, b, 7 - a - b;
      const double brute = oracle::multinomial_transition_brute(P, prev, next);
      total += brute;
      if (brute > 0.0) {
        CHECK(multinomial_transition_logpmf(P, prev, next) == doctest::Approx(std::log(brute)).epsilon(1e-10));
      } else {
        CHECK_THROWS_AS(multinomial_transition_logpmf(P, prev, next), DomainError);
      }
    }
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  next << 1, 1, 1;
  CHECK_THROWS_AS(multinomial_transition_logpmf(P, prev, next), DomainError);
}

TEST_CASE("multinomial panel simulation conserves the population") {
  ModelSpec spec;
  spec.family = Family::MultinomialPanel;
  spec.n = 3;
  spec.m = 3;
  spec.individuals = 10;
  MatrixXd P(3, 3);
  P << 0.6, 0.3, 0.1, 0.2, 0.5, 0.3, 0.1, 0.4, 0.5;
  const Trajectory traj = simulate(spec, P, 30, 5, 3);
  for (Index t = 0; t < 30; ++t) CHECK(traj.y.row(t).sum() == 10.0);
  CHECK(std::isfinite(loglik(spec, P, traj)));
  MatrixXd bad = P;
  bad(0, 0) = 0.9;
  CHECK_THROWS_AS(simulate(spec, bad, 10, 0, 1), InvalidArgument);
  CHECK_THROWS_AS(Likelihood::build(spec, traj), InvalidArgument);
}

TEST_CASE("spectral radius agrees with the eigenvalue solver") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 30; ++rep) {
    MatrixXd A(4, 4);
    for (Index i = 0; i < A.size(); ++i) A.data()[i] = u(rng) < 0.3 ? 0.0 : u(rng);
    Eigen::EigenSolver<MatrixXd> es(A, false);
    CHECK(spectral_radius(A) == doctest::Approx(es.eigenvalues().cwiseAbs().maxCoeff()).epsilon(1e-7));
  }
  MatrixXd nil(2, 2);
  nil << 0, 1, 0, 0;
  CHECK(spectral_radius(nil) == doctest::Approx(0.0));
}

TEST_CASE("simulation is deterministic and checks stationarity") {
  const ModelSpec spec = ar_spec(Family::PoissonAR, 1.0);
  const Trajectory a = simulate(spec, test_matrix(), 100, 10, 77);
  const Trajectory b = simulate(spec, test_matrix(), 100, 10, 77);
  const Trajectory c = simulate(spec, test_matrix(), 100, 10, 78);
  CHECK((a.y - b.y).norm() == 0.0);
  CHECK((a.y - c.y).norm() > 0.0);
  CHECK_THROWS_AS(simulate(spec, 2.0 * MatrixXd::Identity(3, 3), 10, 0, 1), NonStationary);
  ModelSpec no_c = spec;
  no_c.intercept.resize(0);
  const Trajectory z = simulate(no_c, MatrixXd::Zero(3, 3), 50, 0, 5);
  CHECK(z.y.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("validate_trajectory rejects bad paths") {
  const ModelSpec spec = ar_spec(Family::PoissonAR, 1.0);
  Trajectory t;
  t.y = MatrixXd::Ones(5, 3);
  CHECK_NOTHROW(validate_trajectory(spec, t));
  t.y(2, 1) = 0.5;
  CHECK_THROWS_AS(validate_trajectory(spec, t), InvalidArgument);
  t.y(2, 1) = -1.0;
  CHECK_THROWS_AS(validate_trajectory(spec, t), InvalidArgument);
  t.y = MatrixXd::Ones(5, 2);
  CHECK_THROWS_AS(validate_trajectory(spec, t), InvalidArgument);
}

TEST_CASE("ranking report orders entries and breaks ties by index") {
  NormalizedNmf p;
  p.a = 1.0;
  p.pi = VectorXd::Ones(1);
  p.beta_star = VectorXd(4);
  p.beta_star << 0.1, 0.4, 0.1, 0.4;
  p.gamma_star = VectorXd(2);
  p.gamma_star << 0.3, 0.7;
  const auto r = ranking_report(p);
  REQUIRE(r.size() == 1);
  std::vector<Index> order;
  for (const auto& e : r[0].vulnerability) order.push_back(e.index);
  CHECK(order == std::vector<Index>{1, 3, 0, 2});
  CHECK(r[0].viral_load[0].index == 1);
}

TEST_CASE("trajectory CSV round trip") {
  const ModelSpec spec = ar_spec(Family::ExponentialAR, 0.8);
  const Trajectory traj = simulate(spec, test_matrix(), 20, 5, 3);
  std::stringstream ss;
  write_trajectory_csv(ss, spec, traj, nlohmann::json{{"seed", 3}});
  const TrajectoryFile f = parse_trajectory_csv(ss);
  REQUIRE(f.family.has_value());
  CHECK(*f.family == Family::ExponentialAR);
  CHECK(f.n == 3);
  CHECK((f.intercept - spec.intercept).norm() == 0.0);
  CHECK(f.meta["seed"] == 3);
  CHECK((trajectory_for_spec(f, spec).y - traj.y).cwiseAbs().maxCoeff() == 0.0);

  ModelSpec st;
  st.family = Family::StaticPoissonMatrix;
  st.n = 2;
  st.m = 3;
  MatrixXd A(2, 3);
  A << 1, 2, 0.5, 0.2, 3, 1;
  const Trajectory frames = simulate(st, A, 6, 0, 1);
  std::stringstream s2;
  write_trajectory_csv(s2, st, frames, nlohmann::json::object());
  const TrajectoryFile g = parse_trajectory_csv(s2);
  const Trajectory back = trajectory_for_spec(g, st);
  REQUIRE(back.frames.size() == 6);
  for (std::size_t t = 0; t < 6; ++t) CHECK((back.frames[t] - frames.frames[t]).norm() == 0.0);
}

TEST_CASE("malformed trajectory CSV names the line") {
  std::istringstream in("# family=poisson n=2 m=2\ny_1,y_2\n1,2\n3\n");
  try {
    parse_trajectory_csv(in);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
}
