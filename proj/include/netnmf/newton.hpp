#pragma once

#include <functional>

#include "netnmf/core.hpp"

namespace netnmf::opt {

/// Concave objective on the nonnegative orthant. value returns -inf outside
/// its domain; derivatives fills the gradient and the (negative semidefinite)
/// Hessian.
struct OrthantProblem {
  std::function<double(const VectorXd&)> value;
  std::function<void(const VectorXd&, VectorXd&, MatrixXd&)> derivatives;
};

struct NewtonOptions {
  int max_iter = 5;
  int max_halvings = 40;
  double armijo = 1e-4;
  double binding_eps = 1e-12;
  double grad_tol = 1e-12;
};

struct NewtonReport {
  VectorXd x;
  double value = 0.0;
  int iterations = 0;
  bool stationary = false;
};

/// Projected Newton ascent: coordinates at the bound with a nonpositive
/// gradient are held at zero, the rest take a (ridge-safeguarded) Newton step,
/// and the projected arc is backtracked by halving. Only improving steps are
/// accepted, so the value never decreases.
NewtonReport projected_newton_maximize(const OrthantProblem& problem, const VectorXd& x0,
                                       const NewtonOptions& options = {});

}  // namespace netnmf::opt
