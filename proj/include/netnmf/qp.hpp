#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "netnmf/core.hpp"

namespace netnmf::opt {

struct QpResult {
  VectorXd x;
  VectorXd multipliers;  // one per constraint row; zero for inactive rows
  std::vector<Index> working_set;
  int iterations = 0;
  bool optimal = false;
};

/// Primal active-set method for  min 0.5 x'Hx + g'x  s.t.  A x >= b.
///
/// H must be positive definite and x0 feasible. The working set is kept
/// linearly independent, so degenerate vertices are handled by skipping
/// dependent rows.
QpResult solve_inequality_qp(const MatrixXd& H, const VectorXd& g, const MatrixXd& A,
                             const VectorXd& b, const VectorXd& x0, int max_iter = 500);

/// Smooth problem  min f(x)  s.t.  c(x) >= 0.
struct NlpProblem {
  std::function<double(const VectorXd&)> objective;
  std::function<VectorXd(const VectorXd&)> gradient;  // finite differences when empty
  std::function<VectorXd(const VectorXd&)> constraints;
  std::optional<MatrixXd> hessian;  // constant Hessian; damped BFGS when absent
};

struct SqpOptions {
  int max_iter = 200;
  double step_tol = 1e-12;
  double feas_tol = 1e-11;
  double fd_step = 1e-7;
};

struct SqpResult {
  VectorXd x;
  double value = 0.0;
  VectorXd multipliers;
  std::vector<Index> active;  // constraints with c_i(x) <= feas_tol at the solution
  int iterations = 0;
  bool converged = false;
};

/// Feasible active-set SQP: every iterate satisfies c(x) >= -feas_tol.
///
/// Each step solves the linearized QP from d = 0 (feasible because the
/// iterate is), then backtracks with a second-order correction on the
/// constraints that the curved boundary makes the linear step violate.
/// Returns converged = false when max_iter is reached; x0 must be feasible.
SqpResult minimize_sqp(const NlpProblem& problem, const VectorXd& x0, const SqpOptions& options = {});

VectorXd finite_difference_gradient(const std::function<double(const VectorXd&)>& f,
                                    const VectorXd& x, double step);
MatrixXd finite_difference_jacobian(const std::function<VectorXd(const VectorXd&)>& c,
                                    const VectorXd& x, double step);

}  // namespace netnmf::opt
