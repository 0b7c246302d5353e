#pragma once

#include "netnmf/likelihood.hpp"

namespace netnmf {

/// Derivatives of the log-likelihood in the stacked parameter alpha, by the
/// chain rule through theta = offset + a sum_k pi_k beta*_ki gamma*_k' z.
struct AlphaDerivatives {
  VectorXd score;
  MatrixXd hessian;        // filled when requested
  MatrixXd period_scores;  // dim(alpha) x periods, filled when requested
};

/// The parameter vector may leave the simplexes; theta must stay in the domain.
AlphaDerivatives alpha_derivatives(const Likelihood& lik, const NormalizedNmf& p, bool with_hessian,
                                   bool with_period_scores = false);

double alpha_loglik(const Likelihood& lik, const NormalizedNmf& p);

/// G = d vec(A) / d alpha' (column-major vec), size nm x dim(alpha).
MatrixXd compose_jacobian(const NormalizedNmf& p);

}  // namespace netnmf
