#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netnmf/criterion.hpp"
#include "netnmf/likelihood.hpp"

namespace netnmf {

struct FitConfig {
  Index K = 1;
  int max_outer_iters = 2000;
  int inner_iters = 5;
  double eps_loglik = 1e-9;  // relative to max(1, |L|)
  double eps_param = 1e-7;   // sup-norm movement of alpha; K = 1 KKT residual bound
  int iml_warmup = 25;
  Criterion criterion;
  std::uint64_t seed = 1;              // random initialization
  std::optional<NormalizedNmf> init;   // provided initialization

  void validate() const;
};

struct FitResult {
  std::string method;
  NormalizedNmf alpha_hat;
  double loglik = 0.0;
  std::vector<double> loglik_path;
  std::vector<double> criterion_path;
  std::vector<VectorXd> q_path;
  std::vector<double> step_norms;
  std::vector<double> transform_loglik_change;  // |L after - L before| of each criterion step
  VectorXd multipliers;  // unit-mass multipliers (pi, beta*_k, gamma*_k order)
  bool converged = false;
  bool boundary_optimum = false;
  int iterations = 0;
};

/// One alternating step: all rows of B with C fixed, then C with the new B
/// fixed, each by a few projected Newton iterations. Columns are rebalanced
/// afterwards; the likelihood never decreases.
Nmf aml_step(const Likelihood& lik, const Nmf& current, int inner_iters = 5);
Nmf aml_step(const ModelSpec& spec, const Trajectory& traj, const Nmf& current, int inner_iters = 5);

/// Random start: uniform factors rescaled by the one-dimensional maximum
/// likelihood multiple of their product.
Nmf initial_factors(const Likelihood& lik, Index K, std::uint64_t seed);

FitResult fit_aml(const Likelihood& lik, const FitConfig& cfg);
FitResult fit_ml_k1(const Likelihood& lik, const FitConfig& cfg);
FitResult fit_iml(const Likelihood& lik, const FitConfig& cfg);

FitResult fit_aml(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg);
FitResult fit_ml_k1(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg);
FitResult fit_iml(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg);

/// Least-squares unit-mass multipliers from the alpha-score at p, over the
/// positive coordinates of each block.
VectorXd unit_mass_multipliers(const Likelihood& lik, const NormalizedNmf& p);

}  // namespace netnmf
