#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "netnmf/core.hpp"

namespace netnmf {

enum class Family { PoissonAR, ExponentialAR, MultinomialPanel, StaticPoissonMatrix };

std::string to_string(Family f);
/// Accepts poisson, exponential, multinomial, static (or the enum names).
Family family_from_string(const std::string& name);

/// Model family and dimensions.
///
/// For the autoregressive families the intensity (or rate) of y_t is
/// theta_t = c + A z_{t-1}, with z_{t-1} = y_{t-1} unless a transform is set.
/// The intercept c is known and fixed: it keeps count processes away from the
/// absorbing zero state and enters the likelihood as an offset.
struct ModelSpec {
  Family family = Family::PoissonAR;
  Index n = 0;
  Index m = 0;
  int individuals = 0;  // population size L for MultinomialPanel
  VectorXd intercept;   // length n, or empty for zero
  std::function<VectorXd(const VectorXd&)> transform;  // z_{t-1} from y_{t-1}, length m

  bool autoregressive() const noexcept { return family != Family::StaticPoissonMatrix; }
  VectorXd intercept_or_zero() const { return intercept.size() ? intercept : VectorXd::Zero(n); }
  VectorXd regressor(const VectorXd& y_prev) const { return transform ? transform(y_prev) : y_prev; }
  /// Throws InvalidArgument on inconsistent dimensions or options.
  void validate() const;
};

/// Observed path. Autoregressive and panel families fill y (T x n, one row
/// per date); the static family fills frames (T matrices of size n x m).
struct Trajectory {
  MatrixXd y;
  std::vector<MatrixXd> frames;

  Index length() const noexcept { return frames.empty() ? y.rows() : static_cast<Index>(frames.size()); }
};

/// Checks dimensions, nonnegativity, and integrality for count families.
void validate_trajectory(const ModelSpec& spec, const Trajectory& traj);

/// log l(y; theta) for one observation vector (cells flattened for the static family).
double log_density(Family family, const VectorXd& theta, const VectorXd& y);

/// d log l / d theta: Poisson y/theta - 1, exponential 1/theta - y.
/// Throws DomainError when theta_i = 0 and y_i > 0 (Poisson) or theta_i <= 0 (exponential).
VectorXd score_theta(const ModelSpec& spec, const VectorXd& theta, const VectorXd& y);

/// Diagonal of the theta-Hessian: -y/theta^2 (Poisson), -1/theta^2 (exponential).
VectorXd hessian_theta(const ModelSpec& spec, const VectorXd& theta, const VectorXd& y);

/// Sum over t = 2..T of log l(y_t | y_{t-1}; A) (t = 1..T for the static family).
double loglik(const ModelSpec& spec, const MatrixXd& A, const Trajectory& traj);

/// Exact one-step transition log-probability of the aggregated panel counts:
/// the convolution over origin states i of Multinomial(y_{i,t-1}; a_i).
double multinomial_transition_logpmf(const MatrixXd& A, const VectorXd& y_prev, const VectorXd& y_next);

/// Perron root by power iteration on A + I (tolerance 1e-10, at most
/// 10000 iterations, eigenvalue solver fallback). Requires a square A.
double spectral_radius(const MatrixXd& A);

/// Throws NonStationary when the autoregressive family has spectral radius >= 1,
/// InvalidArgument when a panel transition matrix has rows off the simplex.
void check_simulation_domain(const ModelSpec& spec, const MatrixXd& A);

/// Deterministic given rng_seed; burn_in draws are discarded.
Trajectory simulate(const ModelSpec& spec, const MatrixXd& A, Index T, Index burn_in, std::uint64_t rng_seed);

struct RankingEntry {
  Index index = 0;  // zero-based
  double value = 0.0;
};

struct ComponentRanking {
  Index component = 0;
  std::vector<RankingEntry> vulnerability;  // by beta*_k, descending
  std::vector<RankingEntry> viral_load;     // by gamma*_k, descending
};

/// Descending order; ties go to the lower index first.
std::vector<ComponentRanking> ranking_report(const NormalizedNmf& p);

}  // namespace netnmf
