#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "netnmf/criterion.hpp"
#include "netnmf/likelihood.hpp"

namespace netnmf {

/// What info_matrices does when the benchmark sits on the boundary of the
/// identified set. Refuse raises BoundaryBenchmark. ActiveConstraints
/// linearizes the active admissibility constraints (zero entries of beta*,
/// gamma*) and keeps the criterion conditions along the remaining free
/// q-directions.
enum class BoundaryPolicy { Refuse, ActiveConstraints };

struct InfoOptions {
  Criterion criterion;
  BoundaryPolicy boundary = BoundaryPolicy::Refuse;
  double fd_step = 1e-5;  // relative step of the central differences in D2
};

struct InfoBlocks {
  MatrixXd J0;      // -(1/T) sum_t d2 log l / d alpha d alpha'
  MatrixXd Jscore;  // (1/T) sum_t s_t s_t'
  MatrixXd D1;      // 1 + 2K unit-mass columns: pi, beta*_k, gamma*_k
  MatrixXd D2;      // identification restrictions (dim q columns)
  Index periods = 0;
  Index K = 0;
  Index dim_q = 0;
  bool boundary = false;
  bool pi_row_vacuous = false;  // K = 1: pi = 1 is not a restriction on A
  std::vector<std::string> notes;

  MatrixXd D() const;
};

/// Throws BoundaryBenchmark under BoundaryPolicy::Refuse when the criterion
/// optimizer at alpha_hat lies on the boundary of the admissible set.
InfoBlocks info_matrices(const Likelihood& lik, const NormalizedNmf& alpha_hat, const InfoOptions& options = {});
InfoBlocks info_matrices(const ModelSpec& spec, const Trajectory& traj, const NormalizedNmf& alpha_hat,
                         const InfoOptions& options = {});

/// Columns of the identification block D2 evaluated at alpha. Exposed for testing.
MatrixXd identification_restrictions(const NormalizedNmf& alpha, const InfoOptions& options, bool& boundary,
                                     std::vector<std::string>& notes);

struct RankDiagnostic {
  Index rank = 0;
  Index expected = 0;
  bool pass = false;
  double threshold = 0.0;
  double gap = 0.0;  // ratio of the last retained to the first dropped singular value
  VectorXd singular_values;
};

/// Rank of (I - P) J0 against dim alpha - dim q - 1 - 2K.
RankDiagnostic check_rank_condition(const InfoBlocks& blocks, double rel_tol = 1e-8);

struct AsymptoticVariance {
  MatrixXd V_alpha;           // J0^11 Jscore J0^11
  MatrixXd V_alpha_equality;  // information equality imposed: J0^11
  MatrixXd V_A;               // G V_alpha G', filled by variance_of_A
  MatrixXd V_A_equality;
  Index periods = 0;
  double route_discrepancy = 0.0;  // max-abs gap between the bordered and projector routes
  VectorXd se_alpha;
  MatrixXd se_A;  // n x m standard errors of the entries of A-hat
  Index rank_V_A = 0;
};

/// NW block of the inverse of [[J0, D], [D', 0]], cross-checked against the
/// projector form with P the orthogonal projector on span(D). Throws
/// SingularBordered with the numerical rank when the bordered matrix is singular.
AsymptoticVariance bordered_variance(const InfoBlocks& blocks);

/// Delta method through A = a sum_k pi_k beta*_k gamma*_k'.
AsymptoticVariance variance_of_A(const NormalizedNmf& alpha_hat, const AsymptoticVariance& v);

enum class BoundStatistic { Entropy, DetB, DetC, Q12, Q21 };

std::string to_string(BoundStatistic s);
BoundStatistic bound_statistic_from_string(const std::string& name);

/// (lower, upper) of the statistic over the identified set of p.
std::pair<double, double> set_bounds(BoundStatistic stat, const NormalizedNmf& p);

struct BoundDistribution {
  BoundStatistic statistic = BoundStatistic::Q12;
  double point_lower = 0.0;
  double point_upper = 0.0;
  std::vector<double> lower;
  std::vector<double> upper;
  std::vector<double> levels;  // percentile levels, e.g. 0.05, 0.5, 0.95
  std::vector<double> lower_percentiles;
  std::vector<double> upper_percentiles;
  int requested = 0;
  int rejected = 0;
};

/// Draws alpha ~ N(alpha_hat, V_alpha / T) in the tangent space orthogonal to
/// span(D), renormalizes onto the simplexes, rejects draws with negative
/// entries, and recomputes the bounds per draw. Throws TooFewValidDraws when
/// more than 99% of the draws are rejected.
BoundDistribution bound_distribution(const NormalizedNmf& alpha_hat, const MatrixXd& V_alpha, const MatrixXd& D,
                                     Index periods, BoundStatistic stat, int n_sims, std::uint64_t seed,
                                     const std::vector<double>& levels = {0.05, 0.5, 0.95});

/// Linear-interpolation percentile of an unsorted sample.
double percentile(std::vector<double> values, double level);

}  // namespace netnmf
