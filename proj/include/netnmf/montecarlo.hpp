#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "netnmf/estim.hpp"
#include "netnmf/infer.hpp"

namespace netnmf {

enum class Estimator { ML1, AML, IML };

std::string to_string(Estimator e);
/// Accepts ml1, aml, iml (case-insensitive).
Estimator estimator_from_string(const std::string& name);

/// Dispatches to fit_ml_k1 / fit_aml / fit_iml.
FitResult fit(const Likelihood& lik, Estimator e, const FitConfig& cfg);

/// Seed of replication r at sample size T, from std::seed_seq{master, T, r}.
std::uint64_t replication_seed(std::uint64_t master, Index T, Index r);

/// Worker count: explicit value if positive, else NETNMF_THREADS, else the
/// hardware concurrency (at least 1).
unsigned resolve_threads(int requested);

/// Runs body(0..count-1) on a pool of worker threads. Every index writes
/// its own slot, so results do not depend on scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

struct McConfig {
  ModelSpec spec;
  NormalizedNmf truth;
  std::vector<Index> T_grid{500, 2000, 8000};
  int replications = 100;
  std::uint64_t master_seed = 1;
  Index burn_in = 200;
  Estimator estimator = Estimator::AML;
  FitConfig fit;
  bool set_distance = true;
  bool calibration = false;  // bordered variance versus Monte Carlo variance
  bool coverage = false;     // percentile interval of the upper bound of `statistic`
  BoundStatistic statistic = BoundStatistic::Entropy;
  int bound_sims = 200;
  double coverage_level = 0.9;
  InfoOptions info;
  int threads = 0;

  void validate() const;
};

struct McReplication {
  Index T = 0;
  Index rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  NormalizedNmf alpha_hat;
  MatrixXd A_hat;
  double loglik = 0.0;
  int iterations = 0;
  double distance_A = 0.0;    // ||A-hat - A0||_F
  double set_distance = 0.0;  // distance of alpha-hat to the identified set of the truth
  bool has_variance = false;
  VectorXd var_alpha;  // diagonal of V_alpha / T
  VectorXd var_A;      // diagonal of V_A / T
  bool has_interval = false;
  double interval_lo = 0.0;
  double interval_hi = 0.0;
};

struct McRow {
  Index T = 0;
  int successes = 0;
  int failures = 0;
  double median_distance_A = 0.0;
  double median_set_distance = 0.0;
  VectorXd variance_ratio_alpha;  // Monte Carlo variance / mean asymptotic variance
  VectorXd variance_ratio_A;
  int coverage_count = 0;
  int coverage_trials = 0;
  double coverage = 0.0;
};

struct McReport {
  std::vector<McRow> rows;
  std::vector<McReplication> replications;
  double truth_statistic_upper = 0.0;
};

/// Distance from alpha-hat to the identified set of the truth: min over a
/// grid of admissible transforms (K = 2: 101 x 101 over the box; K >= 3:
/// sampled feasible q) and over column orders of alpha-hat, in the sup norm.
double set_distance(const NormalizedNmf& alpha_hat, const NormalizedNmf& truth, int grid = 101);

McReplication run_replication(const McConfig& cfg, Index T, Index r);
McReport run_mc_study(const McConfig& cfg);

}  // namespace netnmf
