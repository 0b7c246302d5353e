#include <doctest.h>

#include <atomic>
#include <cstdlib>
#include <set>

#include "netnmf/identset.hpp"
#include "netnmf/montecarlo.hpp"

using namespace netnmf;

namespace {

NormalizedNmf truth_k2() {
  NormalizedNmf p;
  p.a = 0.6;
  p.pi.resize(2);
  p.pi << 0.6, 0.4;
  p.beta_star.resize(3, 2);
  p.beta_star << 0.6, 0.1, 0.3, 0.3, 0.1, 0.6;
  p.gamma_star.resize(3, 2);
  p.gamma_star << 0.5, 0.2, 0.3, 0.3, 0.2, 0.5;
  return p;
}

McConfig small_study() {
  McConfig cfg;
  cfg.spec.n = 3;
  cfg.spec.m = 3;
  cfg.spec.intercept = VectorXd::Ones(3);
  cfg.truth = truth_k2();
  cfg.T_grid = {300, 600};
  cfg.replications = 3;
  cfg.master_seed = 7;
  cfg.burn_in = 50;
  cfg.fit.K = 2;
  cfg.fit.max_outer_iters = 200;
  return cfg;
}

}  // namespace

TEST_CASE("replication seeds are deterministic and distinct") {
  std::set<std::uint64_t> seen;
  for (Index T : {500, 2000}) {
    for (Index r = 0; r < 50; ++r) {
      const std::uint64_t s = replication_seed(1, T, r);
      CHECK(s == replication_seed(1, T, r));
      seen.insert(s);
    }
  }
  CHECK(seen.size() == 100);
  CHECK(replication_seed(1, 500, 0) != replication_seed(2, 500, 0));
}

TEST_CASE("parallel_for visits every index once") {
  std::vector<std::atomic<int>> hits(97);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) CHECK(h.load() == 1);
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("estimator names and dispatch") {
  CHECK(estimator_from_string("AML") == Estimator::AML);
  CHECK(estimator_from_string("iml") == Estimator::IML);
  CHECK(estimator_from_string("ml1") == Estimator::ML1);
  CHECK(to_string(Estimator::IML) == "iml");
  CHECK_THROWS_AS(estimator_from_string("em"), InvalidArgument);
}

TEST_CASE("set distance is zero on the identified set") {
  const NormalizedNmf t = truth_k2();
  CHECK(set_distance(t, t) < 1e-12);
  const NormalizedNmf moved = transform_normalized_k2(t, 0.05, -0.05);
  CHECK(set_distance(moved, t) < 0.02);
  NormalizedNmf swapped = t;
  swapped.pi << t.pi(1), t.pi(0);
  swapped.beta_star.col(0) = t.beta_star.col(1);
  swapped.beta_star.col(1) = t.beta_star.col(0);
  swapped.gamma_star.col(0) = t.gamma_star.col(1);
  swapped.gamma_star.col(1) = t.gamma_star.col(0);
  CHECK(set_distance(swapped, t) < 1e-12);
  NormalizedNmf off = t;
  off.a = 0.7;
  CHECK(set_distance(off, t) == doctest::Approx(0.1).epsilon(1e-9));
}

TEST_CASE("Monte Carlo study does not depend on the thread count") {
  McConfig cfg = small_study();
  cfg.threads = 1;
  const McReport one = run_mc_study(cfg);
  cfg.threads = 3;
  const McReport three = run_mc_study(cfg);
  REQUIRE(one.rows.size() == 2);
  REQUIRE(one.replications.size() == three.replications.size());
  for (std::size_t k = 0; k < one.replications.size(); ++k) {
    CHECK(one.replications[k].seed == three.replications[k].seed);
    CHECK(one.replications[k].loglik == three.replications[k].loglik);
  }
  for (std::size_t k = 0; k < one.rows.size(); ++k) {
    CHECK(one.rows[k].median_distance_A == three.rows[k].median_distance_A);
    CHECK(one.rows[k].successes + one.rows[k].failures == 3);
  }
}

TEST_CASE("calibration and coverage fields are filled when requested") {
  McConfig cfg = small_study();
  cfg.T_grid = {800};
  cfg.calibration = true;
  cfg.coverage = true;
  cfg.bound_sims = 40;
  cfg.info.boundary = BoundaryPolicy::ActiveConstraints;
  const McReport r = run_mc_study(cfg);
  REQUIRE(r.rows.size() == 1);
  CHECK(r.rows[0].variance_ratio_A.size() == 9);
  CHECK(r.rows[0].coverage_trials >= 0);
  CHECK(r.rows[0].coverage_trials <= 3);
  bool any_variance = false;
  for (const auto& rep : r.replications) any_variance = any_variance || rep.has_variance;
  CHECK(any_variance);
}

TEST_CASE("Monte Carlo configuration checks") {
  McConfig cfg = small_study();
  cfg.replications = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = small_study();
  cfg.spec.family = Family::MultinomialPanel;
  cfg.spec.individuals = 10;
  CHECK_THROWS_AS(cfg.validate(), InputError);
}
