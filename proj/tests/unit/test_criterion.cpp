#include <doctest.h>

#include <cmath>
#include <random>

#include "netnmf/criterion.hpp"
#include "netnmf/identset.hpp"
#include "oracles.hpp"

using namespace netnmf;

namespace {

NormalizedNmf normalized(const oracle::Decomp& d) {
  NormalizedNmf p;
  p.a = d.a;
  p.pi = d.pi;
  p.beta_star = d.beta;
  p.gamma_star = d.gamma;
  return p;
}

double gram_det(const MatrixXd& M) { return (M.transpose() * M).determinant(); }

// Criterion of the normalized K = 2 image, computed from the explicit transform.
double oracle_value(CriterionKind kind, const Nmf& seed, double q12, double q21) {
  MatrixXd Bs, Cs;
  oracle::transform_k2(seed.B, seed.C, q12, q21, Bs, Cs);
  VectorXd mass(2);
  MatrixXd beta(Bs.rows(), 2), gamma(Cs.rows(), 2);
  for (Index k = 0; k < 2; ++k) {
    mass(k) = Bs.col(k).sum() * Cs.col(k).sum();
    beta.col(k) = Bs.col(k) / Bs.col(k).sum();
    gamma.col(k) = Cs.col(k) / Cs.col(k).sum();
  }
  switch (kind) {
    case CriterionKind::Entropy:
      return oracle::entropy(mass / mass.sum());
    case CriterionKind::DetB:
      return gram_det(beta);
    case CriterionKind::DetC:
      return gram_det(gamma);
  }
  return 0.0;
}

}  // namespace

TEST_CASE("criterion values of the worked decompositions") {
  const NormalizedNmf p1 = normalized(oracle::example_decomposition(1));
  const NormalizedNmf p2 = normalized(oracle::example_decomposition(2));
  CHECK(std::abs(criterion_eval(CriterionKind::DetB, p1) - 8.0 / 25.0) < 1e-12);
  CHECK(std::abs(criterion_eval(CriterionKind::DetB, p2) - 2.0 / 9.0) < 1e-12);
  CHECK(std::abs(criterion_eval(CriterionKind::DetC, p1) - 8.0 / 225.0) < 1e-12);
  CHECK(std::abs(criterion_eval(CriterionKind::DetC, p2) - 2.0 / 9.0) < 1e-12);
  CHECK(std::abs(criterion_eval(CriterionKind::Entropy, p1) - oracle::entropy(p1.pi)) < 1e-15);
}

TEST_CASE("criterion names") {
  CHECK(criterion_from_string("Entropy") == CriterionKind::Entropy);
  CHECK(criterion_from_string("detb") == CriterionKind::DetB);
  CHECK(criterion_from_string("DETC") == CriterionKind::DetC);
  CHECK(to_string(CriterionKind::DetB) == "detB");
  CHECK_THROWS_AS(criterion_from_string("volume"), InvalidArgument);
}

TEST_CASE("criterion_tilde matches the explicit transform") {
  const NormalizedNmf anchor = normalized(oracle::example_decomposition(2));
  const Nmf seed = denormalize(anchor);
  for (double q12 : {-2.5, -1.0, -0.2}) {
    for (double q21 : {0.0, 0.1, 0.3}) {
      VectorXd q(2);
      q << q21, q12;
      for (auto kind : {CriterionKind::Entropy, CriterionKind::DetB, CriterionKind::DetC}) {
        CHECK(criterion_tilde(kind, anchor, q) == doctest::Approx(oracle_value(kind, seed, q12, q21)).epsilon(1e-11));
      }
    }
  }
}

TEST_CASE("K=2 optimizer is at least as good as a fine grid") {
  std::mt19937_64 rng(41);
  std::vector<NormalizedNmf> anchors{normalized(oracle::example_decomposition(2))};
  for (int rep = 0; rep < 5; ++rep) {
    Nmf f{oracle::random_simplex_columns(4, 2, rng, 0.15), oracle::random_simplex_columns(3, 2, rng, 0.15)};
    anchors.push_back(normalize(f));
  }
  for (const auto& anchor : anchors) {
    const Nmf seed = denormalize(anchor);
    const K2Bounds box = k2_bounds(seed);
    const double lo12 = std::max(box.q12_lo, -20.0), hi12 = std::min(box.q12_hi, 20.0);
    const double lo21 = std::max(box.q21_lo, -20.0), hi21 = std::min(box.q21_hi, 20.0);
    for (auto kind : {CriterionKind::Entropy, CriterionKind::DetB, CriterionKind::DetC}) {
      for (auto dir : {OptDirection::Maximize, OptDirection::Minimize}) {
        if (kind == CriterionKind::Entropy && dir == OptDirection::Minimize) continue;
        const double sign = dir == OptDirection::Maximize ? 1.0 : -1.0;
        double best = -INFINITY;
        for (int a = 0; a <= 80; ++a) {
          for (int b = 0; b <= 80; ++b) {
            const double q12 = lo12 + (hi12 - lo12) * a / 80.0, q21 = lo21 + (hi21 - lo21) * b / 80.0;
            if (!oracle::admissible_k2(seed.B, seed.C, q12, q21)) continue;
            best = std::max(best, sign * oracle_value(kind, seed, q12, q21));
          }
        }
        const CriterionOptimum opt = criterion_opt_q(Criterion{kind, dir}, anchor);
        CHECK(sign * opt.value >= best - 1e-9);
        MatrixXd Bs, Cs;
        oracle::transform_k2(seed.B, seed.C, opt.q(1), opt.q(0), Bs, Cs);
        CHECK(std::min(Bs.minCoeff(), Cs.minCoeff()) >= -1e-9);
      }
    }
  }
}

TEST_CASE("entropy optimum of the worked example is on the boundary") {
  const NormalizedNmf anchor = normalized(oracle::example_decomposition(1));
  const CriterionOptimum opt = criterion_opt_q(Criterion{}, anchor);
  CHECK(opt.boundary);
  const NormalizedNmf best = transform_anchor(anchor, opt.q);
  CHECK(criterion_eval(CriterionKind::Entropy, best) == doctest::Approx(opt.value));
  // Entropy maximum: the most concentrated mixture, pi = (1/10, 9/10) up to order.
  CHECK(std::max(best.pi(0), best.pi(1)) == doctest::Approx(0.9).epsilon(1e-8));
}

TEST_CASE("K=3 optimizer returns an admissible improvement over q = 0") {
  std::mt19937_64 rng(8);
  Nmf f{oracle::random_simplex_columns(5, 3, rng), oracle::random_simplex_columns(4, 3, rng)};
  const NormalizedNmf anchor = normalize(f);
  for (auto kind : {CriterionKind::Entropy, CriterionKind::DetB}) {
    const CriterionOptimum opt = criterion_opt_q(Criterion{kind, OptDirection::Maximize}, anchor);
    CHECK(opt.value >= criterion_eval(kind, anchor) - 1e-12);
    CHECK(admissible(denormalize(anchor), QTransform(3, opt.q), 1e-7));
  }
}
