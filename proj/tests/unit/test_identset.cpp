#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "netnmf/identset.hpp"
#include "oracles.hpp"

using namespace netnmf;

namespace {

Nmf seed_of(const oracle::Decomp& d) {
  Nmf f;
  f.B = d.beta;
  for (Index k = 0; k < 2; ++k) f.B.col(k) *= d.a * d.pi(k);
  f.C = d.gamma;
  return f;
}

Nmf random_seed(std::mt19937_64& rng, Index n, Index m, double zero_prob) {
  Nmf f;
  f.B = oracle::random_simplex_columns(static_cast<int>(n), 2, rng, zero_prob);
  f.C = oracle::random_simplex_columns(static_cast<int>(m), 2, rng, zero_prob);
  return f;
}

}  // namespace

TEST_CASE("box of the second worked decomposition") {
  const Nmf seed = seed_of(oracle::example_decomposition(2));
  const K2Bounds box = k2_bounds(seed);
  CHECK(box.q12_lo == doctest::Approx(-3.0).epsilon(1e-14));
  CHECK(box.q12_hi == 0.0);
  CHECK(box.q21_lo == 0.0);
  CHECK(box.q21_hi == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  CHECK_FALSE(box.collapsed());
  CHECK_FALSE(essentially_unique_k2(seed));
}

TEST_CASE("a transform maps the second decomposition onto the first") {
  const Nmf seed = seed_of(oracle::example_decomposition(2));
  const NormalizedNmf p = normalize(apply_q(seed, QTransform::k2(-1.5, 0.0)));
  const auto d1 = oracle::example_decomposition(1);
  CHECK((p.pi - d1.pi).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p.beta_star - d1.beta).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((p.gamma_star - d1.gamma).cwiseAbs().maxCoeff() < 1e-14);

  NormalizedNmf anchor = normalize(seed);
  const NormalizedNmf closed = transform_normalized_k2(anchor, -1.5, 0.0);
  CHECK((closed.pi - d1.pi).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((closed.beta_star - d1.beta).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("box corners are admissible and sit on the boundary") {
  const Nmf seed = seed_of(oracle::example_decomposition(2));
  const K2Bounds box = k2_bounds(seed);
  for (double q12 : {box.q12_lo, box.q12_hi}) {
    for (double q21 : {box.q21_lo, box.q21_hi}) {
      CHECK(admissible(seed, QTransform::k2(q12, q21)));
      CHECK_FALSE(oracle::admissible_k2(seed.B, seed.C, q12 + (q12 == box.q12_lo ? -1e-6 : 1e-6), q21));
    }
  }
}

TEST_CASE("closed-form K=2 box agrees with brute-force admissibility") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    const Nmf seed = random_seed(rng, 4, 3, 0.2);
    const K2Bounds box = k2_bounds(seed);
    const double lo12 = std::isfinite(box.q12_lo) ? box.q12_lo - 1 : -10, hi12 = std::isfinite(box.q12_hi) ? box.q12_hi + 1 : 10;
    const double lo21 = std::isfinite(box.q21_lo) ? box.q21_lo - 1 : -10, hi21 = std::isfinite(box.q21_hi) ? box.q21_hi + 1 : 10;
    int mismatches = 0;
    for (int a = 0; a <= 60; ++a) {
      for (int b = 0; b <= 60; ++b) {
        const double q12 = lo12 + (hi12 - lo12) * a / 60.0, q21 = lo21 + (hi21 - lo21) * b / 60.0;
        const double margin = std::min({std::abs(q12 - box.q12_lo), std::abs(q12 - box.q12_hi),
                                        std::abs(q21 - box.q21_lo), std::abs(q21 - box.q21_hi)});
        if (margin < 1e-6) continue;
        if (box.contains(q12, q21) != oracle::admissible_k2(seed.B, seed.C, q12, q21)) ++mismatches;
      }
    }
    CHECK(mismatches == 0);
  }
}

TEST_CASE("exclusion seeds collapse the box") {
  Nmf f{MatrixXd(3, 2), MatrixXd(3, 2)};
  f.B << 1, 0, 0, 1, 1, 1;
  f.C << 0, 2, 3, 0, 1, 1;
  CHECK(essentially_unique_k2(f));
  CHECK(k2_bounds(f).collapsed());
  f.C(0, 0) = 0.5;  // no longer a zero in the first column of C
  CHECK_FALSE(essentially_unique_k2(f));
  CHECK_FALSE(k2_bounds(f).collapsed());
}

TEST_CASE("k2_bounds requires K = 2") {
  Nmf f{MatrixXd::Ones(3, 3), MatrixXd::Ones(3, 3)};
  CHECK_THROWS_AS(k2_bounds(f), WrongRank);
}

TEST_CASE("QTransform indexing and inverse") {
  const QTransform t = QTransform::k2(0.4, -0.2);
  CHECK(t.matrix()(0, 1) == 0.4);
  CHECK(t.matrix()(1, 0) == -0.2);
  const VectorXd q = t.q();
  CHECK(q(QTransform::q_index(2, 1, 0)) == -0.2);
  CHECK(q(QTransform::q_index(2, 0, 1)) == 0.4);
  CHECK(t.det() == doctest::Approx(1.08));
  MatrixXd expect(2, 2);
  expect << 1, 0.2, -0.4, 1;
  expect /= 1.08;
  CHECK((t.inverse_transpose() - expect).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(QTransform::k2(1.0, 1.0).inverse_transpose(), SingularQ);

  // K = 3 round trip through vec*
  VectorXd v(6);
  v << 1, 2, 3, 4, 5, 6;
  const QTransform t3(3, v);
  CHECK((t3.q() - v).norm() == 0.0);
  for (Index k = 0; k < 3; ++k) CHECK(t3.matrix()(k, k) == 1.0);
  CHECK_THROWS_AS(QTransform::q_index(3, 1, 1), InvalidArgument);
}

TEST_CASE("apply_q preserves the product and flags inadmissible transforms") {
  const Nmf seed = seed_of(oracle::example_decomposition(1));
  const Nmf out = apply_q_unchecked(seed, QTransform::k2(0.3, -0.1));
  CHECK((out.B * out.C.transpose() - seed.B * seed.C.transpose()).cwiseAbs().maxCoeff() < 1e-14);
  MatrixXd Bs, Cs;
  oracle::transform_k2(seed.B, seed.C, 0.3, -0.1, Bs, Cs);
  CHECK((out.B - Bs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((out.C - Cs).cwiseAbs().maxCoeff() < 1e-14);
  CHECK_THROWS_AS(apply_q(seed, QTransform::k2(5.0, 0.0)), NotAdmissible);
  // det Q < 0 is excluded even where both factors stay nonnegative.
  Nmf sq{MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2)};
  CHECK_FALSE(admissible(sq, QTransform::k2(2.0, 2.0)));
}

TEST_CASE("admissibility constraints for general K") {
  std::mt19937_64 rng(23);
  Nmf f;
  f.B = oracle::random_simplex_columns(4, 3, rng);
  f.C = oracle::random_simplex_columns(4, 3, rng);
  const VectorXd zero = VectorXd::Zero(6);
  const VectorXd c0 = admissibility_constraints(f, zero);
  CHECK(c0.size() == 4 * 3 + 4 * 3 + 1);
  CHECK(c0.minCoeff() > 0.0);

  VectorXd far = VectorXd::Constant(6, -3.0);
  const FeasibleQ proj = feasible_q_general(f, far);
  CHECK(admissible(f, QTransform(3, proj.q), 1e-8));
  CHECK_FALSE(proj.active.empty());
  // A feasible point projects onto itself.
  const VectorXd tiny = VectorXd::Constant(6, 1e-4);
  CHECK((feasible_q_general(f, tiny).q - tiny).norm() == 0.0);

  const auto samples = sample_feasible_q(f, 20, 1.0, 99);
  CHECK(samples.size() == 20);
  for (const auto& q : samples) CHECK(admissible(f, QTransform(3, q), 1e-8));
  const auto again = sample_feasible_q(f, 20, 1.0, 99);
  for (std::size_t s = 0; s < samples.size(); ++s) CHECK((samples[s] - again[s]).norm() == 0.0);
}

TEST_CASE("set cut admissibility matches the box and the CSV layout") {
  const Nmf seed = seed_of(oracle::example_decomposition(2));
  std::vector<double> grid;
  for (int k = 0; k <= 40; ++k) grid.push_back(-4.0 + k * 0.125);
  const auto cut = set_cut(seed, QTransform::q_index(2, 0, 1), grid);
  REQUIRE(cut.size() == grid.size());
  for (const auto& pt : cut) {
    const bool expect = pt.q_value >= -3.0 && pt.q_value <= 0.0;
    CHECK(pt.admissible == expect);
    CHECK(pt.point.has_value() == expect);
  }
  const auto& at = cut[20];  // q12 = -1.5
  CHECK(at.q_value == -1.5);
  CHECK(at.det_b == doctest::Approx(8.0 / 25.0).epsilon(1e-12));
  CHECK(at.det_c == doctest::Approx(8.0 / 225.0).epsilon(1e-12));

  std::ostringstream os;
  write_cut_csv(os, cut, 2);
  std::istringstream is(os.str());
  std::string header, first;
  std::getline(is, header);
  std::getline(is, first);
  CHECK(header == "q_value,admissible,pi_1,pi_2,entropy,detB,detC");
  CHECK(first.rfind("-4,0,nan", 0) == 0);
  CHECK_THROWS_AS(set_cut(seed, 2, grid), InvalidArgument);
}
