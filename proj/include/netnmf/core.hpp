#pragma once

#include <Eigen/Dense>

#include <vector>

#include "netnmf/errors.hpp"

namespace netnmf {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Default tolerance for structural invariants (nonnegativity, unit mass).
inline constexpr double kStructuralTol = 1e-10;

/// Dense matrix with finite, nonnegative entries.
///
/// Entries in [-tol, 0) are treated as rounding noise and clamped to zero;
/// anything more negative, or non-finite, is rejected.
class NonNegMatrix {
 public:
  NonNegMatrix() = default;
  explicit NonNegMatrix(MatrixXd values, double tol = kStructuralTol);

  const MatrixXd& values() const noexcept { return values_; }
  Index rows() const noexcept { return values_.rows(); }
  Index cols() const noexcept { return values_.cols(); }
  double operator()(Index i, Index j) const { return values_(i, j); }
  double sum() const { return values_.sum(); }

 private:
  MatrixXd values_;
};

/// Raw factorization A = B C' with B (n x K) and C (m x K) nonnegative.
struct Nmf {
  MatrixXd B;
  MatrixXd C;

  Index rank() const noexcept { return B.cols(); }
  Index rows() const noexcept { return B.rows(); }
  Index cols() const noexcept { return C.rows(); }

  /// Throws InvalidArgument on mismatched ranks, non-finite or negative entries.
  void validate(double tol = kStructuralTol) const;
};

/// Unit-mass parametrization A = a * sum_k pi_k beta*_k gamma*_k'.
///
/// Columns of beta_star (n x K) and gamma_star (m x K) are probability vectors,
/// as is pi.
struct NormalizedNmf {
  double a = 0.0;
  VectorXd pi;
  MatrixXd beta_star;
  MatrixXd gamma_star;

  Index rank() const noexcept { return pi.size(); }
  Index rows() const noexcept { return beta_star.rows(); }
  Index cols() const noexcept { return gamma_star.rows(); }

  void validate(double tol = kStructuralTol) const;
};

/// Index bookkeeping for the stacked parameter vector
/// alpha = (a, pi_1..pi_K, beta*_1..beta*_K, gamma*_1..gamma*_K).
struct AlphaLayout {
  Index n = 0;
  Index m = 0;
  Index K = 0;

  static AlphaLayout of(const NormalizedNmf& p) { return {p.rows(), p.cols(), p.rank()}; }

  Index dim() const noexcept { return 1 + K + K * n + K * m; }
  static constexpr Index a() noexcept { return 0; }
  Index pi(Index k) const noexcept { return 1 + k; }
  Index beta(Index k, Index i) const noexcept { return 1 + K + k * n + i; }
  Index gamma(Index k, Index j) const noexcept { return 1 + K + K * n + k * m + j; }

  VectorXd flatten(const NormalizedNmf& p) const;
  /// Inverse of flatten. No unit-mass checks: perturbed vectors are allowed.
  NormalizedNmf unflatten(const VectorXd& alpha) const;
};

MatrixXd compose_raw(const Nmf& nmf);
NonNegMatrix compose(const Nmf& nmf);
NonNegMatrix compose(const NormalizedNmf& p);

/// a * sum_k pi_k beta_k gamma_k' without validity checks (any alpha vector).
MatrixXd compose_alpha(const NormalizedNmf& p);

/// Throws ZeroColumn if a column of B or C sums to zero.
NormalizedNmf normalize(const Nmf& nmf);

/// B_k = a pi_k beta*_k, C_k = gamma*_k.
Nmf denormalize(const NormalizedNmf& p);

/// Rescales the columns so that B_k and C_k have equal mass; compose is unchanged.
Nmf balance_columns(const Nmf& nmf);

/// Stable permutation of components by descending pi (ties keep their order).
NormalizedNmf sort_by_weight(const NormalizedNmf& p);

struct A3Diagnostic {
  double min_singular_B = 0.0;
  double min_singular_C = 0.0;
  bool pass = false;
};

/// B'B and C'C invertible, judged by the smallest singular values of B and C.
A3Diagnostic check_assumption_a3(const Nmf& nmf, double tol = kStructuralTol);

}  // namespace netnmf
