#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <vector>

#include "netnmf/core.hpp"

namespace netnmf {

/// K x K matrix with unit diagonal, parametrized by its off-diagonal entries
/// q = vec*Q stacked column by column (for K = 2: q = (q21, q12)).
class QTransform {
 public:
  explicit QTransform(Index K);
  QTransform(Index K, const VectorXd& q);
  static QTransform from_matrix(const MatrixXd& Q);
  /// K = 2 convenience with the entries named by position.
  static QTransform k2(double q12, double q21);

  Index K() const noexcept { return Q_.rows(); }
  const MatrixXd& matrix() const noexcept { return Q_; }
  VectorXd q() const;
  double det() const { return Q_.determinant(); }
  /// (Q')^{-1}; throws SingularQ when |det Q| <= tol.
  MatrixXd inverse_transpose(double tol = 1e-12) const;

  static Index q_dim(Index K) noexcept { return K * (K - 1); }
  /// Position of Q(i, j), i != j, inside vec*Q.
  static Index q_index(Index K, Index i, Index j);

 private:
  MatrixXd Q_;
};

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct K2Bounds {
  double q12_lo = 0.0;
  double q12_hi = 0.0;
  double q21_lo = 0.0;
  double q21_hi = 0.0;

  bool contains(double q12, double q21, double slack = 0.0) const {
    return q12 >= q12_lo - slack && q12 <= q12_hi + slack && q21 >= q21_lo - slack &&
           q21 <= q21_hi + slack;
  }
  bool collapsed() const {
    return q12_lo == 0.0 && q12_hi == 0.0 && q21_lo == 0.0 && q21_hi == 0.0;
  }
};

inline constexpr double kAdmissibleTol = 1e-9;

/// B* = B Q and C* = C (Q')^{-1}. Entries in [-tol, 0) are clamped to zero;
/// throws NotAdmissible below that, SingularQ for singular Q.
Nmf apply_q(const Nmf& seed, const QTransform& q, double tol = kAdmissibleTol);

/// The transform without the admissibility check: entries may be negative.
Nmf apply_q_unchecked(const Nmf& seed, const QTransform& q);

/// True iff det Q > 0, B Q >= -tol and C (Q')^{-1} >= -tol.
///
/// det Q > 0 restricts to the connected component of the identity: the
/// other component only holds column-permuted copies of the same set.
bool admissible(const Nmf& seed, const QTransform& q, double tol = kAdmissibleTol);

/// One-sided infima of the K = 2 admissible box, +-inf for empty index sets.
/// Entries with |x| <= zero_tol count as zero. Throws WrongRank unless K = 2.
K2Bounds k2_bounds(const Nmf& seed, double zero_tol = 1e-12);

/// Existence of the four exclusion indices (zero in one column, positive in
/// the other, for each ordering in B and in C).
bool essentially_unique_k2(const Nmf& seed, double zero_tol = 1e-12);

/// Closed-form normalized image of a K = 2 transform; a is unchanged.
NormalizedNmf transform_normalized_k2(const NormalizedNmf& seed, double q12, double q21,
                                      double tol = kAdmissibleTol);

/// Constraint values c(q) >= 0 describing admissibility for general K:
/// entries of B Q, entries of C adj(Q)', then det Q - det_floor.
VectorXd admissibility_constraints(const Nmf& seed, const VectorXd& q, double det_floor = 1e-8);

struct FeasibleQ {
  VectorXd q;
  int iterations = 0;
  std::vector<Index> active;  // indices into admissibility_constraints
};

/// Euclidean projection of q0 onto the admissible set by feasible SQP started
/// from q = 0. Throws IterationLimit when the cap is hit.
FeasibleQ feasible_q_general(const Nmf& seed, const VectorXd& q0, int max_iter = 200);

/// Random admissible transforms: uniform proposals in [-radius, radius]^dim
/// projected onto the set.
std::vector<VectorXd> sample_feasible_q(const Nmf& seed, std::size_t count, double radius,
                                        std::uint64_t rng_seed);

struct CutPoint {
  double q_value = 0.0;
  bool admissible = false;
  std::optional<NormalizedNmf> point;
  double entropy = 0.0;
  double det_b = 0.0;
  double det_c = 0.0;
};

/// Varies one coordinate of vec*Q over grid with the others at zero.
std::vector<CutPoint> set_cut(const Nmf& seed, Index component_index, const std::vector<double>& grid);

/// CSV columns q_value, admissible, pi_1..pi_K, entropy, detB, detC;
/// inadmissible rows carry nan values.
void write_cut_csv(std::ostream& out, const std::vector<CutPoint>& cut, Index K);

}  // namespace netnmf
