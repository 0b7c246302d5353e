#pragma once

#include <string>
#include <vector>

#include "netnmf/core.hpp"

namespace netnmf {

enum class CriterionKind { Entropy, DetB, DetC };
enum class OptDirection { Maximize, Minimize };

/// Benchmark criterion used to pick one element of the identified set.
///
/// Entropy is sum_k pi_k log pi_k (maximized: most concentrated mixture);
/// DetB / DetC are the Gram determinants det(B~'B~), det(C~'C~) of the
/// unit-mass columns, maximized by default.
struct Criterion {
  CriterionKind kind = CriterionKind::Entropy;
  OptDirection direction = OptDirection::Maximize;
};

std::string to_string(CriterionKind kind);
/// Accepts entropy, detB, detC (case-insensitive); throws InvalidArgument.
CriterionKind criterion_from_string(const std::string& name);

double criterion_eval(CriterionKind kind, const NormalizedNmf& p);
inline double criterion_eval(const Criterion& c, const NormalizedNmf& p) { return criterion_eval(c.kind, p); }

/// Normalized image of an anchor under Q(q), without admissibility checks.
/// The anchor may be any alpha vector (entries off the simplex are allowed).
NormalizedNmf transform_anchor(const NormalizedNmf& anchor, const VectorXd& q);

/// g~(q; anchor) = criterion of transform_anchor(anchor, q).
double criterion_tilde(CriterionKind kind, const NormalizedNmf& anchor, const VectorXd& q);

struct CriterionOptimum {
  VectorXd q;
  double value = 0.0;
  bool boundary = false;       // optimizer on the admissibility boundary
  std::vector<Index> active;   // active rows of admissibility_constraints at q
  int iterations = 0;
};

/// Optimizes g~(.; anchor) over the admissible transforms of the anchor.
///
/// K = 2 searches the analytic box (grid then compass refinement, ties
/// resolved toward q = 0); K >= 3 runs the feasible SQP from q = 0.
/// Deterministic given the anchor. Throws IterationLimit if the SQP stalls.
CriterionOptimum criterion_opt_q(const Criterion& c, const NormalizedNmf& anchor, int max_iter = 200);

}  // namespace netnmf
