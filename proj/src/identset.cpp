#include "netnmf/identset.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "netnmf/criterion.hpp"
#include "netnmf/qp.hpp"

namespace netnmf {

namespace {

MatrixXd cofactor_matrix(const MatrixXd& Q) {
  const Index K = Q.rows();
  if (K == 1) return MatrixXd::Ones(1, 1);
  MatrixXd cof(K, K);
  MatrixXd minor(K - 1, K - 1);
  for (Index i = 0; i < K; ++i) {
    for (Index j = 0; j < K; ++j) {
      for (Index r = 0, rr = 0; r < K; ++r) {
        if (r == i) continue;
        for (Index c = 0, cc = 0; c < K; ++c) {
          if (c == j) continue;
          minor(rr, cc++) = Q(r, c);
        }
        ++rr;
      }
      cof(i, j) = ((i + j) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
    }
  }
  return cof;
}

void require_k2(const Nmf& seed) {
  if (seed.rank() != 2) {
    throw WrongRank("K = 2 required, got K = " + std::to_string(seed.rank()));
  }
}

// inf over {j : den_j > tol} of num_j / den_j, +inf for an empty set.
double ratio_inf(const VectorXd& num, const VectorXd& den, double tol) {
  double best = kInf;
  for (Index j = 0; j < num.size(); ++j) {
    if (den(j) > tol) best = std::min(best, std::max(num(j), 0.0) / den(j));
  }
  return best;
}

bool has_exclusion(const VectorXd& zero_in, const VectorXd& positive_in, double tol) {
  for (Index j = 0; j < zero_in.size(); ++j) {
    if (std::abs(zero_in(j)) <= tol && positive_in(j) > tol) return true;
  }
  return false;
}

}  // namespace

QTransform::QTransform(Index K) : Q_(MatrixXd::Identity(K, K)) {
  if (K < 1) throw InvalidArgument("QTransform needs K >= 1");
}

QTransform::QTransform(Index K, const VectorXd& q) : QTransform(K) {
  if (q.size() != q_dim(K)) {
    throw InvalidArgument("vec*Q must have K(K-1) = " + std::to_string(q_dim(K)) + " entries");
  }
  for (Index j = 0; j < K; ++j) {
    for (Index i = 0; i < K; ++i) {
      if (i != j) Q_(i, j) = q(q_index(K, i, j));
    }
  }
}

QTransform QTransform::from_matrix(const MatrixXd& Q) {
  if (Q.rows() != Q.cols()) throw InvalidArgument("Q must be square");
  for (Index k = 0; k < Q.rows(); ++k) {
    if (Q(k, k) != 1.0) throw InvalidArgument("Q must have a unit diagonal");
  }
  QTransform t(Q.rows());
  t.Q_ = Q;
  return t;
}

QTransform QTransform::k2(double q12, double q21) {
  MatrixXd Q(2, 2);
  Q << 1.0, q12, q21, 1.0;
  return from_matrix(Q);
}

VectorXd QTransform::q() const {
  const Index K = Q_.rows();
  VectorXd out(q_dim(K));
  for (Index j = 0; j < K; ++j) {
    for (Index i = 0; i < K; ++i) {
      if (i != j) out(q_index(K, i, j)) = Q_(i, j);
    }
  }
  return out;
}

Index QTransform::q_index(Index K, Index i, Index j) {
  if (i == j || i < 0 || j < 0 || i >= K || j >= K) throw InvalidArgument("not an off-diagonal position");
  return j * (K - 1) + (i < j ? i : i - 1);
}

MatrixXd QTransform::inverse_transpose(double tol) const {
  const double d = det();
  if (!(std::abs(d) > tol)) throw SingularQ("Q is singular (det = " + std::to_string(d) + ")");
  return Q_.transpose().inverse();
}

Nmf apply_q_unchecked(const Nmf& seed, const QTransform& q) {
  if (q.K() != seed.rank()) throw InvalidArgument("Q and the seed have different K");
  Nmf out;
  out.B = seed.B * q.matrix();
  out.C = seed.C * q.inverse_transpose();
  return out;
}

Nmf apply_q(const Nmf& seed, const QTransform& q, double tol) {
  Nmf out = apply_q_unchecked(seed, q);
  if (!(q.det() > 0.0)) throw NotAdmissible("det Q must be positive");
  if (out.B.minCoeff() < -tol || out.C.minCoeff() < -tol) {
    throw NotAdmissible("transformed factors have a negative entry");
  }
  out.B = out.B.cwiseMax(0.0);
  out.C = out.C.cwiseMax(0.0);
  return out;
}

bool admissible(const Nmf& seed, const QTransform& q, double tol) {
  if (!(q.det() > 0.0)) {
    (void)q.inverse_transpose();  // raises SingularQ at det = 0
    return false;
  }
  const Nmf out = apply_q_unchecked(seed, q);
  return out.B.minCoeff() >= -tol && out.C.minCoeff() >= -tol;
}

K2Bounds k2_bounds(const Nmf& seed, double zero_tol) {
  require_k2(seed);
  const VectorXd b1 = seed.B.col(0), b2 = seed.B.col(1);
  const VectorXd g1 = seed.C.col(0), g2 = seed.C.col(1);
  K2Bounds box;
  box.q21_lo = -ratio_inf(b1, b2, zero_tol);
  box.q12_lo = -ratio_inf(b2, b1, zero_tol);
  box.q12_hi = ratio_inf(g1, g2, zero_tol);
  box.q21_hi = ratio_inf(g2, g1, zero_tol);
  // Signed zeros from 0/x would make collapsed() depend on the sign bit.
  for (double* v : {&box.q12_lo, &box.q12_hi, &box.q21_lo, &box.q21_hi}) {
    if (*v == 0.0) *v = 0.0;
  }
  return box;
}

bool essentially_unique_k2(const Nmf& seed, double zero_tol) {
  require_k2(seed);
  const VectorXd b1 = seed.B.col(0), b2 = seed.B.col(1);
  const VectorXd g1 = seed.C.col(0), g2 = seed.C.col(1);
  return has_exclusion(b1, b2, zero_tol) && has_exclusion(b2, b1, zero_tol) &&
         has_exclusion(g1, g2, zero_tol) && has_exclusion(g2, g1, zero_tol);
}

NormalizedNmf transform_normalized_k2(const NormalizedNmf& seed, double q12, double q21, double tol) {
  if (seed.rank() != 2) throw WrongRank("K = 2 required");
  const Nmf raw = denormalize(seed);
  if (!admissible(raw, QTransform::k2(q12, q21), tol)) {
    throw NotAdmissible("(q12, q21) is outside the admissible set");
  }
  const VectorXd& beta1 = raw.B.col(0);
  const VectorXd& beta2 = raw.B.col(1);
  const VectorXd& gamma1 = raw.C.col(0);
  const VectorXd& gamma2 = raw.C.col(1);
  const double b1 = beta1.sum(), b2 = beta2.sum();
  const double g1 = gamma1.sum(), g2 = gamma2.sum();

  const double db1 = b1 + q21 * b2;
  const double db2 = q12 * b1 + b2;
  const double dg1 = g1 - q12 * g2;
  const double dg2 = -q21 * g1 + g2;
  if (!(db1 > 0.0 && db2 > 0.0 && dg1 > 0.0 && dg2 > 0.0)) {
    throw NotAdmissible("transformed column has zero mass");
  }
  NormalizedNmf out;
  out.a = seed.a;
  out.beta_star.resize(seed.rows(), 2);
  out.gamma_star.resize(seed.cols(), 2);
  out.beta_star.col(0) = ((beta1 + q21 * beta2) / db1).cwiseMax(0.0);
  out.beta_star.col(1) = ((q12 * beta1 + beta2) / db2).cwiseMax(0.0);
  out.gamma_star.col(0) = ((gamma1 - q12 * gamma2) / dg1).cwiseMax(0.0);
  out.gamma_star.col(1) = ((-q21 * gamma1 + gamma2) / dg2).cwiseMax(0.0);
  for (Index k = 0; k < 2; ++k) {
    out.beta_star.col(k) /= out.beta_star.col(k).sum();
    out.gamma_star.col(k) /= out.gamma_star.col(k).sum();
  }
  const double odds = (db1 * dg1) / (db2 * dg2);
  out.pi.resize(2);
  out.pi(0) = odds / (1.0 + odds);
  out.pi(1) = 1.0 / (1.0 + odds);
  return out;
}

VectorXd admissibility_constraints(const Nmf& seed, const VectorXd& q, double det_floor) {
  const Index K = seed.rank();
  const QTransform t(K, q);
  const MatrixXd BQ = seed.B * t.matrix();
  const MatrixXd Ccof = seed.C * cofactor_matrix(t.matrix());
  VectorXd c(BQ.size() + Ccof.size() + 1);
  c.head(BQ.size()) = BQ.reshaped();
  c.segment(BQ.size(), Ccof.size()) = Ccof.reshaped();
  c(c.size() - 1) = t.det() - det_floor;
  return c;
}

FeasibleQ feasible_q_general(const Nmf& seed, const VectorXd& q0, int max_iter) {
  const Index K = seed.rank();
  if (K < 2) throw WrongRank("feasible_q_general needs K >= 2");
  if (q0.size() != QTransform::q_dim(K)) throw InvalidArgument("q0 has the wrong dimension");
  auto constraints = [&](const VectorXd& q) { return admissibility_constraints(seed, q); };

  FeasibleQ out;
  if (constraints(q0).minCoeff() >= 0.0) {
    out.q = q0;
    return out;
  }
  opt::NlpProblem problem;
  problem.objective = [&](const VectorXd& q) { return (q - q0).squaredNorm(); };
  problem.gradient = [&](const VectorXd& q) -> VectorXd { return 2.0 * (q - q0); };
  problem.constraints = constraints;
  problem.hessian = 2.0 * MatrixXd::Identity(q0.size(), q0.size());
  opt::SqpOptions options;
  options.max_iter = max_iter;
  const auto res = opt::minimize_sqp(problem, VectorXd::Zero(q0.size()), options);
  if (!res.converged) {
    throw IterationLimit("projection onto the admissible set did not converge in " +
                         std::to_string(max_iter) + " iterations");
  }
  out.q = res.x;
  out.iterations = res.iterations;
  out.active = res.active;
  return out;
}

std::vector<VectorXd> sample_feasible_q(const Nmf& seed, std::size_t count, double radius,
                                        std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(-radius, radius);
  const Index dim = QTransform::q_dim(seed.rank());
  std::vector<VectorXd> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    VectorXd q0(dim);
    for (Index k = 0; k < dim; ++k) q0(k) = unif(rng);
    out.push_back(feasible_q_general(seed, q0).q);
  }
  return out;
}

std::vector<CutPoint> set_cut(const Nmf& seed, Index component_index, const std::vector<double>& grid) {
  const Index K = seed.rank();
  if (component_index < 0 || component_index >= QTransform::q_dim(K)) {
    throw InvalidArgument("cut component index out of range");
  }
  std::vector<CutPoint> out;
  out.reserve(grid.size());
  for (double v : grid) {
    CutPoint pt;
    pt.q_value = v;
    VectorXd q = VectorXd::Zero(QTransform::q_dim(K));
    q(component_index) = v;
    const QTransform t(K, q);
    try {
      pt.admissible = admissible(seed, t);
    } catch (const SingularQ&) {
      pt.admissible = false;
    }
    if (pt.admissible) {
      try {
        NormalizedNmf p = normalize(apply_q(seed, t));
        pt.entropy = criterion_eval(CriterionKind::Entropy, p);
        pt.det_b = criterion_eval(CriterionKind::DetB, p);
        pt.det_c = criterion_eval(CriterionKind::DetC, p);
        pt.point = std::move(p);
      } catch (const ZeroColumn&) {
        // A column vanishes exactly on a corner of the set.
        pt.admissible = false;
      }
    }
    out.push_back(std::move(pt));
  }
  return out;
}

void write_cut_csv(std::ostream& out, const std::vector<CutPoint>& cut, Index K) {
  out << "q_value,admissible";
  for (Index k = 0; k < K; ++k) out << ",pi_" << (k + 1);
  out << ",entropy,detB,detC\n";
  out << std::setprecision(17);
  for (const auto& pt : cut) {
    out << pt.q_value << ',' << (pt.admissible ? 1 : 0);
    for (Index k = 0; k < K; ++k) {
      out << ',';
      if (pt.point) {
        out << pt.point->pi(k);
      } else {
        out << "nan";
      }
    }
    if (pt.point) {
      out << ',' << pt.entropy << ',' << pt.det_b << ',' << pt.det_c << '\n';
    } else {
      out << ",nan,nan,nan\n";
    }
  }
}

}  // namespace netnmf
