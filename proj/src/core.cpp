#include "netnmf/core.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace netnmf {

namespace {

void check_nonneg(MatrixXd& m, double tol, const char* name) {
  for (Index j = 0; j < m.cols(); ++j) {
    for (Index i = 0; i < m.rows(); ++i) {
      double& x = m(i, j);
      if (!std::isfinite(x)) {
        throw InvalidArgument(std::string(name) + " has a non-finite entry at (" +
                              std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (x < 0.0) {
        if (x < -tol) {
          throw InvalidArgument(std::string(name) + " has a negative entry at (" +
                                std::to_string(i) + "," + std::to_string(j) + ")");
        }
        x = 0.0;
      }
    }
  }
}

// Divides by the sum twice: the second pass removes the rounding left by the first.
VectorXd to_unit_mass(const VectorXd& v) {
  VectorXd out = v / v.sum();
  return out / out.sum();
}

double min_singular_value(const MatrixXd& M) {
  if (M.cols() == 0) return 0.0;
  if (M.rows() < M.cols()) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  return svd.singularValues().minCoeff();
}

}  // namespace

NonNegMatrix::NonNegMatrix(MatrixXd values, double tol) : values_(std::move(values)) {
  if (values_.size() == 0) throw InvalidArgument("matrix must be non-empty");
  check_nonneg(values_, tol, "matrix");
}

void Nmf::validate(double tol) const {
  if (B.cols() != C.cols()) {
    throw InvalidArgument("B and C must have the same number of columns (K)");
  }
  if (B.cols() < 1 || B.rows() < 1 || C.rows() < 1) {
    throw InvalidArgument("factorization must have K >= 1 and non-empty factors");
  }
  if (!B.allFinite() || !C.allFinite()) throw InvalidArgument("non-finite factor entry");
  if (B.minCoeff() < -tol) throw InvalidArgument("B has a negative entry");
  if (C.minCoeff() < -tol) throw InvalidArgument("C has a negative entry");
}

void NormalizedNmf::validate(double tol) const {
  const Index K = pi.size();
  if (K < 1 || beta_star.cols() != K || gamma_star.cols() != K) {
    throw InvalidArgument("normalized factorization has inconsistent rank");
  }
  if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("scale a must be positive");
  if (!pi.allFinite() || !beta_star.allFinite() || !gamma_star.allFinite()) {
    throw InvalidArgument("non-finite parameter");
  }
  if (pi.minCoeff() < -tol || std::abs(pi.sum() - 1.0) > tol) {
    throw InvalidArgument("pi is not a probability vector");
  }
  for (Index k = 0; k < K; ++k) {
    if (beta_star.col(k).minCoeff() < -tol || std::abs(beta_star.col(k).sum() - 1.0) > tol) {
      throw InvalidArgument("beta*_" + std::to_string(k + 1) + " is not a probability vector");
    }
    if (gamma_star.col(k).minCoeff() < -tol || std::abs(gamma_star.col(k).sum() - 1.0) > tol) {
      throw InvalidArgument("gamma*_" + std::to_string(k + 1) + " is not a probability vector");
    }
  }
}

VectorXd AlphaLayout::flatten(const NormalizedNmf& p) const {
  VectorXd alpha(dim());
  alpha(a()) = p.a;
  for (Index k = 0; k < K; ++k) {
    alpha(pi(k)) = p.pi(k);
    alpha.segment(beta(k, 0), n) = p.beta_star.col(k);
    alpha.segment(gamma(k, 0), m) = p.gamma_star.col(k);
  }
  return alpha;
}

NormalizedNmf AlphaLayout::unflatten(const VectorXd& alpha) const {
  if (alpha.size() != dim()) throw InvalidArgument("alpha has the wrong dimension");
  NormalizedNmf p;
  p.a = alpha(a());
  p.pi.resize(K);
  p.beta_star.resize(n, K);
  p.gamma_star.resize(m, K);
  for (Index k = 0; k < K; ++k) {
    p.pi(k) = alpha(pi(k));
    p.beta_star.col(k) = alpha.segment(beta(k, 0), n);
    p.gamma_star.col(k) = alpha.segment(gamma(k, 0), m);
  }
  return p;
}

MatrixXd compose_raw(const Nmf& nmf) { return nmf.B * nmf.C.transpose(); }

NonNegMatrix compose(const Nmf& nmf) {
  nmf.validate();
  MatrixXd A = compose_raw(nmf);
  // Products of clamped-at-zero factors can only be nonnegative.
  return NonNegMatrix(A.cwiseMax(0.0));
}

MatrixXd compose_alpha(const NormalizedNmf& p) {
  MatrixXd scaled = p.beta_star * p.pi.asDiagonal();
  return p.a * scaled * p.gamma_star.transpose();
}

NonNegMatrix compose(const NormalizedNmf& p) {
  return NonNegMatrix(compose_alpha(p).cwiseMax(0.0));
}

NormalizedNmf normalize(const Nmf& nmf) {
  nmf.validate();
  const Index K = nmf.rank();
  VectorXd bsum = nmf.B.colwise().sum().transpose();
  VectorXd csum = nmf.C.colwise().sum().transpose();
  for (Index k = 0; k < K; ++k) {
    if (!(bsum(k) > 0.0) || !(csum(k) > 0.0)) {
      throw ZeroColumn("column " + std::to_string(k + 1) + " of " +
                       (bsum(k) > 0.0 ? "C" : "B") + " sums to zero");
    }
  }
  NormalizedNmf p;
  p.beta_star.resize(nmf.rows(), K);
  p.gamma_star.resize(nmf.cols(), K);
  VectorXd mass = bsum.cwiseProduct(csum);
  p.a = mass.sum();
  p.pi = to_unit_mass(mass);
  for (Index k = 0; k < K; ++k) {
    p.beta_star.col(k) = to_unit_mass(nmf.B.col(k).cwiseMax(0.0));
    p.gamma_star.col(k) = to_unit_mass(nmf.C.col(k).cwiseMax(0.0));
  }
  return p;
}

Nmf denormalize(const NormalizedNmf& p) {
  Nmf out;
  out.B = p.beta_star * (p.a * p.pi).asDiagonal();
  out.C = p.gamma_star;
  return out;
}

Nmf balance_columns(const Nmf& nmf) {
  Nmf out = nmf;
  for (Index k = 0; k < nmf.rank(); ++k) {
    const double bs = nmf.B.col(k).sum();
    const double cs = nmf.C.col(k).sum();
    if (bs > 0.0 && cs > 0.0) {
      const double s = std::sqrt(cs / bs);
      out.B.col(k) *= s;
      out.C.col(k) /= s;
    }
  }
  return out;
}

NormalizedNmf sort_by_weight(const NormalizedNmf& p) {
  std::vector<Index> order(static_cast<std::size_t>(p.rank()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index x, Index y) { return p.pi(x) > p.pi(y); });
  NormalizedNmf out = p;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto src = order[k];
    out.pi(static_cast<Index>(k)) = p.pi(src);
    out.beta_star.col(static_cast<Index>(k)) = p.beta_star.col(src);
    out.gamma_star.col(static_cast<Index>(k)) = p.gamma_star.col(src);
  }
  return out;
}

A3Diagnostic check_assumption_a3(const Nmf& nmf, double tol) {
  A3Diagnostic d;
  d.min_singular_B = min_singular_value(nmf.B);
  d.min_singular_C = min_singular_value(nmf.C);
  d.pass = d.min_singular_B > tol && d.min_singular_C > tol;
  return d;
}

}  // namespace netnmf
