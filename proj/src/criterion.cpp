#include "netnmf/criterion.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>

#include "netnmf/identset.hpp"
#include "netnmf/qp.hpp"

namespace netnmf {

namespace {

double gram_det(const MatrixXd& M) { return (M.transpose() * M).determinant(); }

double entropy_concentration(const VectorXd& pi) {
  double s = 0.0;
  for (Index k = 0; k < pi.size(); ++k) {
    if (pi(k) > 0.0) s += pi(k) * std::log(pi(k));
  }
  return s;
}

struct Box1 {
  double lo;
  double hi;
};

// Finite search interval; unbounded sides are replaced by a far point.
Box1 finite_side(double lo, double hi, double far) {
  return {std::isfinite(lo) ? lo : -far, std::isfinite(hi) ? hi : far};
}

std::vector<Index> active_rows(const Nmf& seed, const VectorXd& q) {
  const double scale = 1.0 + std::max(seed.B.cwiseAbs().maxCoeff(), seed.C.cwiseAbs().maxCoeff());
  const VectorXd c = admissibility_constraints(seed, q);
  std::vector<Index> rows;
  for (Index i = 0; i < c.size(); ++i) {
    if (c(i) <= 1e-9 * scale) rows.push_back(i);
  }
  return rows;
}

CriterionOptimum optimize_k2(const Criterion& c, const NormalizedNmf& anchor) {
  const Nmf seed = denormalize(anchor);
  const K2Bounds box = k2_bounds(seed);
  const double sign = c.direction == OptDirection::Maximize ? -1.0 : 1.0;
  auto f = [&](double q12, double q21) {
    VectorXd q(2);
    q << q21, q12;
    try {
      const double v = sign * criterion_tilde(c.kind, anchor, q);
      return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  double finite_max = 1.0;
  for (double v : {box.q12_lo, box.q12_hi, box.q21_lo, box.q21_hi}) {
    if (std::isfinite(v)) finite_max = std::max(finite_max, std::abs(v));
  }
  const Box1 s12 = finite_side(box.q12_lo, box.q12_hi, 1e3 * finite_max);
  const Box1 s21 = finite_side(box.q21_lo, box.q21_hi, 1e3 * finite_max);
  const double w12 = s12.hi - s12.lo;
  const double w21 = s21.hi - s21.lo;

  const double f0 = f(0.0, 0.0);
  double b12 = 0.0, b21 = 0.0, best = f0;
  constexpr int kGrid = 32;
  for (int i = 0; i <= kGrid; ++i) {
    const double q12 = i == kGrid ? s12.hi : s12.lo + w12 * i / kGrid;
    for (int j = 0; j <= kGrid; ++j) {
      const double q21 = j == kGrid ? s21.hi : s21.lo + w21 * j / kGrid;
      const double v = f(q12, q21);
      if (v < best - 1e-14 * (1.0 + std::abs(best))) {
        best = v;
        b12 = q12;
        b21 = q21;
      }
    }
  }

  // Compass refinement inside the box.
  double h12 = w12 / kGrid, h21 = w21 / kGrid;
  const double tol12 = 1e-14 * (1.0 + w12), tol21 = 1e-14 * (1.0 + w21);
  int iterations = 0;
  while ((h12 > tol12 || h21 > tol21) && iterations < 20000) {
    ++iterations;
    bool moved = false;
    const double cand[4][2] = {{b12 + h12, b21}, {b12 - h12, b21}, {b12, b21 + h21}, {b12, b21 - h21}};
    for (const auto& p : cand) {
      const double q12 = std::clamp(p[0], s12.lo, s12.hi);
      const double q21 = std::clamp(p[1], s21.lo, s21.hi);
      const double v = f(q12, q21);
      if (v < best) {
        best = v;
        b12 = q12;
        b21 = q21;
        moved = true;
        break;
      }
    }
    if (!moved) {
      h12 *= 0.5;
      h21 *= 0.5;
    }
  }
  if (f0 <= best + 1e-13 * (1.0 + std::abs(best))) {
    b12 = 0.0;
    b21 = 0.0;
    best = f0;
  }

  CriterionOptimum out;
  out.q.resize(2);
  out.q << b21, b12;
  out.value = sign * best;
  out.iterations = iterations;
  auto near = [](double x, double bound, double w) {
    return std::isfinite(bound) && std::abs(x - bound) <= 1e-9 * (1.0 + w);
  };
  out.boundary = near(b12, box.q12_lo, w12) || near(b12, box.q12_hi, w12) ||
                 near(b21, box.q21_lo, w21) || near(b21, box.q21_hi, w21);
  out.active = active_rows(seed, out.q);
  return out;
}

}  // namespace

std::string to_string(CriterionKind kind) {
  switch (kind) {
    case CriterionKind::Entropy:
      return "entropy";
    case CriterionKind::DetB:
      return "detB";
    case CriterionKind::DetC:
      return "detC";
  }
  return "entropy";
}

CriterionKind criterion_from_string(const std::string& name) {
  std::string s;
  for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "entropy") return CriterionKind::Entropy;
  if (s == "detb") return CriterionKind::DetB;
  if (s == "detc") return CriterionKind::DetC;
  throw InvalidArgument("unknown criterion '" + name + "' (expected entropy, detB or detC)");
}

double criterion_eval(CriterionKind kind, const NormalizedNmf& p) {
  switch (kind) {
    case CriterionKind::Entropy:
      return entropy_concentration(p.pi);
    case CriterionKind::DetB:
      return gram_det(p.beta_star);
    case CriterionKind::DetC:
      return gram_det(p.gamma_star);
  }
  return 0.0;
}

NormalizedNmf transform_anchor(const NormalizedNmf& anchor, const VectorXd& q) {
  const Index K = anchor.rank();
  const QTransform t(K, q);
  const MatrixXd B = anchor.beta_star * (anchor.a * anchor.pi).asDiagonal();
  const MatrixXd Bt = B * t.matrix();
  const MatrixXd Ct = anchor.gamma_star * t.inverse_transpose();
  const VectorXd bs = Bt.colwise().sum().transpose();
  const VectorXd cs = Ct.colwise().sum().transpose();
  if ((bs.array() == 0.0).any() || (cs.array() == 0.0).any()) {
    throw NotAdmissible("transformed column has zero mass");
  }
  NormalizedNmf out;
  const VectorXd mass = bs.cwiseProduct(cs);
  out.a = mass.sum();
  out.pi = mass / out.a;
  out.beta_star = Bt * bs.cwiseInverse().asDiagonal();
  out.gamma_star = Ct * cs.cwiseInverse().asDiagonal();
  return out;
}

double criterion_tilde(CriterionKind kind, const NormalizedNmf& anchor, const VectorXd& q) {
  return criterion_eval(kind, transform_anchor(anchor, q));
}

CriterionOptimum criterion_opt_q(const Criterion& c, const NormalizedNmf& anchor, int max_iter) {
  const Index K = anchor.rank();
  if (K == 1) {
    CriterionOptimum out;
    out.q = VectorXd(0);
    out.value = criterion_eval(c, anchor);
    return out;
  }
  if (K == 2) return optimize_k2(c, anchor);

  const Nmf seed = denormalize(anchor);
  const double sign = c.direction == OptDirection::Maximize ? -1.0 : 1.0;
  opt::NlpProblem problem;
  problem.objective = [&](const VectorXd& q) { return sign * criterion_tilde(c.kind, anchor, q); };
  problem.constraints = [&](const VectorXd& q) { return admissibility_constraints(seed, q); };
  opt::SqpOptions options;
  options.max_iter = max_iter;
  options.fd_step = 1e-6;
  const auto res = opt::minimize_sqp(problem, VectorXd::Zero(QTransform::q_dim(K)), options);
  if (!res.converged) {
    throw IterationLimit("criterion optimization did not converge in " + std::to_string(max_iter) +
                         " iterations");
  }
  CriterionOptimum out;
  out.q = res.x;
  out.value = sign * res.value;
  out.iterations = res.iterations;
  out.active = active_rows(seed, out.q);
  out.boundary = !out.active.empty();
  return out;
}

}  // namespace netnmf
