#include "netnmf/infer.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>
#include <sstream>

#include "netnmf/derivatives.hpp"
#include "netnmf/identset.hpp"
#include "netnmf/qp.hpp"

namespace netnmf {

namespace {

// Orthonormal basis of the column span of D.
MatrixXd span_basis(const MatrixXd& D) {
  if (D.cols() == 0) return MatrixXd(D.rows(), 0);
  Eigen::JacobiSVD<MatrixXd> svd(D, Eigen::ComputeThinU);
  const VectorXd& s = svd.singularValues();
  Index r = 0;
  while (r < s.size() && s(r) > 1e-12 * s(0)) ++r;
  return svd.matrixU().leftCols(r);
}

MatrixXd projector(const MatrixXd& D) {
  const MatrixXd U = span_basis(D);
  return U * U.transpose();
}

MatrixXd symmetrize(const MatrixXd& M) { return 0.5 * (M + M.transpose()); }

// d g~ / d q at q = 0 for the anchor alpha, by central differences.
VectorXd criterion_q_gradient(CriterionKind kind, const NormalizedNmf& anchor, Index dq, double h) {
  VectorXd g(dq);
  VectorXd q = VectorXd::Zero(dq);
  for (Index l = 0; l < dq; ++l) {
    q(l) = h;
    const double fp = criterion_tilde(kind, anchor, q);
    q(l) = -h;
    const double fm = criterion_tilde(kind, anchor, q);
    q(l) = 0.0;
    g(l) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Columns: d/d alpha of (d g~/d q(0, alpha)) . v for each column v of V.
MatrixXd cross_derivatives(CriterionKind kind, const NormalizedNmf& alpha, const MatrixXd& V, double h) {
  const AlphaLayout lay = AlphaLayout::of(alpha);
  const Index dq = V.rows();
  const VectorXd x = lay.flatten(alpha);
  MatrixXd out(lay.dim(), V.cols());
  VectorXd xp = x;
  for (Index j = 0; j < lay.dim(); ++j) {
    const double step = h * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + step;
    const VectorXd gp = criterion_q_gradient(kind, lay.unflatten(xp), dq, h);
    xp(j) = x(j) - step;
    const VectorXd gm = criterion_q_gradient(kind, lay.unflatten(xp), dq, h);
    xp(j) = x(j);
    out.row(j) = ((gp - gm) / (2.0 * step)).transpose() * V;
  }
  return out;
}

}  // namespace

MatrixXd InfoBlocks::D() const {
  MatrixXd out(D1.rows(), D1.cols() + D2.cols());
  out << D1, D2;
  return out;
}

MatrixXd identification_restrictions(const NormalizedNmf& alpha, const InfoOptions& options, bool& boundary,
                                     std::vector<std::string>& notes) {
  const AlphaLayout lay = AlphaLayout::of(alpha);
  const Index K = lay.K;
  boundary = false;
  if (K == 1) return MatrixXd(lay.dim(), 0);
  const Index dq = QTransform::q_dim(K);
  const CriterionOptimum opt = criterion_opt_q(options.criterion, alpha);
  boundary = opt.boundary;
  if (opt.q.lpNorm<Eigen::Infinity>() > 1e-6) {
    std::ostringstream ss;
    ss << "criterion optimizer at alpha_hat is q = (" << opt.q.transpose()
       << "), not 0: alpha_hat is not a benchmark fixed point";
    notes.push_back(ss.str());
  }
  if (!boundary) return cross_derivatives(options.criterion.kind, alpha, MatrixXd::Identity(dq, dq), options.fd_step);
  if (options.boundary == BoundaryPolicy::Refuse) return MatrixXd(lay.dim(), 0);

  // Active admissibility constraints at q = 0 are zero entries of B and C.
  const Nmf seed = denormalize(alpha);
  const double scale = 1.0 + std::max(seed.B.maxCoeff(), seed.C.maxCoeff());
  const VectorXd c0 = admissibility_constraints(seed, VectorXd::Zero(dq));
  const MatrixXd Jc = opt::finite_difference_jacobian(
      [&](const VectorXd& q) { return admissibility_constraints(seed, q); }, VectorXd::Zero(dq), 1e-7);
  const Index nB = seed.B.size();
  const Index nC = seed.C.size();
  std::vector<Index> chosen;
  MatrixXd rows(0, dq);
  MatrixXd units(lay.dim(), 0);
  for (Index r = 0; r < nB + nC; ++r) {
    if (c0(r) > 1e-9 * scale || Jc.row(r).norm() <= 1e-12) continue;
    MatrixXd trial(rows.rows() + 1, dq);
    trial << rows, Jc.row(r);
    Eigen::FullPivLU<MatrixXd> lu(trial);
    lu.setThreshold(1e-10);
    if (lu.rank() <= rows.rows()) continue;
    rows = trial;
    chosen.push_back(r);
    VectorXd e = VectorXd::Zero(lay.dim());
    if (r < nB) {
      const Index i = r % seed.B.rows(), k = r / seed.B.rows();
      e(lay.beta(k, i)) = 1.0;
    } else {
      const Index j = (r - nB) % seed.C.rows(), k = (r - nB) / seed.C.rows();
      e(lay.gamma(k, j)) = 1.0;
    }
    units.conservativeResize(Eigen::NoChange, units.cols() + 1);
    units.col(units.cols() - 1) = e;
    if (rows.rows() == dq) break;
  }
  MatrixXd free_dirs;
  if (rows.rows() == 0) {
    free_dirs = MatrixXd::Identity(dq, dq);
  } else {
    Eigen::FullPivLU<MatrixXd> lu(rows);
    lu.setThreshold(1e-10);
    free_dirs = rows.rows() < dq ? MatrixXd(lu.kernel()) : MatrixXd(dq, 0);
  }
  std::ostringstream ss;
  ss << "boundary benchmark: " << chosen.size() << " active admissibility constraint(s) linearized, "
     << free_dirs.cols() << " free criterion direction(s)";
  notes.push_back(ss.str());
  MatrixXd out(lay.dim(), units.cols() + free_dirs.cols());
  out.leftCols(units.cols()) = units;
  if (free_dirs.cols()) {
    out.rightCols(free_dirs.cols()) = cross_derivatives(options.criterion.kind, alpha, free_dirs, options.fd_step);
  }
  return out;
}

InfoBlocks info_matrices(const Likelihood& lik, const NormalizedNmf& alpha_hat, const InfoOptions& options) {
  alpha_hat.validate(1e-8);
  const AlphaLayout lay = AlphaLayout::of(alpha_hat);
  InfoBlocks b;
  b.K = lay.K;
  b.dim_q = QTransform::q_dim(lay.K);
  b.periods = lik.periods();
  b.pi_row_vacuous = lay.K == 1;
  const double T = static_cast<double>(std::max<Index>(1, b.periods));

  const AlphaDerivatives der = alpha_derivatives(lik, alpha_hat, true, true);
  b.J0 = symmetrize(-der.hessian / T);
  b.Jscore = symmetrize(der.period_scores * der.period_scores.transpose() / T);

  b.D1 = MatrixXd::Zero(lay.dim(), 1 + 2 * lay.K);
  for (Index k = 0; k < lay.K; ++k) {
    b.D1(lay.pi(k), 0) = 1.0;
    for (Index i = 0; i < lay.n; ++i) b.D1(lay.beta(k, i), 1 + k) = 1.0;
    for (Index j = 0; j < lay.m; ++j) b.D1(lay.gamma(k, j), 1 + lay.K + k) = 1.0;
  }
  if (b.pi_row_vacuous) b.notes.push_back("K = 1: the pi column of D1 is a vacuous restriction (pi = 1)");

  bool boundary = false;
  b.D2 = identification_restrictions(alpha_hat, options, boundary, b.notes);
  b.boundary = boundary;
  if (boundary && options.boundary == BoundaryPolicy::Refuse) {
    throw BoundaryBenchmark(
        "benchmark lies on the boundary of the identified set; asymptotic normality does not apply "
        "(use the active-constraint policy to linearize the binding constraints)");
  }
  return b;
}

InfoBlocks info_matrices(const ModelSpec& spec, const Trajectory& traj, const NormalizedNmf& alpha_hat,
                         const InfoOptions& options) {
  return info_matrices(Likelihood::build(spec, traj), alpha_hat, options);
}

RankDiagnostic check_rank_condition(const InfoBlocks& blocks, double rel_tol) {
  const Index dim = blocks.J0.rows();
  RankDiagnostic d;
  d.expected = dim - blocks.dim_q - 1 - 2 * blocks.K;
  const MatrixXd M = (MatrixXd::Identity(dim, dim) - projector(blocks.D())) * blocks.J0;
  Eigen::JacobiSVD<MatrixXd> svd(M);
  d.singular_values = svd.singularValues();
  const double smax = d.singular_values.size() ? d.singular_values(0) : 0.0;
  d.threshold = rel_tol * smax;
  while (d.rank < d.singular_values.size() && d.singular_values(d.rank) > d.threshold) ++d.rank;
  if (d.rank == 0) {
    d.gap = 0.0;
  } else if (d.rank < d.singular_values.size()) {
    const double dropped = d.singular_values(d.rank);
    d.gap = dropped > 0.0 ? d.singular_values(d.rank - 1) / dropped : std::numeric_limits<double>::infinity();
  } else {
    d.gap = std::numeric_limits<double>::infinity();
  }
  d.pass = d.rank == d.expected;
  return d;
}

AsymptoticVariance bordered_variance(const InfoBlocks& blocks) {
  const Index dim = blocks.J0.rows();
  const MatrixXd D = blocks.D();
  const Index nd = D.cols();
  MatrixXd bordered = MatrixXd::Zero(dim + nd, dim + nd);
  bordered.topLeftCorner(dim, dim) = blocks.J0;
  bordered.topRightCorner(dim, nd) = D;
  bordered.bottomLeftCorner(nd, dim) = D.transpose();
  Eigen::FullPivLU<MatrixXd> lu(bordered);
  lu.setThreshold(1e-12);
  if (lu.rank() < bordered.rows()) {
    throw SingularBordered("bordered information matrix is singular (rank " + std::to_string(lu.rank()) +
                               " of " + std::to_string(bordered.rows()) + ")",
                           static_cast<int>(lu.rank()), static_cast<int>(bordered.rows()));
  }
  const MatrixXd inv = lu.inverse();
  const MatrixXd J11 = symmetrize(inv.topLeftCorner(dim, dim));

  AsymptoticVariance v;
  v.periods = blocks.periods;
  v.V_alpha = symmetrize(J11 * blocks.Jscore * J11);
  v.V_alpha_equality = J11;

  // Projector route: J0^11 = [(I-P) J0 (I-P) + P]^{-1} (I - P).
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  const MatrixXd P = projector(D);
  const MatrixXd N = (I - P) * blocks.J0 * (I - P) + P;
  const MatrixXd Ninv = N.fullPivLu().inverse();
  const MatrixXd W = Ninv * (I - P);
  const MatrixXd V2 = symmetrize(W * blocks.Jscore * W.transpose());
  const MatrixXd Veq2 = symmetrize(Ninv * (I - P) * blocks.J0 * (I - P) * Ninv);
  const double scale = std::max(1.0, v.V_alpha.cwiseAbs().maxCoeff());
  const double scale_eq = std::max(1.0, J11.cwiseAbs().maxCoeff());
  v.route_discrepancy = std::max((V2 - v.V_alpha).cwiseAbs().maxCoeff() / scale,
                                 (Veq2 - J11).cwiseAbs().maxCoeff() / scale_eq);
  if (!(v.route_discrepancy < 1e-8)) {
    throw NumericalError("bordered and projector variance routes disagree (relative gap " +
                         std::to_string(v.route_discrepancy) + ")");
  }
  const double T = static_cast<double>(std::max<Index>(1, blocks.periods));
  v.se_alpha = (v.V_alpha.diagonal().cwiseMax(0.0) / T).cwiseSqrt();
  return v;
}

AsymptoticVariance variance_of_A(const NormalizedNmf& alpha_hat, const AsymptoticVariance& v) {
  AsymptoticVariance out = v;
  const MatrixXd G = compose_jacobian(alpha_hat);
  out.V_A = symmetrize(G * v.V_alpha * G.transpose());
  if (v.V_alpha_equality.size()) out.V_A_equality = symmetrize(G * v.V_alpha_equality * G.transpose());
  const Index n = alpha_hat.rows(), m = alpha_hat.cols();
  const double T = static_cast<double>(std::max<Index>(1, v.periods));
  out.se_A.resize(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) out.se_A(i, j) = std::sqrt(std::max(0.0, out.V_A(i + n * j, i + n * j)) / T);
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(out.V_A);
  const VectorXd ev = es.eigenvalues().cwiseAbs();
  const double emax = ev.size() ? ev.maxCoeff() : 0.0;
  out.rank_V_A = 0;
  for (Index k = 0; k < ev.size(); ++k) {
    if (ev(k) > 1e-8 * emax) ++out.rank_V_A;
  }
  return out;
}

std::string to_string(BoundStatistic s) {
  switch (s) {
    case BoundStatistic::Entropy:
      return "entropy";
    case BoundStatistic::DetB:
      return "detB";
    case BoundStatistic::DetC:
      return "detC";
    case BoundStatistic::Q12:
      return "q12";
    case BoundStatistic::Q21:
      return "q21";
  }
  return "q12";
}

BoundStatistic bound_statistic_from_string(const std::string& name) {
  std::string s;
  for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "entropy") return BoundStatistic::Entropy;
  if (s == "detb") return BoundStatistic::DetB;
  if (s == "detc") return BoundStatistic::DetC;
  if (s == "q12") return BoundStatistic::Q12;
  if (s == "q21") return BoundStatistic::Q21;
  throw InvalidArgument("unknown bound statistic '" + name + "'");
}

std::pair<double, double> set_bounds(BoundStatistic stat, const NormalizedNmf& p) {
  if (stat == BoundStatistic::Q12 || stat == BoundStatistic::Q21) {
    if (p.rank() != 2) throw WrongRank("q bounds are defined for K = 2 only");
    const K2Bounds box = k2_bounds(denormalize(p));
    return stat == BoundStatistic::Q12 ? std::make_pair(box.q12_lo, box.q12_hi)
                                       : std::make_pair(box.q21_lo, box.q21_hi);
  }
  const CriterionKind kind = stat == BoundStatistic::Entropy ? CriterionKind::Entropy
                             : stat == BoundStatistic::DetB  ? CriterionKind::DetB
                                                             : CriterionKind::DetC;
  const double lo = criterion_opt_q({kind, OptDirection::Minimize}, p).value;
  const double hi = criterion_opt_q({kind, OptDirection::Maximize}, p).value;
  return {lo, hi};
}

double percentile(std::vector<double> values, double level) {
  if (values.empty()) throw InvalidArgument("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = std::clamp(level, 0.0, 1.0) * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(values.size() - 1, lo + 1);
  const double w = pos - static_cast<double>(lo);
  return (1.0 - w) * values[lo] + w * values[hi];
}

BoundDistribution bound_distribution(const NormalizedNmf& alpha_hat, const MatrixXd& V_alpha, const MatrixXd& D,
                                     Index periods, BoundStatistic stat, int n_sims, std::uint64_t seed,
                                     const std::vector<double>& levels) {
  if (n_sims < 1) throw InvalidArgument("n_sims must be positive");
  const AlphaLayout lay = AlphaLayout::of(alpha_hat);
  const Index dim = lay.dim();
  if (V_alpha.rows() != dim || V_alpha.cols() != dim) throw InvalidArgument("V_alpha has the wrong size");
  BoundDistribution out;
  out.statistic = stat;
  out.requested = n_sims;
  out.levels = levels;
  std::tie(out.point_lower, out.point_upper) = set_bounds(stat, alpha_hat);

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(V_alpha));
  const MatrixXd root = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
  const MatrixXd I = MatrixXd::Identity(dim, dim);
  const MatrixXd tangent = D.cols() ? MatrixXd(I - projector(D)) : I;
  const double T = static_cast<double>(std::max<Index>(1, periods));
  const VectorXd center = lay.flatten(alpha_hat);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd z(dim);
  for (int s = 0; s < n_sims; ++s) {
    for (Index k = 0; k < dim; ++k) z(k) = normal(rng);
    VectorXd x = center + tangent * (root * z) / std::sqrt(T);
    for (Index k = 0; k < dim; ++k) {
      if (std::abs(x(k)) < 1e-12) x(k) = 0.0;
    }
    if (x.minCoeff() < 0.0 || !(x(lay.a()) > 0.0)) {
      ++out.rejected;
      continue;
    }
    NormalizedNmf p = lay.unflatten(x);
    bool ok = p.pi.sum() > 0.0;
    p.pi /= p.pi.sum();
    for (Index k = 0; k < lay.K && ok; ++k) {
      const double sb = p.beta_star.col(k).sum(), sg = p.gamma_star.col(k).sum();
      ok = sb > 0.0 && sg > 0.0;
      if (ok) {
        p.beta_star.col(k) /= sb;
        p.gamma_star.col(k) /= sg;
      }
    }
    if (!ok) {
      ++out.rejected;
      continue;
    }
    try {
      const auto [lo, hi] = set_bounds(stat, p);
      out.lower.push_back(lo);
      out.upper.push_back(hi);
    } catch (const NumericalError&) {
      ++out.rejected;
    }
  }
  if (out.rejected > 0.99 * n_sims) {
    throw TooFewValidDraws(std::to_string(out.rejected) + " of " + std::to_string(n_sims) + " draws rejected");
  }
  for (double level : levels) {
    out.lower_percentiles.push_back(percentile(out.lower, level));
    out.upper_percentiles.push_back(percentile(out.upper, level));
  }
  return out;
}

}  // namespace netnmf
