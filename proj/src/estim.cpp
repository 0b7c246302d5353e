#include "netnmf/estim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "netnmf/derivatives.hpp"
#include "netnmf/identset.hpp"
#include "netnmf/newton.hpp"

namespace netnmf {

namespace {

double relative_gap(double L) { return std::max(1.0, std::abs(L)); }

double value_of(const Likelihood& lik, const Nmf& f) { return lik.value(compose_raw(f)); }

Nmf b_step(const Likelihood& lik, const Nmf& cur, int iters) {
  Nmf out = cur;
  opt::NewtonOptions options;
  options.max_iter = iters;
  VectorXd d1, d2;
  for (Index i = 0; i < lik.n(); ++i) {
    const auto& r = lik.row(i);
    if (r.u.size() == 0) continue;
    const MatrixXd X = r.Z.transpose() * cur.C;
    opt::OrthantProblem prob;
    prob.value = [&](const VectorXd& b) { return lik.row_value(i, r.offset + X * b); };
    prob.derivatives = [&](const VectorXd& b, VectorXd& g, MatrixXd& H) {
      const VectorXd theta = r.offset + X * b;
      Likelihood::term_derivatives(theta, r.u, r.v, d1, d2);
      g = X.transpose() * d1;
      H = X.transpose() * d2.asDiagonal() * X;
    };
    out.B.row(i) = opt::projected_newton_maximize(prob, cur.B.row(i).transpose(), options).x.transpose();
  }
  return out;
}

Nmf c_step(const Likelihood& lik, const Nmf& cur, int iters) {
  const Index m = cur.cols();
  const Index K = cur.rank();
  opt::NewtonOptions options;
  options.max_iter = iters;
  VectorXd d1, d2;
  opt::OrthantProblem prob;
  prob.value = [&](const VectorXd& x) {
    const Eigen::Map<const MatrixXd> C(x.data(), m, K);
    double s = 0.0;
    for (Index i = 0; i < lik.n(); ++i) {
      const auto& r = lik.row(i);
      if (r.u.size() == 0) continue;
      s += lik.row_value(i, r.offset + r.Z.transpose() * (C * cur.B.row(i).transpose()));
      if (!std::isfinite(s)) return s;
    }
    return s;
  };
  prob.derivatives = [&](const VectorXd& x, VectorXd& g, MatrixXd& H) {
    const Eigen::Map<const MatrixXd> C(x.data(), m, K);
    g = VectorXd::Zero(m * K);
    H = MatrixXd::Zero(m * K, m * K);
    for (Index i = 0; i < lik.n(); ++i) {
      const auto& r = lik.row(i);
      if (r.u.size() == 0) continue;
      const VectorXd b = cur.B.row(i).transpose();
      const VectorXd theta = r.offset + r.Z.transpose() * (C * b);
      Likelihood::term_derivatives(theta, r.u, r.v, d1, d2);
      const VectorXd zg = r.Z * d1;
      const MatrixXd S = r.Z * d2.asDiagonal() * r.Z.transpose();
      for (Index k = 0; k < K; ++k) {
        g.segment(k * m, m) += b(k) * zg;
        for (Index l = 0; l < K; ++l) H.block(k * m, l * m, m, m) += (b(k) * b(l)) * S;
      }
    }
  };
  const VectorXd x0 = Eigen::Map<const VectorXd>(cur.C.data(), m * K);
  const auto rep = opt::projected_newton_maximize(prob, x0, options);
  Nmf out = cur;
  out.C = Eigen::Map<const MatrixXd>(rep.x.data(), m, K);
  return out;
}

Nmf start_factors(const Likelihood& lik, const FitConfig& cfg) {
  if (!cfg.init) return initial_factors(lik, cfg.K, cfg.seed);
  const NormalizedNmf& p = *cfg.init;
  if (p.rank() != cfg.K) throw WrongRank("initial factorization has the wrong rank");
  if (p.rows() != lik.n() || p.cols() != lik.m()) throw InvalidArgument("initial factorization has the wrong shape");
  p.validate();
  return balance_columns(denormalize(p));
}

bool has_dead_column(const Nmf& f) {
  for (Index k = 0; k < f.rank(); ++k) {
    if (!(f.B.col(k).sum() > 0.0) || !(f.C.col(k).sum() > 0.0)) return true;
  }
  return false;
}

// Moves the free column of a vanished component onto the cell with the
// largest positive likelihood gradient. The likelihood is unchanged.
Nmf revive_dead_columns(const Likelihood& lik, const Nmf& f) {
  if (!has_dead_column(f)) return f;
  Nmf out = f;
  const MatrixXd G = lik.gradient(compose_raw(f));
  Index i_star = 0, j_star = 0;
  const double gmax = G.maxCoeff(&i_star, &j_star);
  if (!(gmax > 0.0)) return out;
  double scale = 0.0;
  int live = 0;
  for (Index k = 0; k < f.rank(); ++k) {
    if (f.B.col(k).sum() > 0.0 && f.C.col(k).sum() > 0.0) {
      scale += f.C.col(k).sum();
      ++live;
    }
  }
  scale = live ? scale / live : 1.0;
  for (Index k = 0; k < f.rank(); ++k) {
    const bool b_dead = !(f.B.col(k).sum() > 0.0);
    const bool c_dead = !(f.C.col(k).sum() > 0.0);
    if (b_dead) {
      out.B.col(k).setZero();
      out.C.col(k) = VectorXd::Unit(f.cols(), j_star) * scale;
    } else if (c_dead) {
      out.C.col(k).setZero();
      out.B.col(k) = VectorXd::Unit(f.rows(), i_star) * f.B.col(k).sum();
    }
  }
  return out;
}

// Empty when a column has vanished (the unit-mass form is undefined there).
std::optional<VectorXd> alpha_vector(const Nmf& f) {
  if (has_dead_column(f)) return std::nullopt;
  const NormalizedNmf p = sort_by_weight(normalize(f));
  return AlphaLayout::of(p).flatten(p);
}

double step_between(const std::optional<VectorXd>& a, const std::optional<VectorXd>& b) {
  if (!a || !b) return kInf;
  return (*a - *b).lpNorm<Eigen::Infinity>();
}

double criterion_of(const Criterion& c, const Nmf& f) {
  if (has_dead_column(f)) return std::numeric_limits<double>::quiet_NaN();
  return criterion_eval(c, normalize(f));
}

NormalizedNmf final_alpha(const Nmf& f) {
  if (has_dead_column(f)) {
    throw NonConvergence("a component vanished: the likelihood is maximized at a lower rank than K");
  }
  return sort_by_weight(normalize(f));
}

}  // namespace

void FitConfig::validate() const {
  if (K < 1) throw InvalidArgument("K must be at least 1");
  if (max_outer_iters < 1 || inner_iters < 1) throw InvalidArgument("iteration budgets must be positive");
  if (!(eps_loglik > 0.0) || !(eps_param > 0.0)) throw InvalidArgument("tolerances must be positive");
  if (iml_warmup < 0 || iml_warmup > max_outer_iters) {
    throw InvalidArgument("iml_warmup must lie between 0 and max_outer_iters");
  }
}

Nmf aml_step(const Likelihood& lik, const Nmf& current, int inner_iters) {
  current.validate();
  if (!std::isfinite(value_of(lik, current))) throw InnerSolverFailure("AML step started outside the domain");
  Nmf after_b = balance_columns(b_step(lik, revive_dead_columns(lik, current), inner_iters));
  return balance_columns(c_step(lik, after_b, inner_iters));
}

Nmf aml_step(const ModelSpec& spec, const Trajectory& traj, const Nmf& current, int inner_iters) {
  return aml_step(Likelihood::build(spec, traj), current, inner_iters);
}

Nmf initial_factors(const Likelihood& lik, Index K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.1, 1.0);
  Nmf f;
  f.B = MatrixXd::NullaryExpr(lik.n(), K, [&]() { return unif(rng); });
  f.C = MatrixXd::NullaryExpr(lik.m(), K, [&]() { return unif(rng); });
  const MatrixXd A0 = compose_raw(f);

  std::vector<VectorXd> lin(static_cast<std::size_t>(lik.n()));
  double su = 0.0, svl = 0.0;
  for (Index i = 0; i < lik.n(); ++i) {
    const auto& r = lik.row(i);
    if (r.u.size() == 0) continue;
    lin[static_cast<std::size_t>(i)] = r.Z.transpose() * A0.row(i).transpose();
    su += r.u.sum();
    svl += r.v.dot(lin[static_cast<std::size_t>(i)]);
  }
  opt::OrthantProblem prob;
  prob.value = [&](const VectorXd& s) {
    double v = 0.0;
    for (Index i = 0; i < lik.n(); ++i) {
      const auto& r = lik.row(i);
      if (r.u.size() == 0) continue;
      v += lik.row_value(i, r.offset + s(0) * lin[static_cast<std::size_t>(i)]);
    }
    return v;
  };
  VectorXd d1, d2;
  prob.derivatives = [&](const VectorXd& s, VectorXd& g, MatrixXd& H) {
    g = VectorXd::Zero(1);
    H = MatrixXd::Zero(1, 1);
    for (Index i = 0; i < lik.n(); ++i) {
      const auto& r = lik.row(i);
      if (r.u.size() == 0) continue;
      const VectorXd& l = lin[static_cast<std::size_t>(i)];
      Likelihood::term_derivatives(r.offset + s(0) * l, r.u, r.v, d1, d2);
      g(0) += d1.dot(l);
      H(0, 0) += d2.dot(l.cwiseProduct(l));
    }
  };
  VectorXd s0 = VectorXd::Constant(1, svl > 0.0 && su > 0.0 ? su / svl : 1.0);
  if (!std::isfinite(prob.value(s0))) {
    throw DomainError("data incompatible with the model: zero intensity with a positive observation");
  }
  opt::NewtonOptions options;
  options.max_iter = 50;
  const double s = opt::projected_newton_maximize(prob, s0, options).x(0);
  if (!(s > 0.0)) throw DomainError("initial scale collapsed to zero");
  f.B *= s;
  return balance_columns(f);
}

VectorXd unit_mass_multipliers(const Likelihood& lik, const NormalizedNmf& p) {
  const AlphaLayout lay = AlphaLayout::of(p);
  const VectorXd s = alpha_derivatives(lik, p, false).score;
  VectorXd lambda = VectorXd::Zero(1 + 2 * lay.K);
  auto block_mean = [&](auto index, Index len, auto value) {
    double sum = 0.0;
    int cnt = 0;
    for (Index j = 0; j < len; ++j) {
      if (value(j) > 1e-12) {
        sum += s(index(j));
        ++cnt;
      }
    }
    return cnt ? sum / cnt : 0.0;
  };
  lambda(0) = block_mean([&](Index k) { return lay.pi(k); }, lay.K, [&](Index k) { return p.pi(k); });
  for (Index k = 0; k < lay.K; ++k) {
    lambda(1 + k) = block_mean([&](Index i) { return lay.beta(k, i); }, lay.n,
                               [&](Index i) { return p.beta_star(i, k); });
    lambda(1 + lay.K + k) = block_mean([&](Index j) { return lay.gamma(k, j); }, lay.m,
                                       [&](Index j) { return p.gamma_star(j, k); });
  }
  return lambda;
}

FitResult fit_aml(const Likelihood& lik, const FitConfig& cfg) {
  cfg.validate();
  FitResult res;
  res.method = "aml";
  Nmf cur = start_factors(lik, cfg);
  double L = value_of(lik, cur);
  if (!std::isfinite(L)) throw DomainError("likelihood undefined at the starting point");
  res.loglik_path.push_back(L);
  auto alpha_prev = alpha_vector(cur);
  for (int p = 1; p <= cfg.max_outer_iters; ++p) {
    cur = aml_step(lik, cur, cfg.inner_iters);
    const double L_new = value_of(lik, cur);
    const auto alpha = alpha_vector(cur);
    res.loglik_path.push_back(L_new);
    res.step_norms.push_back(step_between(alpha, alpha_prev));
    res.criterion_path.push_back(criterion_of(cfg.criterion, cur));
    res.iterations = p;
    alpha_prev = alpha;
    const double gain = L_new - L;
    L = L_new;
    if (alpha && gain < cfg.eps_loglik * relative_gap(L_new)) {
      res.converged = true;
      break;
    }
  }
  res.alpha_hat = final_alpha(cur);
  res.loglik = L;
  res.multipliers = unit_mass_multipliers(lik, res.alpha_hat);
  return res;
}

FitResult fit_ml_k1(const Likelihood& lik, const FitConfig& cfg) {
  cfg.validate();
  if (cfg.K != 1) throw WrongRank("constrained ML with K = 1 requested with K = " + std::to_string(cfg.K));
  FitResult res;
  res.method = "ml1";

  NormalizedNmf p;
  if (cfg.init) {
    p = *cfg.init;
    if (p.rank() != 1 || p.rows() != lik.n() || p.cols() != lik.m()) {
      throw InvalidArgument("initial factorization has the wrong shape");
    }
  } else {
    FitConfig warm = cfg;
    warm.max_outer_iters = std::max(cfg.max_outer_iters, 200);
    warm.iml_warmup = 0;
    warm.eps_loglik = 1e-12;
    p = fit_aml(lik, warm).alpha_hat;
  }
  p.pi = VectorXd::Ones(1);
  const AlphaLayout lay = AlphaLayout::of(p);
  const Index n = lay.n, m = lay.m;
  const double T = std::max<Index>(1, lik.periods());

  // fixed[j] marks beta/gamma coordinates held at their zero bound.
  std::vector<char> fixed(static_cast<std::size_t>(lay.dim()), 0);
  auto is_beta = [&](Index j) { return j >= lay.beta(0, 0) && j < lay.beta(0, 0) + n; };
  for (Index i = 0; i < n; ++i) fixed[static_cast<std::size_t>(lay.beta(0, i))] = p.beta_star(i, 0) <= 0.0;
  for (Index j = 0; j < m; ++j) fixed[static_cast<std::size_t>(lay.gamma(0, j))] = p.gamma_star(j, 0) <= 0.0;

  double L = alpha_loglik(lik, p);
  if (!std::isfinite(L)) throw DomainError("likelihood undefined at the starting point");
  res.loglik_path.push_back(L);
  double lambda_b = 0.0, lambda_g = 0.0;

  for (int iter = 0; iter < cfg.max_outer_iters; ++iter) {
    // Exact unit masses: the scale of beta and gamma moves into a.
    const double sb = p.beta_star.sum(), sg = p.gamma_star.sum();
    p.beta_star /= sb;
    p.gamma_star /= sg;
    p.a *= sb * sg;
    VectorXd alpha = lay.flatten(p);

    const AlphaDerivatives der = alpha_derivatives(lik, p, true);
    const VectorXd& g = der.score;
    auto mean_free = [&](Index first, Index len) {
      double s = 0.0;
      int c = 0;
      for (Index j = first; j < first + len; ++j) {
        if (!fixed[static_cast<std::size_t>(j)]) {
          s += g(j);
          ++c;
        }
      }
      return c ? s / c : 0.0;
    };
    lambda_b = mean_free(lay.beta(0, 0), n);
    lambda_g = mean_free(lay.gamma(0, 0), m);

    // Release bound coordinates whose reduced gradient points inward; hold
    // vanishing coordinates whose reduced gradient points outward.
    bool changed = false;
    const double bmax = p.beta_star.maxCoeff(), gmax = p.gamma_star.maxCoeff();
    for (Index j = lay.beta(0, 0); j < lay.dim(); ++j) {
      const double lam = is_beta(j) ? lambda_b : lambda_g;
      const double scale = is_beta(j) ? bmax : gmax;
      auto& fj = fixed[static_cast<std::size_t>(j)];
      if (fj && g(j) - lam > cfg.eps_param * T) {
        fj = 0;
        alpha(j) = 1e-6 * scale;
        changed = true;
      } else if (!fj && alpha(j) < 1e-10 * scale && g(j) - lam < 0.0) {
        fj = 1;
        alpha(j) = 0.0;
        changed = true;
      }
    }
    if (changed) {
      p = lay.unflatten(alpha);
      p.pi = VectorXd::Ones(1);
      L = alpha_loglik(lik, p);
      continue;
    }

    double resid = std::abs(g(lay.a())) / T;
    for (Index j = lay.beta(0, 0); j < lay.dim(); ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) resid = std::max(resid, std::abs(g(j) - (is_beta(j) ? lambda_b : lambda_g)) / T);
    }

    std::vector<Index> F{lay.a()};
    for (Index j = lay.beta(0, 0); j < lay.dim(); ++j) {
      if (!fixed[static_cast<std::size_t>(j)]) F.push_back(j);
    }
    const auto nf = static_cast<Index>(F.size());
    MatrixXd Hf(nf, nf), D = MatrixXd::Zero(nf, 2);
    VectorXd gf(nf);
    for (Index x = 0; x < nf; ++x) {
      const Index jx = F[static_cast<std::size_t>(x)];
      gf(x) = g(jx);
      if (jx != lay.a()) D(x, is_beta(jx) ? 0 : 1) = 1.0;
      for (Index y = 0; y < nf; ++y) Hf(x, y) = der.hessian(jx, F[static_cast<std::size_t>(y)]);
    }
    Eigen::HouseholderQR<MatrixXd> qr(D);
    const MatrixXd Qfull = qr.householderQ() * MatrixXd::Identity(nf, nf);
    const MatrixXd Nz = Qfull.rightCols(nf - 2);
    const MatrixXd negHr = -(Nz.transpose() * Hf * Nz);
    const VectorXd gr = Nz.transpose() * gf;
    VectorXd y;
    double ridge = 0.0;
    const double hscale = std::max(1e-300, negHr.diagonal().cwiseAbs().maxCoeff());
    for (int attempt = 0; attempt < 30; ++attempt) {
      Eigen::LLT<MatrixXd> llt(negHr + ridge * MatrixXd::Identity(negHr.rows(), negHr.cols()));
      if (llt.info() == Eigen::Success) {
        y = llt.solve(gr);
        break;
      }
      ridge = ridge == 0.0 ? 1e-10 * hscale : ridge * 10.0;
    }
    if (y.size() == 0) throw NonConvergence("reduced Hessian could not be regularized");
    const VectorXd d = Nz * y;
    res.step_norms.push_back(d.lpNorm<Eigen::Infinity>());
    res.iterations = iter + 1;
    if (resid < cfg.eps_param) {
      res.converged = true;
      break;
    }

    double t = 1.0;
    for (Index x = 0; x < nf; ++x) {
      const double ax = alpha(F[static_cast<std::size_t>(x)]);
      if (d(x) < 0.0) t = std::min(t, -0.995 * ax / d(x));
    }
    bool accepted = false;
    for (int h = 0; h <= 40; ++h, t *= 0.5) {
      VectorXd trial = alpha;
      for (Index x = 0; x < nf; ++x) trial(F[static_cast<std::size_t>(x)]) += t * d(x);
      NormalizedNmf q = lay.unflatten(trial);
      q.pi = VectorXd::Ones(1);
      const double Lt = alpha_loglik(lik, q);
      if (std::isfinite(Lt) && Lt >= L - 1e-12 * relative_gap(L)) {
        p = q;
        L = Lt;
        accepted = true;
        break;
      }
    }
    res.loglik_path.push_back(L);
    if (!accepted) break;
  }
  const double sb = p.beta_star.sum(), sg = p.gamma_star.sum();
  p.beta_star /= sb;
  p.gamma_star /= sg;
  p.a *= sb * sg;
  res.alpha_hat = p;
  res.loglik = alpha_loglik(lik, p);
  res.multipliers = VectorXd::Zero(3);
  res.multipliers(1) = lambda_b;
  res.multipliers(2) = lambda_g;
  res.criterion_path.push_back(criterion_eval(cfg.criterion, p));
  return res;
}

FitResult fit_iml(const Likelihood& lik, const FitConfig& cfg) {
  cfg.validate();
  if (cfg.K == 1) return fit_ml_k1(lik, cfg);
  FitResult res;
  res.method = "iml";
  Nmf cur = start_factors(lik, cfg);
  double L = value_of(lik, cur);
  if (!std::isfinite(L)) throw DomainError("likelihood undefined at the starting point");
  res.loglik_path.push_back(L);
  auto alpha_prev = alpha_vector(cur);

  for (int p = 1; p <= cfg.max_outer_iters; ++p) {
    cur = aml_step(lik, cur, cfg.inner_iters);
    double L_new = value_of(lik, cur);
    if (p > cfg.iml_warmup && !has_dead_column(cur)) {
      const NormalizedNmf anchor = normalize(cur);
      const CriterionOptimum opt = criterion_opt_q(cfg.criterion, anchor);
      Nmf moved = apply_q_unchecked(denormalize(anchor), QTransform(cfg.K, opt.q));
      moved.B = moved.B.cwiseMax(0.0);
      moved.C = moved.C.cwiseMax(0.0);
      const NormalizedNmf bench = sort_by_weight(normalize(moved));
      cur = balance_columns(denormalize(bench));
      const double L_moved = value_of(lik, cur);
      res.transform_loglik_change.push_back(std::abs(L_moved - L_new));
      res.q_path.push_back(opt.q);
      res.boundary_optimum = opt.boundary;
      L_new = L_moved;
    }
    const auto alpha = alpha_vector(cur);
    const double step = step_between(alpha, alpha_prev);
    res.loglik_path.push_back(L_new);
    res.step_norms.push_back(step);
    res.criterion_path.push_back(criterion_of(cfg.criterion, cur));
    res.iterations = p;
    alpha_prev = alpha;
    const double gain = L_new - L;
    L = L_new;
    if (p > cfg.iml_warmup && gain < cfg.eps_loglik * relative_gap(L_new) && step < cfg.eps_param) {
      res.converged = true;
      break;
    }
  }
  res.alpha_hat = final_alpha(cur);
  res.loglik = L;
  res.multipliers = unit_mass_multipliers(lik, res.alpha_hat);
  return res;
}

FitResult fit_aml(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg) {
  return fit_aml(Likelihood::build(spec, traj), cfg);
}

FitResult fit_ml_k1(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg) {
  return fit_ml_k1(Likelihood::build(spec, traj), cfg);
}

FitResult fit_iml(const ModelSpec& spec, const Trajectory& traj, const FitConfig& cfg) {
  return fit_iml(Likelihood::build(spec, traj), cfg);
}

}  // namespace netnmf
