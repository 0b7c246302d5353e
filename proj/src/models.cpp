#include "netnmf/models.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <random>

#include <Eigen/Eigenvalues>

#include "netnmf/likelihood.hpp"

namespace netnmf {

namespace {

std::string lower(const std::string& s) {
  std::string out;
  for (char ch : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  return out;
}

bool is_count(double x) { return x >= 0.0 && std::floor(x) == x; }

void require_family_theta(Family f) {
  if (f == Family::MultinomialPanel) {
    throw InvalidArgument("the multinomial panel likelihood is not a function of theta = A y");
  }
}

long long draw_poisson(std::mt19937_64& rng, double mean) {
  if (mean <= 0.0) return 0;
  std::poisson_distribution<long long> dist(mean);
  return dist(rng);
}

VectorXd initial_state(const ModelSpec& spec, const MatrixXd& A) {
  if (spec.family == Family::MultinomialPanel) {
    VectorXd y = VectorXd::Constant(spec.n, static_cast<double>(spec.individuals / spec.n));
    y(0) += static_cast<double>(spec.individuals % spec.n);
    return y;
  }
  if (spec.family == Family::PoissonAR && !spec.transform && spec.intercept.size() &&
      spec.intercept.sum() > 0.0) {
    const MatrixXd I = MatrixXd::Identity(spec.n, spec.n);
    const VectorXd mu = (I - A).partialPivLu().solve(spec.intercept);
    return mu.cwiseMax(0.0).array().round().matrix();
  }
  return VectorXd::Ones(spec.n);
}

}  // namespace

std::string to_string(Family f) {
  switch (f) {
    case Family::PoissonAR:
      return "poisson";
    case Family::ExponentialAR:
      return "exponential";
    case Family::MultinomialPanel:
      return "multinomial";
    case Family::StaticPoissonMatrix:
      return "static";
  }
  return "poisson";
}

Family family_from_string(const std::string& name) {
  const std::string s = lower(name);
  if (s == "poisson" || s == "poissonar") return Family::PoissonAR;
  if (s == "exponential" || s == "exponentialar") return Family::ExponentialAR;
  if (s == "multinomial" || s == "multinomialpanel") return Family::MultinomialPanel;
  if (s == "static" || s == "staticpoissonmatrix") return Family::StaticPoissonMatrix;
  throw InvalidArgument("unknown model family '" + name + "'");
}

void ModelSpec::validate() const {
  if (n < 1 || m < 1) throw InvalidArgument("model dimensions must be positive");
  if (autoregressive() && !transform && n != m) {
    throw InvalidArgument("autoregressive families need a square matrix (n == m)");
  }
  if (family == Family::MultinomialPanel) {
    if (individuals < 1) throw InvalidArgument("multinomial panel needs a positive population size");
    if (n != m || transform) throw InvalidArgument("multinomial panel needs a square transition matrix");
  }
  if (intercept.size()) {
    if (family == Family::StaticPoissonMatrix || family == Family::MultinomialPanel) {
      throw InvalidArgument("an intercept is only defined for the autoregressive families");
    }
    if (intercept.size() != n) throw InvalidArgument("intercept must have length n");
    if (!intercept.allFinite() || intercept.minCoeff() < 0.0) {
      throw InvalidArgument("intercept must be finite and nonnegative");
    }
  }
}

void validate_trajectory(const ModelSpec& spec, const Trajectory& traj) {
  spec.validate();
  if (spec.family == Family::StaticPoissonMatrix) {
    if (traj.frames.empty()) throw InvalidArgument("static model needs at least one matrix frame");
    for (std::size_t t = 0; t < traj.frames.size(); ++t) {
      const MatrixXd& F = traj.frames[t];
      if (F.rows() != spec.n || F.cols() != spec.m) {
        throw InvalidArgument("frame " + std::to_string(t + 1) + " has the wrong shape");
      }
      for (Index k = 0; k < F.size(); ++k) {
        if (!std::isfinite(F.data()[k]) || !is_count(F.data()[k])) {
          throw InvalidArgument("frame " + std::to_string(t + 1) + " has a non-count entry");
        }
      }
    }
    return;
  }
  if (traj.y.rows() < 2) throw InvalidArgument("trajectory needs at least two dates");
  if (traj.y.cols() != spec.n) {
    throw InvalidArgument("trajectory has " + std::to_string(traj.y.cols()) + " columns, expected " +
                          std::to_string(spec.n));
  }
  for (Index t = 0; t < traj.y.rows(); ++t) {
    for (Index i = 0; i < spec.n; ++i) {
      const double x = traj.y(t, i);
      if (!std::isfinite(x) || x < 0.0) {
        throw InvalidArgument("negative or non-finite observation at date " + std::to_string(t + 1));
      }
      if (spec.family != Family::ExponentialAR && !is_count(x)) {
        throw InvalidArgument("non-integer count at date " + std::to_string(t + 1));
      }
    }
    if (spec.family == Family::MultinomialPanel && traj.y.row(t).sum() != spec.individuals) {
      throw InvalidArgument("panel counts at date " + std::to_string(t + 1) +
                            " do not add up to the population size");
    }
  }
}

double log_density(Family family, const VectorXd& theta, const VectorXd& y) {
  require_family_theta(family);
  if (theta.size() != y.size()) throw InvalidArgument("theta and y differ in length");
  double s = 0.0;
  for (Index i = 0; i < y.size(); ++i) {
    const double th = theta(i);
    if (family == Family::ExponentialAR) {
      if (!(th > 0.0)) throw DomainError("exponential rate must be positive");
      s += std::log(th) - th * y(i);
    } else {
      if (th < 0.0 || (th == 0.0 && y(i) > 0.0)) {
        throw DomainError("zero Poisson intensity with a positive count");
      }
      if (y(i) > 0.0) s += y(i) * std::log(th);
      s += -th - std::lgamma(y(i) + 1.0);
    }
  }
  return s;
}

VectorXd score_theta(const ModelSpec& spec, const VectorXd& theta, const VectorXd& y) {
  require_family_theta(spec.family);
  if (theta.size() != y.size()) throw InvalidArgument("theta and y differ in length");
  VectorXd s(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    if (spec.family == Family::ExponentialAR) {
      if (!(theta(i) > 0.0)) throw DomainError("exponential rate must be positive");
      s(i) = 1.0 / theta(i) - y(i);
    } else {
      if (theta(i) == 0.0 && y(i) > 0.0) throw DomainError("zero Poisson intensity with a positive count");
      s(i) = (y(i) > 0.0 ? y(i) / theta(i) : 0.0) - 1.0;
    }
  }
  return s;
}

VectorXd hessian_theta(const ModelSpec& spec, const VectorXd& theta, const VectorXd& y) {
  require_family_theta(spec.family);
  VectorXd h(theta.size());
  for (Index i = 0; i < theta.size(); ++i) {
    if (spec.family == Family::ExponentialAR) {
      if (!(theta(i) > 0.0)) throw DomainError("exponential rate must be positive");
      h(i) = -1.0 / (theta(i) * theta(i));
    } else {
      if (theta(i) == 0.0 && y(i) > 0.0) throw DomainError("zero Poisson intensity with a positive count");
      h(i) = y(i) > 0.0 ? -y(i) / (theta(i) * theta(i)) : 0.0;
    }
  }
  return h;
}

double loglik(const ModelSpec& spec, const MatrixXd& A, const Trajectory& traj) {
  validate_trajectory(spec, traj);
  if (A.rows() != spec.n || A.cols() != spec.m) throw InvalidArgument("A has the wrong shape");
  if (spec.family == Family::MultinomialPanel) {
    double s = 0.0;
    for (Index t = 1; t < traj.y.rows(); ++t) {
      s += multinomial_transition_logpmf(A, traj.y.row(t - 1).transpose(), traj.y.row(t).transpose());
    }
    return s;
  }
  return Likelihood::build(spec, traj).value_checked(A);
}

double spectral_radius(const MatrixXd& A) {
  if (A.rows() != A.cols()) throw InvalidArgument("spectral radius needs a square matrix");
  const Index n = A.rows();
  const MatrixXd M = A + MatrixXd::Identity(n, n);
  VectorXd x = VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  for (int it = 0; it < 10000; ++it) {
    const VectorXd y = M * x;
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (Index i = 0; i < n; ++i) {
      if (x(i) <= 0.0) continue;
      lo = std::min(lo, y(i) / x(i));
      hi = std::max(hi, y(i) / x(i));
    }
    if (hi - lo <= 1e-10 * hi) return std::max(0.0, 0.5 * (lo + hi) - 1.0);
    x = y / y.sum();
  }
  Eigen::EigenSolver<MatrixXd> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

void check_simulation_domain(const ModelSpec& spec, const MatrixXd& A) {
  spec.validate();
  if (A.rows() != spec.n || A.cols() != spec.m) throw InvalidArgument("A has the wrong shape");
  if (!A.allFinite() || A.minCoeff() < 0.0) throw InvalidArgument("A must be finite and nonnegative");
  if (spec.family == Family::MultinomialPanel) {
    for (Index i = 0; i < A.rows(); ++i) {
      if (std::abs(A.row(i).sum() - 1.0) > kStructuralTol) {
        throw InvalidArgument("row " + std::to_string(i + 1) + " of the transition matrix does not sum to 1");
      }
    }
    return;
  }
  if (spec.autoregressive() && A.rows() == A.cols()) {
    const double rho = spectral_radius(A);
    if (rho >= 1.0) throw NonStationary("spectral radius " + std::to_string(rho) + " >= 1");
  }
}

Trajectory simulate(const ModelSpec& spec, const MatrixXd& A, Index T, Index burn_in, std::uint64_t rng_seed) {
  if (T < 1 || burn_in < 0) throw InvalidArgument("T must be positive and burn_in nonnegative");
  check_simulation_domain(spec, A);
  std::mt19937_64 rng(rng_seed);
  Trajectory traj;

  if (spec.family == Family::StaticPoissonMatrix) {
    traj.frames.reserve(static_cast<std::size_t>(T));
    for (Index t = 0; t < T; ++t) {
      MatrixXd F(spec.n, spec.m);
      for (Index j = 0; j < spec.m; ++j) {
        for (Index i = 0; i < spec.n; ++i) F(i, j) = static_cast<double>(draw_poisson(rng, A(i, j)));
      }
      traj.frames.push_back(std::move(F));
    }
    return traj;
  }

  traj.y.resize(T, spec.n);
  const VectorXd c = spec.intercept_or_zero();
  VectorXd y = initial_state(spec, A);
  VectorXd next(spec.n);
  for (Index step = 0; step < burn_in + T; ++step) {
    switch (spec.family) {
      case Family::PoissonAR: {
        const VectorXd theta = c + A * spec.regressor(y);
        for (Index i = 0; i < spec.n; ++i) next(i) = static_cast<double>(draw_poisson(rng, theta(i)));
        break;
      }
      case Family::ExponentialAR: {
        const VectorXd theta = c + A * spec.regressor(y);
        for (Index i = 0; i < spec.n; ++i) {
          if (!(theta(i) > 0.0)) throw DomainError("exponential rate must be positive during simulation");
          std::exponential_distribution<double> dist(theta(i));
          next(i) = dist(rng);
        }
        break;
      }
      case Family::MultinomialPanel: {
        next.setZero();
        for (Index i = 0; i < spec.n; ++i) {
          // Sequential binomials: multinomial split of the y_i individuals in state i.
          auto remaining = static_cast<long long>(y(i));
          double mass = 1.0;
          for (Index j = 0; j < spec.n && remaining > 0; ++j) {
            long long x = remaining;
            if (j + 1 < spec.n && mass > 0.0) {
              const double p = std::clamp(A(i, j) / mass, 0.0, 1.0);
              std::binomial_distribution<long long> dist(remaining, p);
              x = dist(rng);
            }
            next(j) += static_cast<double>(x);
            remaining -= x;
            mass -= A(i, j);
          }
        }
        break;
      }
      case Family::StaticPoissonMatrix:
        break;
    }
    y = next;
    if (step >= burn_in) traj.y.row(step - burn_in) = y.transpose();
  }
  return traj;
}

std::vector<ComponentRanking> ranking_report(const NormalizedNmf& p) {
  auto rank_column = [](const VectorXd& v) {
    std::vector<RankingEntry> out(static_cast<std::size_t>(v.size()));
    for (Index i = 0; i < v.size(); ++i) out[static_cast<std::size_t>(i)] = {i, v(i)};
    std::stable_sort(out.begin(), out.end(),
                     [](const RankingEntry& x, const RankingEntry& y) { return x.value > y.value; });
    return out;
  };
  std::vector<ComponentRanking> table;
  for (Index k = 0; k < p.rank(); ++k) {
    table.push_back({k, rank_column(p.beta_star.col(k)), rank_column(p.gamma_star.col(k))});
  }
  return table;
}

}  // namespace netnmf
