#include "netnmf/likelihood.hpp"

#include <cmath>
#include <limits>

namespace netnmf {

Likelihood::Likelihood(Index n, Index m, Index periods)
    : n_(n), m_(m), periods_(periods), rows_(static_cast<std::size_t>(n)), pending_(static_cast<std::size_t>(n)) {}

Likelihood Likelihood::build(const ModelSpec& spec, const Trajectory& traj) {
  validate_trajectory(spec, traj);
  if (spec.family == Family::MultinomialPanel) {
    throw InvalidArgument("the multinomial panel is evaluated by its exact transition law only");
  }
  const bool poisson = spec.family != Family::ExponentialAR;

  if (spec.family == Family::StaticPoissonMatrix) {
    const auto T = static_cast<Index>(traj.frames.size());
    Likelihood L(spec.n, spec.m, T);
    VectorXd e = VectorXd::Zero(spec.m);
    for (Index t = 0; t < T; ++t) {
      const MatrixXd& F = traj.frames[static_cast<std::size_t>(t)];
      for (Index j = 0; j < spec.m; ++j) {
        e.setZero();
        e(j) = 1.0;
        for (Index i = 0; i < spec.n; ++i) {
          L.add_term(i, e, 0.0, F(i, j), 1.0, t);
          L.add_constant(-std::lgamma(F(i, j) + 1.0));
        }
      }
    }
    L.finalize();
    return L;
  }

  const Index T = traj.y.rows();
  Likelihood L(spec.n, spec.m, T - 1);
  const VectorXd c = spec.intercept_or_zero();
  for (Index t = 1; t < T; ++t) {
    const VectorXd z = spec.regressor(traj.y.row(t - 1).transpose());
    if (z.size() != spec.m) throw InvalidArgument("regressor transform returned the wrong length");
    for (Index i = 0; i < spec.n; ++i) {
      const double y = traj.y(t, i);
      if (poisson) {
        L.add_term(i, z, c(i), y, 1.0, t - 1);
        L.add_constant(-std::lgamma(y + 1.0));
      } else {
        L.add_term(i, z, c(i), 1.0, y, t - 1);
      }
    }
  }
  L.finalize();
  return L;
}

std::size_t Likelihood::term_count() const {
  std::size_t k = 0;
  for (const auto& r : rows_) k += static_cast<std::size_t>(r.u.size());
  return k;
}

void Likelihood::add_term(Index row, const VectorXd& z, double offset, double u, double v, Index period) {
  if (row < 0 || row >= n_ || z.size() != m_) throw InvalidArgument("likelihood term out of shape");
  auto& p = pending_[static_cast<std::size_t>(row)];
  p.z.insert(p.z.end(), z.data(), z.data() + z.size());
  p.offset.push_back(offset);
  p.u.push_back(u);
  p.v.push_back(v);
  p.period.push_back(period);
}

void Likelihood::finalize() {
  for (Index i = 0; i < n_; ++i) {
    auto& p = pending_[static_cast<std::size_t>(i)];
    if (p.u.empty()) continue;
    auto& r = rows_[static_cast<std::size_t>(i)];
    const auto old = r.u.size();
    const auto add = static_cast<Index>(p.u.size());
    MatrixXd Z(m_, old + add);
    if (old) Z.leftCols(old) = r.Z;
    Z.rightCols(add) = Eigen::Map<const MatrixXd>(p.z.data(), m_, add);
    r.Z = std::move(Z);
    auto append = [&](VectorXd& dst, const std::vector<double>& src) {
      VectorXd out(old + add);
      if (old) out.head(old) = dst;
      out.tail(add) = Eigen::Map<const VectorXd>(src.data(), add);
      dst = std::move(out);
    };
    append(r.offset, p.offset);
    append(r.u, p.u);
    append(r.v, p.v);
    r.period.insert(r.period.end(), p.period.begin(), p.period.end());
    p = Pending{};
  }
}

VectorXd Likelihood::theta_row(Index i, const VectorXd& a_row) const {
  const auto& r = row(i);
  if (r.u.size() == 0) return VectorXd(0);
  return r.offset + r.Z.transpose() * a_row;
}

double Likelihood::row_value(Index i, const VectorXd& theta) const {
  const auto& r = row(i);
  double s = 0.0;
  for (Index k = 0; k < theta.size(); ++k) {
    const double th = theta(k);
    if (th < 0.0) return -std::numeric_limits<double>::infinity();
    if (r.u(k) > 0.0) {
      if (th == 0.0) return -std::numeric_limits<double>::infinity();
      s += r.u(k) * std::log(th);
    }
    s -= r.v(k) * th;
  }
  return s;
}

double Likelihood::value(const MatrixXd& A) const {
  double s = constant_;
  for (Index i = 0; i < n_; ++i) {
    if (row(i).u.size() == 0) continue;
    s += row_value(i, theta_row(i, A.row(i).transpose()));
  }
  return s;
}

double Likelihood::value_checked(const MatrixXd& A) const {
  const double v = value(A);
  if (!std::isfinite(v)) throw DomainError("likelihood undefined: zero intensity with a positive observation");
  return v;
}

MatrixXd Likelihood::gradient(const MatrixXd& A) const {
  MatrixXd G = MatrixXd::Zero(n_, m_);
  VectorXd d1, d2;
  for (Index i = 0; i < n_; ++i) {
    const auto& r = row(i);
    if (r.u.size() == 0) continue;
    term_derivatives(theta_row(i, A.row(i).transpose()), r.u, r.v, d1, d2);
    G.row(i) = (r.Z * d1).transpose();
  }
  return G;
}

void Likelihood::term_derivatives(const VectorXd& theta, const VectorXd& u, const VectorXd& v, VectorXd& d1,
                                  VectorXd& d2) {
  d1.resize(theta.size());
  d2.resize(theta.size());
  for (Index k = 0; k < theta.size(); ++k) {
    if (u(k) > 0.0) {
      d1(k) = u(k) / theta(k) - v(k);
      d2(k) = -u(k) / (theta(k) * theta(k));
    } else {
      d1(k) = -v(k);
      d2(k) = 0.0;
    }
  }
}

}  // namespace netnmf
