#pragma once

#include <vector>

#include "netnmf/models.hpp"

namespace netnmf {

/// Log-likelihood of the form sum over terms of u log(theta) - v theta + const,
/// with theta = offset + a_i' z for the row i of A the term belongs to.
///
/// Poisson terms have u = y, v = 1; exponential terms have u = 1, v = y.
/// Every term also carries the period it belongs to, so per-period scores can
/// be assembled.
class Likelihood {
 public:
  struct RowTerms {
    MatrixXd Z;               // m x N_i, one regressor per column
    VectorXd offset;          // N_i
    VectorXd u;
    VectorXd v;
    std::vector<Index> period;
  };

  Likelihood(Index n, Index m, Index periods);

  /// Throws InvalidArgument for MultinomialPanel (no theta-linear form).
  static Likelihood build(const ModelSpec& spec, const Trajectory& traj);

  Index n() const noexcept { return n_; }
  Index m() const noexcept { return m_; }
  Index periods() const noexcept { return periods_; }
  const RowTerms& row(Index i) const { return rows_[static_cast<std::size_t>(i)]; }
  std::size_t term_count() const;

  void add_term(Index row, const VectorXd& z, double offset, double u, double v, Index period);
  void add_constant(double c) { constant_ += c; }
  /// Packs the term buffers; called by build, required after manual add_term.
  void finalize();

  VectorXd theta_row(Index i, const VectorXd& a_row) const;
  /// Sum of u log theta - v theta over the row, +const excluded; -inf if some
  /// theta <= 0 carries u > 0, or theta < 0.
  double row_value(Index i, const VectorXd& theta) const;
  double value(const MatrixXd& A) const;
  /// Same as value but throws DomainError instead of returning -inf.
  double value_checked(const MatrixXd& A) const;
  MatrixXd gradient(const MatrixXd& A) const;

  /// f'(theta) = u/theta - v and f''(theta) = -u/theta^2 with 0/0 = 0.
  static void term_derivatives(const VectorXd& theta, const VectorXd& u, const VectorXd& v, VectorXd& d1,
                               VectorXd& d2);

 private:
  struct Pending {
    std::vector<double> z;
    std::vector<double> offset, u, v;
    std::vector<Index> period;
  };

  Index n_;
  Index m_;
  Index periods_;
  double constant_ = 0.0;
  std::vector<RowTerms> rows_;
  std::vector<Pending> pending_;
};

}  // namespace netnmf
