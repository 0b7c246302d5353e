#include <cmath>
#include <functional>
#include <unordered_map>

#include "netnmf/models.hpp"

namespace netnmf {

double multinomial_transition_logpmf(const MatrixXd& A, const VectorXd& y_prev, const VectorXd& y_next) {
  const Index n = A.rows();
  if (A.cols() != n || y_prev.size() != n || y_next.size() != n) {
    throw InvalidArgument("panel transition needs a square matrix and matching count vectors");
  }
  if (y_prev.sum() != y_next.sum()) throw DomainError("panel population is not conserved");

  std::vector<long long> target(static_cast<std::size_t>(n));
  std::vector<long long> radix(static_cast<std::size_t>(n));
  long long stride = 1;
  for (Index j = 0; j < n; ++j) {
    target[static_cast<std::size_t>(j)] = static_cast<long long>(y_next(j));
    radix[static_cast<std::size_t>(j)] = stride;
    stride *= target[static_cast<std::size_t>(j)] + 1;
  }

  // Partial column sums s (encoded in mixed radix) -> probability.
  std::unordered_map<long long, long double> states{{0, 1.0L}};
  std::vector<long long> s(static_cast<std::size_t>(n));
  std::vector<long long> x(static_cast<std::size_t>(n));

  for (Index i = 0; i < n; ++i) {
    const auto N = static_cast<long long>(y_prev(i));
    if (N == 0) continue;
    const long double log_nfact = std::lgamma(static_cast<double>(N) + 1.0);
    std::unordered_map<long long, long double> next;
    for (const auto& [code, prob] : states) {
      long long rest = code;
      for (Index j = n - 1; j >= 0; --j) {
        s[static_cast<std::size_t>(j)] = rest / radix[static_cast<std::size_t>(j)];
        rest %= radix[static_cast<std::size_t>(j)];
      }
      // Enumerate splits x of N over destinations with s + x <= target.
      std::function<void(Index, long long, long double)> split = [&](Index j, long long left, long double logp) {
        const auto ju = static_cast<std::size_t>(j);
        const long long room = target[ju] - s[ju];
        if (j == n - 1) {
          if (left > room) return;
          if (left > 0 && A(i, j) <= 0.0) return;
          x[ju] = left;
          long double lp = logp - std::lgamma(static_cast<double>(left) + 1.0);
          if (left > 0) lp += static_cast<long double>(left) * std::log(A(i, j));
          long long code2 = 0;
          for (Index k = 0; k < n; ++k) {
            code2 += (s[static_cast<std::size_t>(k)] + x[static_cast<std::size_t>(k)]) * radix[static_cast<std::size_t>(k)];
          }
          next[code2] += prob * std::exp(lp + log_nfact);
          return;
        }
        const long long hi = std::min(left, room);
        for (long long v = 0; v <= hi; ++v) {
          if (v > 0 && A(i, j) <= 0.0) break;
          x[ju] = v;
          long double lp = logp - std::lgamma(static_cast<double>(v) + 1.0);
          if (v > 0) lp += static_cast<long double>(v) * std::log(A(i, j));
          split(j + 1, left - v, lp);
        }
      };
      split(0, N, 0.0L);
    }
    states.swap(next);
  }

  long long full = 0;
  for (Index j = 0; j < n; ++j) full += target[static_cast<std::size_t>(j)] * radix[static_cast<std::size_t>(j)];
  const auto it = states.find(full);
  if (it == states.end() || !(it->second > 0.0L)) {
    throw DomainError("panel transition has zero probability under A");
  }
  return static_cast<double>(std::log(it->second));
}

}  // namespace netnmf
