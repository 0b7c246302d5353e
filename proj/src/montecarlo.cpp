#include "netnmf/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdlib>
#include <numeric>
#include <random>
#include <thread>

#include "netnmf/identset.hpp"

namespace netnmf {

namespace {

NormalizedNmf permute_components(const NormalizedNmf& p, const std::vector<Index>& order) {
  NormalizedNmf out = p;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Index src = order[k];
    const auto dst = static_cast<Index>(k);
    out.pi(dst) = p.pi(src);
    out.beta_star.col(dst) = p.beta_star.col(src);
    out.gamma_star.col(dst) = p.gamma_star.col(src);
  }
  return out;
}

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  return percentile(std::move(v), 0.5);
}

double finite_or(double x, double fallback) { return std::isfinite(x) ? x : fallback; }

}  // namespace

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::ML1:
      return "ml1";
    case Estimator::AML:
      return "aml";
    case Estimator::IML:
      return "iml";
  }
  return "aml";
}

Estimator estimator_from_string(const std::string& name) {
  std::string s;
  for (char ch : name) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (s == "ml1" || s == "ml") return Estimator::ML1;
  if (s == "aml") return Estimator::AML;
  if (s == "iml") return Estimator::IML;
  throw InvalidArgument("unknown estimator '" + name + "' (expected ml1, aml or iml)");
}

FitResult fit(const Likelihood& lik, Estimator e, const FitConfig& cfg) {
  switch (e) {
    case Estimator::ML1:
      if (cfg.K != 1) throw WrongRank("the ml1 estimator requires K = 1");
      return fit_ml_k1(lik, cfg);
    case Estimator::AML:
      return fit_aml(lik, cfg);
    case Estimator::IML:
      return fit_iml(lik, cfg);
  }
  return fit_aml(lik, cfg);
}

std::uint64_t replication_seed(std::uint64_t master, Index T, Index r) {
  std::seed_seq seq{static_cast<std::uint32_t>(master & 0xffffffffu), static_cast<std::uint32_t>(master >> 32),
                    static_cast<std::uint32_t>(T), static_cast<std::uint32_t>(r)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

unsigned resolve_threads(int requested) {
  if (requested > 0) return static_cast<unsigned>(requested);
  if (const char* env = std::getenv("NETNMF_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(1, count))));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&]() {
      for (std::size_t i = next++; i < count; i = next++) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

void McConfig::validate() const {
  spec.validate();
  truth.validate(1e-8);
  if (truth.rows() != spec.n || truth.cols() != spec.m) throw InvalidArgument("truth does not match the model shape");
  if (truth.rank() != fit.K) throw WrongRank("truth rank differs from the fitted K");
  if (spec.family == Family::MultinomialPanel) throw InvalidArgument("mc-study does not support the multinomial panel");
  if (T_grid.empty()) throw InvalidArgument("empty T grid");
  for (Index T : T_grid) {
    if (T < 2) throw InvalidArgument("every T in the grid must be at least 2");
  }
  if (replications < 1) throw InvalidArgument("replication count must be at least 1");
  if (coverage && bound_sims < 1) throw InvalidArgument("bound_sims must be positive");
  if (coverage && !(coverage_level > 0.0 && coverage_level < 1.0)) throw InvalidArgument("coverage_level in (0, 1)");
  fit.validate();
}

double set_distance(const NormalizedNmf& alpha_hat, const NormalizedNmf& truth, int grid) {
  const Index K = truth.rank();
  if (alpha_hat.rank() != K) throw WrongRank("set distance needs equal ranks");
  const AlphaLayout lay = AlphaLayout::of(truth);
  std::vector<Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), 0);
  std::vector<VectorXd> candidates;
  do {
    candidates.push_back(lay.flatten(permute_components(alpha_hat, order)));
  } while (std::next_permutation(order.begin(), order.end()));

  const Nmf seed = denormalize(truth);
  double best = kInf;
  auto consider = [&](const VectorXd& q) {
    Nmf img;
    try {
      img = apply_q(seed, QTransform(K, q));
    } catch (const Error&) {
      return;
    }
    NormalizedNmf p;
    try {
      p = normalize(img);
    } catch (const Error&) {
      return;
    }
    const VectorXd x = lay.flatten(p);
    for (const auto& c : candidates) best = std::min(best, (c - x).lpNorm<Eigen::Infinity>());
  };

  if (K == 1) {
    consider(VectorXd(0));
  } else if (K == 2) {
    const K2Bounds box = k2_bounds(seed);
    double finite_max = 1.0;
    for (double v : {box.q12_lo, box.q12_hi, box.q21_lo, box.q21_hi}) {
      if (std::isfinite(v)) finite_max = std::max(finite_max, std::abs(v));
    }
    const double far = 1e3 * finite_max;
    const double lo12 = finite_or(box.q12_lo, -far), hi12 = finite_or(box.q12_hi, far);
    const double lo21 = finite_or(box.q21_lo, -far), hi21 = finite_or(box.q21_hi, far);
    const int g = std::max(2, grid);
    VectorXd q(2);
    for (int a = 0; a < g; ++a) {
      for (int b = 0; b < g; ++b) {
        const double q12 = lo12 + (hi12 - lo12) * a / (g - 1);
        const double q21 = lo21 + (hi21 - lo21) * b / (g - 1);
        q(QTransform::q_index(2, 0, 1)) = q12;
        q(QTransform::q_index(2, 1, 0)) = q21;
        consider(q);
      }
    }
    consider(VectorXd::Zero(2));
  } else {
    consider(VectorXd::Zero(QTransform::q_dim(K)));
    for (const auto& q : sample_feasible_q(seed, static_cast<std::size_t>(grid) * 5, 1.0, 7)) consider(q);
  }
  return best;
}

McReplication run_replication(const McConfig& cfg, Index T, Index r) {
  McReplication rep;
  rep.T = T;
  rep.rep = r;
  rep.seed = replication_seed(cfg.master_seed, T, r);
  const MatrixXd A0 = compose_alpha(cfg.truth);
  try {
    const Trajectory traj = simulate(cfg.spec, A0, T, cfg.burn_in, rep.seed);
    const Likelihood lik = Likelihood::build(cfg.spec, traj);
    FitConfig fc = cfg.fit;
    fc.seed = rep.seed ^ 0x9e3779b97f4a7c15ULL;
    const FitResult res = fit(lik, cfg.estimator, fc);
    rep.alpha_hat = res.alpha_hat;
    rep.A_hat = compose_alpha(res.alpha_hat);
    rep.loglik = res.loglik;
    rep.iterations = res.iterations;
    rep.distance_A = (rep.A_hat - A0).norm();
    if (cfg.set_distance) rep.set_distance = set_distance(res.alpha_hat, cfg.truth);
    if (cfg.calibration || cfg.coverage) {
      const InfoBlocks blocks = info_matrices(lik, res.alpha_hat, cfg.info);
      const AsymptoticVariance v = variance_of_A(res.alpha_hat, bordered_variance(blocks));
      const double Td = static_cast<double>(blocks.periods);
      rep.var_alpha = v.V_alpha.diagonal() / Td;
      rep.var_A = v.V_A.diagonal() / Td;
      rep.has_variance = true;
      if (cfg.coverage) {
        const double tail = 0.5 * (1.0 - cfg.coverage_level);
        const BoundDistribution bd = bound_distribution(res.alpha_hat, v.V_alpha, blocks.D(), blocks.periods,
                                                        cfg.statistic, cfg.bound_sims, rep.seed + 1,
                                                        {tail, 1.0 - tail});
        rep.interval_lo = bd.upper_percentiles[0];
        rep.interval_hi = bd.upper_percentiles[1];
        rep.has_interval = true;
      }
    }
    rep.ok = true;
  } catch (const Error& e) {
    rep.ok = false;
    rep.error = e.what();
  }
  return rep;
}

McReport run_mc_study(const McConfig& cfg) {
  cfg.validate();
  McReport report;
  if (cfg.coverage) report.truth_statistic_upper = set_bounds(cfg.statistic, cfg.truth).second;
  const std::size_t R = static_cast<std::size_t>(cfg.replications);
  report.replications.resize(cfg.T_grid.size() * R);
  parallel_for(report.replications.size(), resolve_threads(cfg.threads), [&](std::size_t idx) {
    const Index T = cfg.T_grid[idx / R];
    report.replications[idx] = run_replication(cfg, T, static_cast<Index>(idx % R));
  });

  const AlphaLayout lay = AlphaLayout::of(cfg.truth);
  for (std::size_t g = 0; g < cfg.T_grid.size(); ++g) {
    McRow row;
    row.T = cfg.T_grid[g];
    std::vector<double> dA, dS;
    std::vector<const McReplication*> ok;
    for (std::size_t r = 0; r < R; ++r) {
      const McReplication& rep = report.replications[g * R + r];
      if (!rep.ok) {
        ++row.failures;
        continue;
      }
      ++row.successes;
      ok.push_back(&rep);
      dA.push_back(rep.distance_A);
      if (cfg.set_distance) dS.push_back(rep.set_distance);
      if (rep.has_interval) {
        ++row.coverage_trials;
        if (report.truth_statistic_upper >= rep.interval_lo && report.truth_statistic_upper <= rep.interval_hi) {
          ++row.coverage_count;
        }
      }
    }
    row.median_distance_A = median(dA);
    row.median_set_distance = cfg.set_distance ? median(dS) : std::numeric_limits<double>::quiet_NaN();
    row.coverage = row.coverage_trials ? static_cast<double>(row.coverage_count) / row.coverage_trials
                                       : std::numeric_limits<double>::quiet_NaN();
    if (cfg.calibration && ok.size() >= 2) {
      const Index da = lay.dim();
      const Index dA_dim = lay.n * lay.m;
      VectorXd mean_a = VectorXd::Zero(da), mean_A = VectorXd::Zero(dA_dim);
      VectorXd asy_a = VectorXd::Zero(da), asy_A = VectorXd::Zero(dA_dim);
      int nv = 0;
      for (const McReplication* rep : ok) {
        mean_a += lay.flatten(rep->alpha_hat);
        mean_A += rep->A_hat.reshaped();
        if (rep->has_variance) {
          asy_a += rep->var_alpha;
          asy_A += rep->var_A;
          ++nv;
        }
      }
      const double N = static_cast<double>(ok.size());
      mean_a /= N;
      mean_A /= N;
      VectorXd var_a = VectorXd::Zero(da), var_A = VectorXd::Zero(dA_dim);
      for (const McReplication* rep : ok) {
        var_a += (lay.flatten(rep->alpha_hat) - mean_a).array().square().matrix();
        var_A += (rep->A_hat.reshaped() - mean_A).array().square().matrix();
      }
      var_a /= N - 1.0;
      var_A /= N - 1.0;
      if (nv > 0) {
        asy_a /= nv;
        asy_A /= nv;
        row.variance_ratio_alpha = var_a.cwiseQuotient(asy_a);
        row.variance_ratio_A = var_A.cwiseQuotient(asy_A);
      }
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace netnmf
