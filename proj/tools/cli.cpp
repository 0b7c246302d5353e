#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "netnmf/estim.hpp"
#include "netnmf/identset.hpp"
#include "netnmf/infer.hpp"
#include "netnmf/matrix_io.hpp"
#include "netnmf/montecarlo.hpp"
#include "netnmf/serialize.hpp"
#include "netnmf/trajectory_io.hpp"
#include "svg.hpp"

namespace netnmf::cli {

namespace {

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::string s = text;
  for (char& c : s) {
    if (c == ';' || c == ':' || c == '\n') c = ',';
  }
  std::istringstream in(s);
  std::string part;
  while (std::getline(in, part, ',')) {
    if (part.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(part, &used));
      if (part.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(part);
    } catch (const std::logic_error&) {
      throw InvalidArgument("bad number '" + part + "' in " + what);
    }
  }
  return out;
}

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidArgument(path + ": invalid JSON (" + e.what() + ")");
  }
}

/// Normalized factors from a factor file ({a, pi, beta_star, gamma_star} or {B, C})
/// or a fit report.
NormalizedNmf load_alpha(const std::string& path) {
  const json j = load_json(path);
  if (j.contains("fit")) return normalized_from_json(j.at("fit").at("alpha_hat"));
  if (j.contains("alpha_hat")) return normalized_from_json(j.at("alpha_hat"));
  if (j.contains("a")) return normalized_from_json(j);
  if (j.contains("B")) return normalize(nmf_from_json(j));
  throw InvalidArgument(path + ": expected normalized factors, raw factors {B, C} or a fit report");
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

VectorXd intercept_from(const std::string& text, Index n) {
  if (text.empty()) return VectorXd();
  const std::vector<double> v = parse_list(text, "intercept");
  if (v.size() == 1) return VectorXd::Constant(n, v[0]);
  if (static_cast<Index>(v.size()) != n) throw InvalidArgument("intercept must have 1 or n entries");
  return Eigen::Map<const VectorXd>(v.data(), n);
}

Criterion criterion_from(const std::string& kind, const std::string& direction) {
  Criterion c;
  c.kind = criterion_from_string(kind);
  if (direction == "max" || direction == "maximize") {
    c.direction = OptDirection::Maximize;
  } else if (direction == "min" || direction == "minimize") {
    c.direction = OptDirection::Minimize;
  } else {
    throw InvalidArgument("direction must be max or min");
  }
  return c;
}

BoundaryPolicy policy_from(const std::string& s) {
  if (s == "refuse") return BoundaryPolicy::Refuse;
  if (s == "active") return BoundaryPolicy::ActiveConstraints;
  throw InvalidArgument("boundary policy must be refuse or active");
}

std::string policy_name(BoundaryPolicy p) { return p == BoundaryPolicy::Refuse ? "refuse" : "active"; }

Estimator estimator_for(const std::string& name, Index K) {
  if (name == "auto") return K == 1 ? Estimator::ML1 : Estimator::IML;
  return estimator_from_string(name);
}

std::string q_label(Index K, Index l) {
  for (Index j = 0; j < K; ++j) {
    for (Index i = 0; i < K; ++i) {
      if (i != j && QTransform::q_index(K, i, j) == l) return "q" + std::to_string(i + 1) + std::to_string(j + 1);
    }
  }
  return "q";
}

std::string stem(const std::string& path) {
  const auto slash = path.find_last_of('/');
  const auto dot = path.find_last_of('.');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) return path.substr(0, dot);
  return path;
}

struct FitOptions {
  int max_iter = 2000;
  int inner_iters = 5;
  double eps_loglik = 1e-9;
  double eps_param = 1e-7;
  int warmup = 25;
  std::string criterion = "entropy";
  std::string direction = "max";
  std::string estimator = "auto";
  std::string boundary = "active";

  void add(CLI::App* sub) {
    sub->add_option("--estimator", estimator, "ml1, aml, iml or auto (ml1 for K = 1, iml otherwise)")
        ->capture_default_str();
    sub->add_option("--criterion", criterion, "benchmark criterion: entropy, detB, detC")->capture_default_str();
    sub->add_option("--direction", direction, "max or min")->capture_default_str();
    sub->add_option("--max-iter", max_iter, "outer iteration cap")->capture_default_str();
    sub->add_option("--inner-iters", inner_iters, "projected Newton iterations per block")->capture_default_str();
    sub->add_option("--eps-loglik", eps_loglik, "relative log-likelihood tolerance")->capture_default_str();
    sub->add_option("--eps-param", eps_param, "parameter step tolerance")->capture_default_str();
    sub->add_option("--warmup", warmup, "AML iterations before the criterion steps start")->capture_default_str();
    sub->add_option("--boundary", boundary, "benchmark on the boundary: refuse or active")->capture_default_str();
  }

  FitConfig config(Index K, std::uint64_t seed) const {
    FitConfig c;
    c.K = K;
    c.max_outer_iters = max_iter;
    c.inner_iters = inner_iters;
    c.eps_loglik = eps_loglik;
    c.eps_param = eps_param;
    c.iml_warmup = std::min(warmup, max_iter);
    c.criterion = criterion_from(criterion, direction);
    c.seed = seed;
    c.validate();
    return c;
  }
};

// ---------------------------------------------------------------- simulate

struct SimulateCmd {
  std::string family = "poisson";
  std::string matrix_path;
  std::string factors_path;
  double scale_radius = 0.0;
  std::string intercept;
  Index T = 1000;
  Index burn_in = 200;
  std::uint64_t seed = 1;
  int individuals = 0;
  std::string out_path;
  std::string meta_path;

  void add(CLI::App* sub) {
    sub->add_option("--family", family, "poisson, exponential, multinomial or static")->capture_default_str();
    auto* a = sub->add_option("--matrix", matrix_path, "true A as CSV or JSON")->check(CLI::ExistingFile);
    auto* f = sub->add_option("--factors", factors_path, "true factors as JSON")->check(CLI::ExistingFile);
    a->excludes(f);
    sub->add_option("--scale-radius", scale_radius, "rescale A to this spectral radius (0: keep)")
        ->capture_default_str();
    sub->add_option("--intercept", intercept, "known intercept c: one value or n comma-separated values")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    sub->add_option("-T,--periods", T, "number of recorded dates")->capture_default_str();
    sub->add_option("--burn-in", burn_in, "discarded dates")->capture_default_str();
    sub->add_option("--seed", seed, "random seed")->capture_default_str();
    sub->add_option("--individuals", individuals, "population size for the multinomial panel");
    sub->add_option("-o,--out", out_path, "trajectory CSV ('-' for stdout)")->required();
    sub->add_option("--meta-out", meta_path, "JSON metadata file (default: <out>.json)");
  }

  int run(const std::string& config, std::ostream& out) const {
    MatrixXd A;
    if (!matrix_path.empty()) {
      A = read_matrix_file(matrix_path);
    } else if (!factors_path.empty()) {
      A = compose_alpha(load_alpha(factors_path));
    } else {
      throw InvalidArgument("simulate needs --matrix or --factors");
    }
    if (scale_radius > 0.0) {
      const double rho = spectral_radius(A);
      if (rho > 0.0) A *= scale_radius / rho;
    }
    ModelSpec spec;
    spec.family = family_from_string(family);
    spec.n = A.rows();
    spec.m = A.cols();
    spec.individuals = individuals;
    spec.intercept = intercept_from(intercept, spec.n);
    spec.validate();
    const Trajectory traj = simulate(spec, A, T, burn_in, seed);

    json meta = make_meta(config);
    meta["command"] = "simulate";
    meta["seed"] = seed;
    json info = meta;
    info["family"] = to_string(spec.family);
    info["n"] = spec.n;
    info["m"] = spec.m;
    info["T"] = T;
    info["burn_in"] = burn_in;
    if (spec.intercept.size()) info["intercept"] = vector_to_json(spec.intercept);
    if (A.rows() == A.cols()) info["spectral_radius"] = spectral_radius(A);
    info["A"] = matrix_to_json(A);

    std::ostringstream csv;
    write_trajectory_csv(csv, spec, traj, meta);
    write_text(out_path, csv.str(), out);
    const std::string meta_file = meta_path.empty() ? (out_path == "-" ? "" : out_path + ".json") : meta_path;
    if (!meta_file.empty()) write_text(meta_file, dump(info), out);
    if (out_path != "-") out << "wrote " << traj.length() << " dates to " << out_path << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------- fit

struct FitCmd {
  std::string data_path;
  std::string family;
  std::string intercept;
  Index n = 0;
  Index m = 0;
  Index K = 1;
  std::uint64_t seed = 1;
  std::string init_path;
  bool no_inference = false;
  std::string out_path = "-";
  FitOptions opts;

  void add(CLI::App* sub) {
    sub->add_option("--data", data_path, "trajectory CSV")->required()->check(CLI::ExistingFile);
    sub->add_option("--family", family, "override the family recorded in the data file");
    sub->add_option("--intercept", intercept, "override the recorded intercept")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    sub->add_option("--n", n, "rows of A (static family, when not recorded)");
    sub->add_option("--m", m, "columns of A (static family, when not recorded)");
    sub->add_option("-K,--rank", K, "number of components")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "seed of the random initialization")->capture_default_str();
    sub->add_option("--init", init_path, "initial factors (JSON)")->check(CLI::ExistingFile);
    sub->add_flag("--no-inference", no_inference, "skip the asymptotic variance");
    sub->add_option("-o,--out", out_path, "JSON report ('-' for stdout)")->capture_default_str();
    opts.add(sub);
  }

  int run(const std::string& config, std::ostream& out) const {
    const TrajectoryFile file = read_trajectory_csv(data_path);
    ModelSpec spec;
    spec.family = !family.empty() ? family_from_string(family) : file.family.value_or(Family::PoissonAR);
    if (spec.family == Family::StaticPoissonMatrix) {
      spec.n = n ? n : file.n;
      spec.m = m ? m : file.m;
      if (spec.n < 1 || spec.m < 1) throw InvalidArgument("static data needs n and m (header or --n/--m)");
    } else {
      spec.n = file.traj.y.cols();
      spec.m = spec.n;
    }
    spec.intercept = intercept.empty() ? file.intercept : intercept_from(intercept, spec.n);
    if (spec.family == Family::MultinomialPanel) {
      throw InvalidArgument("the multinomial panel has no tractable likelihood in factor form; it is simulation only");
    }
    const Trajectory traj = trajectory_for_spec(file, spec);
    validate_trajectory(spec, traj);
    const Likelihood lik = Likelihood::build(spec, traj);

    FitConfig cfg = opts.config(K, seed);
    if (!init_path.empty()) cfg.init = load_alpha(init_path);
    const Estimator est = estimator_for(opts.estimator, K);
    const FitResult res = fit(lik, est, cfg);

    json report;
    report["meta"] = make_meta(config);
    report["meta"]["command"] = "fit";
    report["data"] = data_path;
    report["spec"] = {{"family", to_string(spec.family)}, {"n", spec.n}, {"m", spec.m}, {"K", K},
                      {"T", traj.length()}, {"estimator", to_string(est)},
                      {"criterion", to_string(cfg.criterion.kind)}};
    if (spec.intercept.size()) report["spec"]["intercept"] = vector_to_json(spec.intercept);
    report["fit"] = to_json(res);
    report["ranking"] = to_json(ranking_report(res.alpha_hat));

    if (!no_inference) {
      InfoOptions io;
      io.criterion = cfg.criterion;
      io.boundary = policy_from(opts.boundary);
      const InfoBlocks blocks = info_matrices(lik, res.alpha_hat, io);
      const RankDiagnostic rank = check_rank_condition(blocks);
      const AsymptoticVariance v = variance_of_A(res.alpha_hat, bordered_variance(blocks));
      json inf;
      inf["policy"] = policy_name(io.boundary);
      inf["boundary"] = blocks.boundary;
      inf["pi_row_vacuous"] = blocks.pi_row_vacuous;
      inf["notes"] = blocks.notes;
      inf["rank"] = to_json(rank);
      inf["variance"] = to_json(v);
      inf["D"] = matrix_to_json(blocks.D());
      inf["periods"] = blocks.periods;
      report["inference"] = inf;
    }
    write_text(out_path, dump(report), out);
    if (out_path != "-") {
      out << "method " << res.method << ", loglik " << std::setprecision(10) << res.loglik << ", iterations "
          << res.iterations << (res.converged ? " (converged)" : " (not converged)") << "\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------- identify-set

struct IdentifyCmd {
  std::string input;
  std::string grid;
  int component = -1;
  std::string cut_prefix;
  int samples = 200;
  double radius = 1.0;
  std::uint64_t rng_seed = 1;
  std::string out_path = "-";

  void add(CLI::App* sub) {
    sub->add_option("--input", input, "factors JSON or fit report")->required()->check(CLI::ExistingFile);
    sub->add_option("--grid", grid, "cut grid lo:hi:count (default: the box widened by a quarter, or -5:5)")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join);
    sub->add_option("--component", component, "index into vec*Q for a single cut (default: all)");
    sub->add_option("--cut-prefix", cut_prefix, "prefix of the cut CSV files (default: from --out)");
    sub->add_option("--samples", samples, "feasible q samples for K >= 3")->capture_default_str();
    sub->add_option("--radius", radius, "sampling radius for K >= 3")->capture_default_str();
    sub->add_option("--rng-seed", rng_seed, "sampling seed")->capture_default_str();
    sub->add_option("-o,--out", out_path, "JSON report ('-' for stdout)")->capture_default_str();
  }

  int run(const std::string& config, std::ostream& out) const {
    const NormalizedNmf p = load_alpha(input);
    const Nmf seed = denormalize(p);
    const Index K = p.rank();
    json report;
    report["meta"] = make_meta(config);
    report["meta"]["command"] = "identify-set";
    report["K"] = K;
    const A3Diagnostic a3 = check_assumption_a3(seed);
    report["assumption_a3"] = {{"pass", a3.pass}, {"min_singular_B", a3.min_singular_B},
                               {"min_singular_C", a3.min_singular_C}};
    for (const auto kind : {CriterionKind::Entropy, CriterionKind::DetB, CriterionKind::DetC}) {
      report["criteria"][to_string(kind)] = criterion_eval(kind, p);
    }

    double lo = -5.0, hi = 5.0;
    int count = 201;
    std::optional<bool> unique;
    if (K == 1) {
      unique = true;
    } else if (K == 2) {
      const K2Bounds box = k2_bounds(seed);
      report["bounds"] = to_json(box);
      unique = essentially_unique_k2(seed);
      if (grid.empty()) {
        const double a = std::isfinite(box.q12_lo) && std::isfinite(box.q21_lo) ? std::min(box.q12_lo, box.q21_lo) : -5.0;
        const double b = std::isfinite(box.q12_hi) && std::isfinite(box.q21_hi) ? std::max(box.q12_hi, box.q21_hi) : 5.0;
        const double w = std::max(b - a, 1.0);
        lo = a - 0.25 * w;
        hi = b + 0.25 * w;
      }
    } else {
      const std::vector<VectorXd> qs = sample_feasible_q(seed, static_cast<std::size_t>(samples), radius, rng_seed);
      json s = json::array();
      for (const auto& q : qs) {
        const NormalizedNmf img = normalize(apply_q(seed, QTransform(K, q)));
        json row;
        for (Index l = 0; l < q.size(); ++l) row[q_label(K, l)] = q(l);
        row["entropy"] = criterion_eval(CriterionKind::Entropy, img);
        row["detB"] = criterion_eval(CriterionKind::DetB, img);
        row["detC"] = criterion_eval(CriterionKind::DetC, img);
        s.push_back(row);
      }
      report["samples"] = s;
    }
    if (unique) report["essentially_unique"] = *unique;

    if (!grid.empty()) {
      const std::vector<double> g = parse_list(grid, "grid");
      if (g.size() != 3 || !(g[1] > g[0]) || g[2] < 2) throw InvalidArgument("grid must be lo:hi:count with lo < hi");
      lo = g[0];
      hi = g[1];
      count = static_cast<int>(g[2]);
    }
    json cuts = json::array();
    if (K >= 2) {
      std::vector<double> values(static_cast<std::size_t>(count));
      for (int k = 0; k < count; ++k) values[static_cast<std::size_t>(k)] = lo + (hi - lo) * k / (count - 1);
      const Index dq = QTransform::q_dim(K);
      if (component >= dq) throw InvalidArgument("component index out of range");
      const std::string prefix =
          !cut_prefix.empty() ? cut_prefix : (out_path == "-" ? std::string("cut") : stem(out_path) + "_cut");
      json meta = make_meta(config);
      for (Index l = 0; l < dq; ++l) {
        if (component >= 0 && l != component) continue;
        const std::vector<CutPoint> cut = set_cut(seed, l, values);
        const std::string file = prefix + "_" + q_label(K, l) + ".csv";
        std::ostringstream csv;
        csv << "# " << meta.dump() << "\n";
        write_cut_csv(csv, cut, K);
        write_text(file, csv.str(), out);
        cuts.push_back({{"q", q_label(K, l)}, {"index", l}, {"file", file}});
      }
    }
    report["cuts"] = cuts;
    write_text(out_path, dump(report), out);
    if (out_path != "-") {
      if (unique) out << "essentially unique: " << (*unique ? "true" : "false") << "\n";
      if (report.contains("bounds")) {
        out << "q12 in [" << report["bounds"]["q12"][0] << ", " << report["bounds"]["q12"][1] << "], q21 in ["
            << report["bounds"]["q21"][0] << ", " << report["bounds"]["q21"][1] << "]\n";
      }
    }
    return 0;
  }
};

// ---------------------------------------------------------------- bounds

struct BoundsCmd {
  std::string fit_path;
  std::string statistic;
  int sims = 1000;
  std::uint64_t rng_seed = 1;
  std::string levels = "0.05,0.5,0.95";
  std::string draws_csv;
  std::string out_path = "-";

  void add(CLI::App* sub) {
    sub->add_option("--fit", fit_path, "fit report with inference")->required()->check(CLI::ExistingFile);
    sub->add_option("--statistic", statistic, "entropy, detB, detC, q12 or q21 (default q12 for K = 2)");
    sub->add_option("--sims", sims, "number of parameter draws")->capture_default_str();
    sub->add_option("--rng-seed", rng_seed, "seed of the draws")->capture_default_str();
    sub->add_option("--levels", levels, "percentile levels")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join)->capture_default_str();
    sub->add_option("--draws-csv", draws_csv, "write the per-draw bounds to this CSV");
    sub->add_option("-o,--out", out_path, "JSON report ('-' for stdout)")->capture_default_str();
  }

  int run(const std::string& config, std::ostream& out) const {
    const json rep = load_json(fit_path);
    if (!rep.contains("fit") || !rep.contains("inference")) {
      throw InvalidArgument(fit_path + ": not a fit report with inference (rerun fit without --no-inference)");
    }
    const NormalizedNmf p = normalized_from_json(rep.at("fit").at("alpha_hat"));
    MatrixXd V, D;
    Index periods = 0;
    try {
      V = matrix_from_json(rep.at("inference").at("variance").at("V_alpha"));
      D = matrix_from_json(rep.at("inference").at("D"));
      periods = rep.at("inference").at("periods").get<Index>();
    } catch (const json::exception& e) {
      throw InvalidArgument(fit_path + ": malformed inference block (" + e.what() + ")");
    }
    const BoundStatistic stat = bound_statistic_from_string(
        statistic.empty() ? (p.rank() == 2 ? std::string("q12") : std::string("entropy")) : statistic);
    const BoundDistribution bd = bound_distribution(p, V, D, periods, stat, sims, rng_seed, parse_list(levels, "levels"));
    json report;
    report["meta"] = make_meta(config);
    report["meta"]["command"] = "bounds";
    report["bounds"] = to_json(bd);
    write_text(out_path, dump(report), out);
    if (!draws_csv.empty()) {
      std::ostringstream csv;
      csv << "# " << report["meta"].dump() << "\n" << std::setprecision(17) << "lower,upper\n";
      for (std::size_t i = 0; i < bd.lower.size(); ++i) csv << bd.lower[i] << ',' << bd.upper[i] << '\n';
      write_text(draws_csv, csv.str(), out);
    }
    if (out_path != "-") {
      out << to_string(stat) << " set [" << bd.point_lower << ", " << bd.point_upper << "], " << bd.lower.size()
          << " valid draws, " << bd.rejected << " rejected\n";
    }
    return 0;
  }
};

// ---------------------------------------------------------------- mc-study

struct McCmd {
  std::string truth_path;
  double scale_radius = 0.0;
  std::string family = "poisson";
  std::string intercept = "1";
  std::string t_grid = "500,2000,8000";
  int reps = 100;
  std::uint64_t master_seed = 1;
  Index burn_in = 200;
  bool calibration = false;
  bool coverage = false;
  std::string statistic = "entropy";
  int bound_sims = 200;
  double coverage_level = 0.9;
  int threads = 0;
  bool with_replications = false;
  std::string table_path;
  std::string out_path = "-";
  FitOptions opts;

  void add(CLI::App* sub) {
    sub->add_option("--truth", truth_path, "true factors (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--scale-radius", scale_radius, "rescale the truth to this spectral radius (0: keep)")
        ->capture_default_str();
    sub->add_option("--family", family, "poisson, exponential or static")->capture_default_str();
    sub->add_option("--intercept", intercept, "known intercept (autoregressive families; empty for none)")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join)
        ->capture_default_str();
    sub->add_option("--T-grid", t_grid, "sample sizes")
        ->multi_option_policy(CLI::MultiOptionPolicy::Join)->capture_default_str();
    sub->add_option("--reps", reps, "replications per sample size")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--master-seed", master_seed, "master seed")->capture_default_str();
    sub->add_option("--burn-in", burn_in, "discarded dates per replication")->capture_default_str();
    sub->add_flag("--calibration", calibration, "compare Monte Carlo and asymptotic variances");
    sub->add_flag("--coverage", coverage, "coverage of the upper-bound percentile interval");
    sub->add_option("--statistic", statistic, "bound statistic for --coverage")->capture_default_str();
    sub->add_option("--bound-sims", bound_sims, "draws per replication for --coverage")->capture_default_str();
    sub->add_option("--coverage-level", coverage_level, "nominal level of the interval")->capture_default_str();
    sub->add_option("--threads", threads, "worker threads (default: NETNMF_THREADS or all cores)");
    sub->add_flag("--with-replications", with_replications, "list every replication in the report");
    sub->add_option("--table", table_path, "CSV table of the per-T summary");
    sub->add_option("-o,--out", out_path, "JSON report ('-' for stdout)")->capture_default_str();
    opts.add(sub);
  }

  int run(const std::string& config, std::ostream& out) const {
    McConfig cfg;
    cfg.truth = load_alpha(truth_path);
    if (scale_radius > 0.0) {
      const double rho = spectral_radius(compose_alpha(cfg.truth));
      if (rho > 0.0) cfg.truth.a *= scale_radius / rho;
    }
    cfg.spec.family = family_from_string(family);
    cfg.spec.n = cfg.truth.rows();
    cfg.spec.m = cfg.truth.cols();
    if (cfg.spec.autoregressive()) cfg.spec.intercept = intercept_from(intercept, cfg.spec.n);
    cfg.T_grid.clear();
    for (double t : parse_list(t_grid, "T grid")) {
      if (t < 2 || t != std::floor(t)) throw InvalidArgument("T grid entries must be integers >= 2");
      cfg.T_grid.push_back(static_cast<Index>(t));
    }
    cfg.replications = reps;
    cfg.master_seed = master_seed;
    cfg.burn_in = burn_in;
    const Index K = cfg.truth.rank();
    cfg.fit = opts.config(K, 1);
    cfg.estimator = estimator_for(opts.estimator, K);
    cfg.calibration = calibration;
    cfg.coverage = coverage;
    cfg.statistic = bound_statistic_from_string(statistic);
    cfg.bound_sims = bound_sims;
    cfg.coverage_level = coverage_level;
    cfg.info.criterion = cfg.fit.criterion;
    cfg.info.boundary = policy_from(opts.boundary);
    cfg.threads = threads;
    const McReport r = run_mc_study(cfg);

    json report;
    report["meta"] = make_meta(config);
    report["meta"]["command"] = "mc-study";
    report["meta"]["master_seed"] = master_seed;
    report["study"] = to_json(r, with_replications);
    report["truth"] = to_json(cfg.truth);
    report["estimator"] = to_string(cfg.estimator);
    if (coverage) report["truth_statistic_upper"] = r.truth_statistic_upper;
    write_text(out_path, dump(report), out);
    if (!table_path.empty()) {
      std::ostringstream csv;
      csv << "# " << report["meta"].dump() << "\n" << std::setprecision(12)
          << "T,successes,failures,median_distance_A,median_set_distance,coverage\n";
      for (const auto& row : r.rows) {
        csv << row.T << ',' << row.successes << ',' << row.failures << ',' << row.median_distance_A << ','
            << row.median_set_distance << ',' << row.coverage << '\n';
      }
      write_text(table_path, csv.str(), out);
    }
    if (out_path != "-") {
      for (const auto& row : r.rows) {
        out << "T=" << row.T << " median |A-A0| " << row.median_distance_A << " failures " << row.failures << "\n";
      }
    }
    return 0;
  }
};

// ---------------------------------------------------------------- report

struct ReportCmd {
  std::string input;
  std::string x;
  std::vector<std::string> y;
  std::string title;
  std::string out_path;

  void add(CLI::App* sub) {
    sub->add_option("--input", input, "CSV with a header line (cut or mc-study table)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--x", x, "x column (default: the first)");
    sub->add_option("--y", y, "y columns (default: pi_1 when present, else every other column)");
    sub->add_option("--title", title, "chart title");
    sub->add_option("-o,--out", out_path, "SVG file ('-' for stdout)")->required();
  }

  int run(const std::string& config, std::ostream& out) const {
    const CsvTable table = read_csv_file(input);
    if (table.header.empty()) throw InvalidArgument(input + ": a header line is required");
    auto column = [&](const std::string& name) -> std::size_t {
      for (std::size_t k = 0; k < table.header.size(); ++k) {
        if (table.header[k] == name) return k;
      }
      throw InvalidArgument(input + ": no column named '" + name + "'");
    };
    const std::size_t xc = x.empty() ? 0 : column(x);
    std::vector<std::size_t> ycols;
    if (!y.empty()) {
      for (const auto& name : y) ycols.push_back(column(name));
    } else {
      for (std::size_t k = 0; k < table.header.size(); ++k) {
        if (table.header[k] == "pi_1") ycols = {k};
      }
      if (ycols.empty()) {
        for (std::size_t k = 0; k < table.header.size(); ++k) {
          if (k != xc) ycols.push_back(k);
        }
      }
    }
    LineChart chart;
    chart.x_label = table.header[xc];
    chart.y_label = ycols.size() == 1 ? table.header[ycols[0]] : "value";
    chart.title = title.empty() ? chart.y_label + " vs " + chart.x_label : title;
    for (std::size_t yc : ycols) {
      Series s;
      s.name = table.header[yc];
      for (const auto& row : table.rows) {
        s.x.push_back(row[xc]);
        s.y.push_back(row[yc]);
      }
      chart.series.push_back(std::move(s));
    }
    json meta = make_meta(config);
    meta["command"] = "report";
    meta["source"] = input;
    write_text(out_path, render_svg(chart, meta.dump()), out);
    if (out_path != "-") out << "wrote " << out_path << "\n";
    return 0;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"netnmf: probabilistic nonnegative matrix factorization for dynamic network models"};
  app.set_config("--config", "", "INI file; [command] sections set that command's options");
  app.set_version_flag("--version", std::string(NETNMF_VERSION));
  app.require_subcommand(1);

  SimulateCmd sim;
  FitCmd fitc;
  IdentifyCmd ident;
  BoundsCmd bounds;
  McCmd mc;
  ReportCmd rep;
  auto* s_sim = app.add_subcommand("simulate", "simulate a trajectory from a true matrix");
  auto* s_fit = app.add_subcommand("fit", "estimate the factorization and its asymptotic variance");
  auto* s_id = app.add_subcommand("identify-set", "describe the identified set of a factorization");
  auto* s_bd = app.add_subcommand("bounds", "sampling distribution of identified-set bounds");
  auto* s_mc = app.add_subcommand("mc-study", "Monte Carlo study over a grid of sample sizes");
  auto* s_rep = app.add_subcommand("report", "render a CSV table as an SVG line chart");
  sim.add(s_sim);
  fitc.add(s_fit);
  ident.add(s_id);
  bounds.add(s_bd);
  mc.add(s_mc);
  rep.add(s_rep);

  std::vector<const char*> argv;
  argv.push_back("netnmf");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    auto config_of = [](CLI::App* sub) { return sub->get_name() + "\n" + sub->config_to_str(true, false); };
    if (s_sim->parsed()) return sim.run(config_of(s_sim), out);
    if (s_fit->parsed()) return fitc.run(config_of(s_fit), out);
    if (s_id->parsed()) return ident.run(config_of(s_id), out);
    if (s_bd->parsed()) return bounds.run(config_of(s_bd), out);
    if (s_mc->parsed()) return mc.run(config_of(s_mc), out);
    if (s_rep->parsed()) return rep.run(config_of(s_rep), out);
  } catch (const InputError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace netnmf::cli
