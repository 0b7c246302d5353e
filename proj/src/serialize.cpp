#include "netnmf/serialize.hpp"

#include <cmath>
#include <cstdio>

#include "netnmf/matrix_io.hpp"

namespace netnmf {

namespace {

json numbers(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(number(x));
  return out;
}

json numbers(const VectorXd& v) {
  json out = json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
  return out;
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

json make_meta(const std::string& config_text) {
  return {{"tool", "netnmf"}, {"version", NETNMF_VERSION}, {"config_hash", hex64(fnv1a(config_text))}};
}

json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

json to_json(const NormalizedNmf& p) {
  return {{"a", p.a},
          {"pi", vector_to_json(p.pi)},
          {"beta_star", matrix_to_json(p.beta_star)},
          {"gamma_star", matrix_to_json(p.gamma_star)}};
}

NormalizedNmf normalized_from_json(const json& j) {
  try {
    NormalizedNmf p;
    p.a = j.at("a").get<double>();
    p.pi = vector_from_json(j.at("pi"));
    p.beta_star = matrix_from_json(j.at("beta_star"));
    p.gamma_star = matrix_from_json(j.at("gamma_star"));
    p.validate(1e-8);
    return p;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed normalized factorization: ") + e.what());
  }
}

json to_json(const Nmf& f) { return {{"B", matrix_to_json(f.B)}, {"C", matrix_to_json(f.C)}}; }

Nmf nmf_from_json(const json& j) {
  try {
    Nmf f{matrix_from_json(j.at("B")), matrix_from_json(j.at("C"))};
    f.validate();
    return f;
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("malformed factorization: ") + e.what());
  }
}

json to_json(const K2Bounds& b) {
  return {{"q12", {number(b.q12_lo), number(b.q12_hi)}},
          {"q21", {number(b.q21_lo), number(b.q21_hi)}},
          {"collapsed", b.collapsed()}};
}

json to_json(const FitResult& r) {
  json q_path = json::array();
  for (const auto& q : r.q_path) q_path.push_back(numbers(q));
  return {{"method", r.method},
          {"alpha_hat", to_json(r.alpha_hat)},
          {"A_hat", matrix_to_json(compose_alpha(r.alpha_hat))},
          {"loglik", number(r.loglik)},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"boundary_optimum", r.boundary_optimum},
          {"multipliers", numbers(r.multipliers)},
          {"loglik_path", numbers(r.loglik_path)},
          {"criterion_path", numbers(r.criterion_path)},
          {"step_norms", numbers(r.step_norms)},
          {"transform_loglik_change", numbers(r.transform_loglik_change)},
          {"q_path", q_path}};
}

json to_json(const RankDiagnostic& d) {
  return {{"rank", d.rank},           {"expected", d.expected}, {"pass", d.pass},
          {"threshold", d.threshold}, {"gap", number(d.gap)},   {"singular_values", numbers(d.singular_values)}};
}

json to_json(const AsymptoticVariance& v) {
  json out = {{"periods", v.periods},
              {"route_discrepancy", v.route_discrepancy},
              {"se_alpha", numbers(v.se_alpha)},
              {"V_alpha", matrix_to_json(v.V_alpha)},
              {"V_alpha_equality", matrix_to_json(v.V_alpha_equality)}};
  if (v.V_A.size()) {
    out["V_A"] = matrix_to_json(v.V_A);
    out["V_A_equality"] = matrix_to_json(v.V_A_equality);
    out["se_A"] = matrix_to_json(v.se_A);
    out["rank_V_A"] = v.rank_V_A;
  }
  return out;
}

json to_json(const BoundDistribution& d, bool with_draws) {
  json out = {{"statistic", to_string(d.statistic)},
              {"point", {number(d.point_lower), number(d.point_upper)}},
              {"levels", d.levels},
              {"lower_percentiles", numbers(d.lower_percentiles)},
              {"upper_percentiles", numbers(d.upper_percentiles)},
              {"requested", d.requested},
              {"rejected", d.rejected},
              {"valid", d.lower.size()}};
  if (with_draws) {
    out["lower"] = numbers(d.lower);
    out["upper"] = numbers(d.upper);
  }
  return out;
}

json to_json(const std::vector<ComponentRanking>& ranking) {
  json out = json::array();
  for (const auto& c : ranking) {
    auto table = [](const std::vector<RankingEntry>& entries) {
      json t = json::array();
      for (const auto& e : entries) t.push_back({{"index", e.index + 1}, {"value", e.value}});
      return t;
    };
    out.push_back({{"component", c.component + 1},
                   {"vulnerability", table(c.vulnerability)},
                   {"viral_load", table(c.viral_load)}});
  }
  return out;
}

json to_json(const McReport& r, bool with_replications) {
  json rows = json::array();
  for (const auto& row : r.rows) {
    json j = {{"T", row.T},
              {"successes", row.successes},
              {"failures", row.failures},
              {"median_distance_A", number(row.median_distance_A)},
              {"median_set_distance", number(row.median_set_distance)}};
    if (row.variance_ratio_alpha.size()) {
      j["variance_ratio_alpha"] = numbers(row.variance_ratio_alpha);
      j["variance_ratio_A"] = numbers(row.variance_ratio_A);
    }
    if (row.coverage_trials) {
      j["coverage"] = row.coverage;
      j["coverage_trials"] = row.coverage_trials;
    }
    rows.push_back(j);
  }
  json out = {{"rows", rows}};
  if (with_replications) {
    json reps = json::array();
    for (const auto& rep : r.replications) {
      json j = {{"T", rep.T}, {"rep", rep.rep}, {"seed", rep.seed}, {"ok", rep.ok}};
      if (rep.ok) {
        j["distance_A"] = rep.distance_A;
        j["set_distance"] = number(rep.set_distance);
        j["loglik"] = number(rep.loglik);
        j["iterations"] = rep.iterations;
      } else {
        j["error"] = rep.error;
      }
      reps.push_back(j);
    }
    out["replications"] = reps;
  }
  return out;
}

}  // namespace netnmf
