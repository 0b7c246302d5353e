#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "netnmf/estim.hpp"
#include "netnmf/identset.hpp"
#include "netnmf/infer.hpp"
#include "netnmf/montecarlo.hpp"

namespace netnmf {

using nlohmann::json;

/// 64-bit FNV-1a.
std::uint64_t fnv1a(const std::string& text);
std::string hex64(std::uint64_t v);

/// {"tool": "netnmf", "version": ..., "config_hash": fnv1a(config_text)}
json make_meta(const std::string& config_text);

json to_json(const NormalizedNmf& p);
NormalizedNmf normalized_from_json(const json& j);
json to_json(const Nmf& f);
Nmf nmf_from_json(const json& j);

json to_json(const K2Bounds& b);
json to_json(const FitResult& r);
json to_json(const RankDiagnostic& d);
json to_json(const AsymptoticVariance& v);
json to_json(const BoundDistribution& d, bool with_draws = false);
json to_json(const std::vector<ComponentRanking>& ranking);
json to_json(const McReport& r, bool with_replications = false);

/// Non-finite doubles become null so the output stays valid JSON.
json number(double x);

}  // namespace netnmf
