#pragma once

// JSON run configuration:
//   {"payoffs": {"T": 5, "R": 3, "P": 1, "S": 0}, "cost": 0.04, "mu": 0.08,
//    "mutation": {"pattern": "alld_to_allc"}}   or   {"matrix": [[...], [...], [...]]}

#include <fstream>
#include <string>

#include <json.hpp>

#include "repmut/dynamics.hpp"

namespace repmut {

struct RunConfig {
  ModelParams params;
  MutationSpec mutation = MutationSpec::from_pattern(MutationPattern::none);
  SystemId system = SystemId::replicator;

  VectorField field() const { return VectorField::make(system, params, mutation); }
};

/// Named system for a pattern; everything else runs on the general form.
inline SystemId system_for(MutationPattern p) {
  switch (p) {
    case MutationPattern::none: return SystemId::replicator;
    case MutationPattern::tft_to_allc: return SystemId::tft_to_allc;
    case MutationPattern::alld_to_allc: return SystemId::alld_to_allc;
    case MutationPattern::uniform: return SystemId::uniform;
    default: return SystemId::general;
  }
}

inline MutationPattern pattern_for(SystemId id) {
  switch (id) {
    case SystemId::replicator: return MutationPattern::none;
    case SystemId::tft_to_allc: return MutationPattern::tft_to_allc;
    case SystemId::alld_to_allc: return MutationPattern::alld_to_allc;
    case SystemId::uniform: return MutationPattern::uniform;
    case SystemId::general: return MutationPattern::custom;
  }
  return MutationPattern::custom;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  RunConfig rc;
  try {
    if (!j.is_object()) throw InvalidArgument("config must be a JSON object");
    if (j.contains("payoffs")) {
      const auto& p = j.at("payoffs");
      rc.params.payoffs.T = p.value("T", rc.params.payoffs.T);
      rc.params.payoffs.R = p.value("R", rc.params.payoffs.R);
      rc.params.payoffs.P = p.value("P", rc.params.payoffs.P);
      rc.params.payoffs.S = p.value("S", rc.params.payoffs.S);
    }
    rc.params.cost = j.value("cost", 0.0);
    rc.params.mu = j.value("mu", 0.0);
    if (j.contains("mutation")) {
      const auto& m = j.at("mutation");
      if (m.contains("matrix")) {
        Eigen::Matrix3d a;
        const auto& rows = m.at("matrix");
        if (rows.size() != 3) throw InvalidArgument("mutation.matrix must be 3x3");
        for (int i = 0; i < 3; ++i) {
          if (rows[i].size() != 3) throw InvalidArgument("mutation.matrix must be 3x3");
          for (int k = 0; k < 3; ++k) a(i, k) = rows[i][k].get<double>();
        }
        rc.mutation = MutationSpec::custom(a);
      } else {
        rc.mutation = MutationSpec::from_pattern(parse_mutation_pattern(m.at("pattern").get<std::string>()));
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("config: ") + e.what());
  }
  rc.system = system_for(rc.mutation.pattern());
  rc.params.validate();
  mutation_q(rc.mutation, rc.params.mu);
  return rc;
}

inline nlohmann::json to_json(const RunConfig& rc) {
  nlohmann::json j;
  const auto& p = rc.params.payoffs;
  j["payoffs"] = {{"T", p.T}, {"R", p.R}, {"P", p.P}, {"S", p.S}};
  j["cost"] = rc.params.cost;
  j["mu"] = rc.params.mu;
  if (rc.mutation.pattern() == MutationPattern::custom) {
    const auto& m = rc.mutation.matrix();
    nlohmann::json rows = nlohmann::json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    j["mutation"] = {{"matrix", rows}};
  } else {
    j["mutation"] = {{"pattern", std::string(to_string(rc.mutation.pattern()))}};
  }
  return j;
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("config " + path + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace repmut
