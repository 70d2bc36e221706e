#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "designbench/assignment.hpp"
#include "designbench/montecarlo.hpp"
#include "designbench/oracle.hpp"
#include "designbench/population.hpp"

namespace designbench {

// Insertion-ordered JSON keeps emitted documents stable byte for byte.
using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form of a double, e.g. for CSV cells.
inline std::string format_double(double value) {
  return Json(value).dump();
}

inline Json to_json(const PopulationSpec& spec) {
  Json strata = Json::array();
  for (const Stratum& s : spec.strata()) {
    strata.push_back({{"y1", s.latents.y1},
                      {"y0", s.latents.y0},
                      {"x", s.latents.x},
                      {"u", s.latents.u},
                      {"weight", format_rational(s.weight)}});
  }
  return Json{{"strata", std::move(strata)}};
}

inline PopulationSpec population_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("strata") || !doc["strata"].is_array()) {
    throw std::invalid_argument("population document needs a top-level \"strata\" array");
  }
  std::vector<Stratum> strata;
  for (const Json& item : doc["strata"]) {
    Stratum s;
    try {
      s.latents.y1 = item.at("y1").get<double>();
      s.latents.y0 = item.at("y0").get<double>();
      s.latents.x = item.at("x").get<int>();
      s.latents.u = item.at("u").get<int>();
      s.weight = parse_rational(item.at("weight").get<std::string>());
    } catch (const Json::exception& e) {
      throw std::invalid_argument("stratum " + std::to_string(strata.size()) + ": " +
                                  e.what());
    }
    strata.push_back(std::move(s));
  }
  return PopulationSpec(std::move(strata));
}

inline const char* dependence_name(Dependence dependence) {
  return dependence == Dependence::kSharedGlobalDraw ? "shared_global_draw" : "independent";
}

inline Json to_json(const Mechanism& mech) {
  Json doc{{"kind", mechanism_kind_name(mech.kind())},
           {"dependence", dependence_name(mech.dependence())}};
  const auto latents_json = [](const Latents& latents) {
    return Json{{"y1", latents.y1}, {"y0", latents.y0}, {"x", latents.x}, {"u", latents.u}};
  };
  switch (mech.kind()) {
    case MechanismKind::kConstantProb:
    case MechanismKind::kGlobalCoin:
      doc["p"] = mech.coin_probability();
      break;
    case MechanismKind::kOutcomeProportional:
      doc["reference_mean"] = mech.reference_mean();
      break;
    case MechanismKind::kCovariateFn: {
      Json table = Json::array();
      for (const auto& [x, p] : mech.covariate_table()) {
        table.push_back({{"x", x}, {"p", p}});
      }
      doc["table"] = std::move(table);
      break;
    }
    case MechanismKind::kLatentFn: {
      Json table = Json::array();
      for (const auto& [latents, p] : mech.latent_table()) {
        Json row = latents_json(latents);
        row["p"] = p;
        table.push_back(std::move(row));
      }
      doc["table"] = std::move(table);
      break;
    }
    case MechanismKind::kDeterministic: {
      Json table = Json::array();
      for (const auto& [latents, w] : mech.deterministic_table()) {
        Json row = latents_json(latents);
        row["w"] = w;
        table.push_back(std::move(row));
      }
      doc["table"] = std::move(table);
      break;
    }
  }
  return doc;
}

inline Mechanism mechanism_from_json(const Json& doc) {
  if (!doc.is_object() || !doc.contains("kind")) {
    throw std::invalid_argument("mechanism document needs a \"kind\" field");
  }
  const std::string kind = doc["kind"].get<std::string>();
  const auto parse_latents = [](const Json& row) {
    return Latents{row.at("y1").get<double>(), row.at("y0").get<double>(),
                   row.at("x").get<int>(), row.at("u").get<int>()};
  };
  const auto rows = [&](const char* payload) -> const Json& {
    if (!doc.contains("table") || !doc["table"].is_array() || doc["table"].empty()) {
      throw std::invalid_argument(std::string("mechanism kind \"") + payload +
                                  "\" needs a non-empty \"table\" array");
    }
    return doc["table"];
  };

  Mechanism mech = [&]() {
    try {
      if (kind == "constant_prob") return Mechanism::constant_prob(doc.at("p").get<double>());
      if (kind == "global_coin") return Mechanism::global_coin(doc.at("p").get<double>());
      if (kind == "outcome_proportional") {
        return Mechanism::outcome_proportional(doc.at("reference_mean").get<double>());
      }
      if (kind == "covariate_fn") {
        CovariateTable table;
        for (const Json& row : rows("covariate_fn")) {
          table.emplace_back(row.at("x").get<int>(), row.at("p").get<double>());
        }
        return Mechanism::covariate_fn(std::move(table));
      }
      if (kind == "latent_fn") {
        LatentProbTable table;
        for (const Json& row : rows("latent_fn")) {
          table.emplace_back(parse_latents(row), row.at("p").get<double>());
        }
        return Mechanism::latent_fn(std::move(table));
      }
      if (kind == "deterministic") {
        LatentBinTable table;
        for (const Json& row : rows("deterministic")) {
          table.emplace_back(parse_latents(row), row.at("w").get<int>());
        }
        return Mechanism::deterministic(std::move(table));
      }
      throw std::invalid_argument("unknown mechanism kind \"" + kind + "\"");
    } catch (const Json::exception& e) {
      throw std::invalid_argument("mechanism kind \"" + kind + "\": " + e.what());
    }
  }();

  if (doc.contains("dependence")) {
    const std::string dependence = doc["dependence"].get<std::string>();
    if (dependence != dependence_name(mech.dependence())) {
      throw std::invalid_argument("mechanism kind \"" + kind + "\" requires dependence \"" +
                                  dependence_name(mech.dependence()) + "\", got \"" +
                                  dependence + "\"");
    }
  }
  return mech;
}

namespace detail {

inline Json covariate_table_json(const CovariateTable& table) {
  Json doc = Json::object();
  for (const auto& [x, value] : table) {
    doc[std::to_string(x)] = value;
  }
  return doc;
}

inline void put_tristate(Json& doc, const std::string& key, const TriState& state) {
  switch (state.verdict) {
    case Verdict::kTrue: doc[key] = true; break;
    case Verdict::kFalse: doc[key] = false; break;
    case Verdict::kUndefined: doc[key] = nullptr; break;
  }
  doc[key + "_reason"] = state.reason;
}

inline void put_reported(Json& doc, const std::string& key, const ReportedValue& reported) {
  if (reported.value.has_value()) {
    doc[key] = *reported.value;
  } else {
    doc[key] = nullptr;
  }
  doc[key + "_reason"] = reported.reason;
}

}  // namespace detail

inline Json to_json(const DesignReport& report) {
  Json doc;
  doc["randomized"] = report.randomized;
  doc["gamma"] = report.gamma;
  doc["positivity"] = report.positivity;
  doc["overlap"] = report.overlap;
  detail::put_tristate(doc, "unconditionally_unconfounded",
                       report.unconditionally_unconfounded);
  detail::put_tristate(doc, "conditionally_unconfounded", report.conditionally_unconfounded);
  doc["ate"] = report.ate;
  doc["propensity_by_x"] = detail::covariate_table_json(report.propensity_by_x);
  doc["unconditional_propensity"] = report.unconditional_propensity;
  detail::put_reported(doc, "dim_limit", report.dim_limit);
  detail::put_reported(doc, "ht_normalized_variance", report.ht_normalized_variance);
  return doc;
}

inline Json to_json(const McResult& result) {
  return Json{{"estimator_id", std::string(estimator_name(result.estimator))},
              {"n", result.sample_size},
              {"replications", result.replications},
              {"failures", result.failures},
              {"mean", result.mean},
              {"variance", result.variance},
              {"normalized_variance", result.normalized_variance},
              {"std_error_of_mean", result.std_error_of_mean},
              {"master_seed", result.master_seed}};
}

inline std::string mc_result_csv_header() {
  return "estimator_id,n,replications,failures,mean,variance,normalized_variance,"
         "std_error_of_mean,master_seed";
}

inline std::string mc_result_csv_row(const McResult& result) {
  std::string row;
  row += estimator_name(result.estimator);
  row += ',' + std::to_string(result.sample_size);
  row += ',' + std::to_string(result.replications);
  row += ',' + std::to_string(result.failures);
  row += ',' + format_double(result.mean);
  row += ',' + format_double(result.variance);
  row += ',' + format_double(result.normalized_variance);
  row += ',' + format_double(result.std_error_of_mean);
  row += ',' + std::to_string(result.master_seed);
  return row;
}

}  // namespace designbench
