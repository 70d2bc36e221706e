#pragma once

#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "designbench/population.hpp"
#include "designbench/rng.hpp"

namespace designbench {

enum class MechanismKind {
  kConstantProb,
  kCovariateFn,
  kLatentFn,
  kDeterministic,
  kGlobalCoin,
  kOutcomeProportional,
};

enum class Dependence { kIndependentAcrossUnits, kSharedGlobalDraw };

// Latent-tuple tables, sorted insertion order preserved. Lookups are linear;
// tables enumerate a handful of strata.
using LatentProbTable = std::vector<std::pair<Latents, double>>;
using LatentBinTable = std::vector<std::pair<Latents, int>>;

namespace mech_params {

struct ConstantProb {
  double p;
};
struct CovariateFn {
  CovariateTable table;
};
struct LatentFn {
  LatentProbTable table;
};
struct Deterministic {
  LatentBinTable table;
};
struct GlobalCoin {
  double p;
};
// p = y1 / (2 * reference_mean); valid only while 0 < y1 < 2 * reference_mean.
struct OutcomeProportional {
  double reference_mean;
};

}  // namespace mech_params

// A treatment-assignment rule: how each unit's treatment probability is
// determined from its latents, and whether units draw independently or share
// one global draw.
class Mechanism {
 public:
  static Mechanism constant_prob(double p) {
    check_interior(p, "constant probability");
    return Mechanism(mech_params::ConstantProb{p});
  }

  static Mechanism covariate_fn(CovariateTable table) {
    if (table.empty()) {
      throw std::invalid_argument("covariate mechanism needs a non-empty table");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      check_interior(table[i].second,
                     "covariate probability for x=" + std::to_string(table[i].first));
      for (std::size_t j = i + 1; j < table.size(); ++j) {
        if (table[i].first == table[j].first) {
          throw std::invalid_argument("duplicate covariate level x=" +
                                      std::to_string(table[i].first));
        }
      }
    }
    return Mechanism(mech_params::CovariateFn{std::move(table)});
  }

  static Mechanism latent_fn(LatentProbTable table) {
    if (table.empty()) {
      throw std::invalid_argument("latent mechanism needs a non-empty table");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      const double p = table[i].second;
      if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("latent-table probability outside [0, 1]");
      }
      for (std::size_t j = i + 1; j < table.size(); ++j) {
        if (table[i].first == table[j].first) {
          throw std::invalid_argument("duplicate latent tuple in mechanism table");
        }
      }
    }
    return Mechanism(mech_params::LatentFn{std::move(table)});
  }

  static Mechanism deterministic(LatentBinTable table) {
    if (table.empty()) {
      throw std::invalid_argument("deterministic mechanism needs a non-empty table");
    }
    for (std::size_t i = 0; i < table.size(); ++i) {
      if (table[i].second != 0 && table[i].second != 1) {
        throw std::invalid_argument("deterministic table entries must be 0 or 1");
      }
      for (std::size_t j = i + 1; j < table.size(); ++j) {
        if (table[i].first == table[j].first) {
          throw std::invalid_argument("duplicate latent tuple in mechanism table");
        }
      }
    }
    return Mechanism(mech_params::Deterministic{std::move(table)});
  }

  static Mechanism global_coin(double p) {
    check_interior(p, "coin probability");
    return Mechanism(mech_params::GlobalCoin{p});
  }

  static Mechanism outcome_proportional(double reference_mean) {
    if (!(reference_mean > 0.0) || !std::isfinite(reference_mean)) {
      throw std::invalid_argument("reference mean must be positive and finite");
    }
    return Mechanism(mech_params::OutcomeProportional{reference_mean});
  }

  MechanismKind kind() const { return static_cast<MechanismKind>(params_.index()); }

  Dependence dependence() const {
    return kind() == MechanismKind::kGlobalCoin ? Dependence::kSharedGlobalDraw
                                                : Dependence::kIndependentAcrossUnits;
  }

  // Parameter accessors; each is valid only for the matching kind.
  double coin_probability() const {
    if (const auto* c = std::get_if<mech_params::ConstantProb>(&params_)) return c->p;
    return std::get<mech_params::GlobalCoin>(params_).p;
  }
  double reference_mean() const {
    return std::get<mech_params::OutcomeProportional>(params_).reference_mean;
  }
  const CovariateTable& covariate_table() const {
    return std::get<mech_params::CovariateFn>(params_).table;
  }
  const LatentProbTable& latent_table() const {
    return std::get<mech_params::LatentFn>(params_).table;
  }
  const LatentBinTable& deterministic_table() const {
    return std::get<mech_params::Deterministic>(params_).table;
  }

 private:
  using Params =
      std::variant<mech_params::ConstantProb, mech_params::CovariateFn, mech_params::LatentFn,
                   mech_params::Deterministic, mech_params::GlobalCoin,
                   mech_params::OutcomeProportional>;

  explicit Mechanism(Params params) : params_(std::move(params)) {}

  static void check_interior(double p, const std::string& what) {
    if (!(p > 0.0 && p < 1.0)) {
      throw std::invalid_argument(what + " must lie strictly between 0 and 1");
    }
  }

  Params params_;
};

inline const char* mechanism_kind_name(MechanismKind kind) {
  switch (kind) {
    case MechanismKind::kConstantProb: return "constant_prob";
    case MechanismKind::kCovariateFn: return "covariate_fn";
    case MechanismKind::kLatentFn: return "latent_fn";
    case MechanismKind::kDeterministic: return "deterministic";
    case MechanismKind::kGlobalCoin: return "global_coin";
    case MechanismKind::kOutcomeProportional: return "outcome_proportional";
  }
  return "unknown";
}

namespace detail {

inline std::string latents_string(const Latents& latents) {
  return "(y1=" + std::to_string(latents.y1) + ", y0=" + std::to_string(latents.y0) +
         ", x=" + std::to_string(latents.x) + ", u=" + std::to_string(latents.u) + ")";
}

template <typename Table>
const typename Table::value_type::second_type* find_latents(const Table& table,
                                                            const Latents& latents) {
  for (const auto& entry : table) {
    if (entry.first == latents) return &entry.second;
  }
  return nullptr;
}

}  // namespace detail

// Probability that a unit with the given latents is treated. For the global
// coin this is the coin probability, identical for every unit.
inline double treatment_probability(const Mechanism& mech, const Latents& latents) {
  switch (mech.kind()) {
    case MechanismKind::kConstantProb:
    case MechanismKind::kGlobalCoin:
      return mech.coin_probability();
    case MechanismKind::kCovariateFn: {
      const double* p = table_lookup(mech.covariate_table(), latents.x);
      if (p == nullptr) {
        throw std::domain_error("mechanism has no probability for covariate level x=" +
                                std::to_string(latents.x));
      }
      return *p;
    }
    case MechanismKind::kLatentFn: {
      const double* p = detail::find_latents(mech.latent_table(), latents);
      if (p == nullptr) {
        throw std::domain_error("mechanism has no probability for latent tuple " +
                                detail::latents_string(latents));
      }
      return *p;
    }
    case MechanismKind::kDeterministic: {
      const int* w = detail::find_latents(mech.deterministic_table(), latents);
      if (w == nullptr) {
        throw std::domain_error("mechanism has no assignment for latent tuple " +
                                detail::latents_string(latents));
      }
      return static_cast<double>(*w);
    }
    case MechanismKind::kOutcomeProportional: {
      const double bound = 2.0 * mech.reference_mean();
      if (!(latents.y1 > 0.0 && latents.y1 < bound)) {
        throw std::domain_error("outcome-proportional mechanism needs 0 < y1 < " +
                                std::to_string(bound) + ", got y1=" +
                                std::to_string(latents.y1));
      }
      return latents.y1 / bound;
    }
  }
  throw std::logic_error("unreachable mechanism kind");
}

// Realizes treatments for a list of units. Independent mechanisms draw one
// uniform per unit; the global coin draws a single uniform shared by all
// units; deterministic mechanisms consume no randomness at all.
inline std::vector<int> assign(const Mechanism& mech, const std::vector<Latents>& units,
                               std::mt19937_64& rng) {
  std::vector<int> treatments(units.size());
  switch (mech.dependence()) {
    case Dependence::kSharedGlobalDraw: {
      const int w = next_unit(rng) < mech.coin_probability() ? 1 : 0;
      std::fill(treatments.begin(), treatments.end(), w);
      return treatments;
    }
    case Dependence::kIndependentAcrossUnits: {
      if (mech.kind() == MechanismKind::kDeterministic) {
        for (std::size_t i = 0; i < units.size(); ++i) {
          treatments[i] = static_cast<int>(treatment_probability(mech, units[i]));
        }
        return treatments;
      }
      for (std::size_t i = 0; i < units.size(); ++i) {
        const double p = treatment_probability(mech, units[i]);
        treatments[i] = next_unit(rng) < p ? 1 : 0;
      }
      return treatments;
    }
  }
  throw std::logic_error("unreachable dependence kind");
}

struct RandomizationCheck {
  bool randomized = false;
  // Largest margin g with g <= min(p, 1-p) attained over positive-weight
  // strata; 0 exactly when some unit is assigned deterministically.
  double gamma = 0.0;
};

inline RandomizationCheck is_randomized(const Mechanism& mech, const PopulationSpec& spec) {
  double gamma = 1.0;
  for (const Stratum& s : spec.strata()) {
    if (!(s.weight > Rational(0))) continue;
    const double p = treatment_probability(mech, s.latents);
    gamma = std::min(gamma, std::min(p, 1.0 - p));
  }
  return RandomizationCheck{gamma > 0.0, gamma};
}

}  // namespace designbench
