#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "designbench/errors.hpp"
#include "designbench/population.hpp"

namespace designbench {

struct Sample {
  std::vector<SampleObservation> observations;
};

enum class EstimatorId { kDiffInMeans, kHorvitzThompson, kIpwPropensity, kHajek };

inline std::string_view estimator_name(EstimatorId id) {
  switch (id) {
    case EstimatorId::kDiffInMeans: return "dim";
    case EstimatorId::kHorvitzThompson: return "ht";
    case EstimatorId::kIpwPropensity: return "ipw_x";
    case EstimatorId::kHajek: return "hajek";
  }
  return "unknown";
}

inline std::optional<EstimatorId> parse_estimator(std::string_view name) {
  if (name == "dim") return EstimatorId::kDiffInMeans;
  if (name == "ht") return EstimatorId::kHorvitzThompson;
  if (name == "ipw_x") return EstimatorId::kIpwPropensity;
  if (name == "hajek") return EstimatorId::kHajek;
  return std::nullopt;
}

namespace detail {

inline void require_non_empty(const Sample& sample) {
  if (sample.observations.empty()) {
    throw std::invalid_argument("sample must contain at least one observation");
  }
}

inline void require_positivity(const Sample& sample) {
  for (const SampleObservation& obs : sample.observations) {
    if (!(obs.p > 0.0 && obs.p < 1.0)) {
      throw PositivityError("observation has treatment probability " +
                            std::to_string(obs.p) + "; need 0 < p < 1");
    }
  }
}

}  // namespace detail

// Mean outcome among treated minus mean outcome among controls.
inline double diff_in_means(const Sample& sample) {
  detail::require_non_empty(sample);
  double treated_sum = 0.0, control_sum = 0.0;
  std::size_t treated_count = 0, control_count = 0;
  for (const SampleObservation& obs : sample.observations) {
    if (obs.w == 1) {
      treated_sum += obs.y;
      ++treated_count;
    } else {
      control_sum += obs.y;
      ++control_count;
    }
  }
  if (treated_count == 0) throw EmptyArmError(Arm::kTreated);
  if (control_count == 0) throw EmptyArmError(Arm::kControl);
  return treated_sum / static_cast<double>(treated_count) -
         control_sum / static_cast<double>(control_count);
}

// Inverse probability weighting with the true treatment probabilities:
// (1/n) sum w y / p  -  (1/n) sum (1-w) y / (1-p). Unbiased for the average
// treatment effect whenever 0 < p < 1 for all units, regardless of how the
// probabilities were chosen.
inline double horvitz_thompson(const Sample& sample) {
  detail::require_non_empty(sample);
  detail::require_positivity(sample);
  const double n = static_cast<double>(sample.observations.size());
  double treated_sum = 0.0, control_sum = 0.0;
  for (const SampleObservation& obs : sample.observations) {
    if (obs.w == 1) {
      treated_sum += obs.y / obs.p;
    } else {
      control_sum += obs.y / (1.0 - obs.p);
    }
  }
  return treated_sum / n - control_sum / n;
}

// Inverse probability weighting with a covariate-based score substituted for
// the unit-level treatment probability. Consistent only under conditional
// unconfoundedness given X.
inline double ipw_propensity(const Sample& sample, const CovariateTable& score_by_x) {
  detail::require_non_empty(sample);
  const double n = static_cast<double>(sample.observations.size());
  double treated_sum = 0.0, control_sum = 0.0;
  for (const SampleObservation& obs : sample.observations) {
    const double* score = table_lookup(score_by_x, obs.x);
    if (score == nullptr) {
      throw std::domain_error("no propensity score for covariate level x=" +
                              std::to_string(obs.x));
    }
    if (!(*score > 0.0 && *score < 1.0)) {
      throw std::domain_error("propensity score " + std::to_string(*score) +
                              " for x=" + std::to_string(obs.x) + " is not in (0, 1)");
    }
    if (obs.w == 1) {
      treated_sum += obs.y / *score;
    } else {
      control_sum += obs.y / (1.0 - *score);
    }
  }
  return treated_sum / n - control_sum / n;
}

// Ratio-normalized inverse probability weighting: divides each arm by its
// realized weight total instead of n, adjusting for the drawn number of
// treated units.
inline double hajek(const Sample& sample) {
  detail::require_non_empty(sample);
  detail::require_positivity(sample);
  double treated_sum = 0.0, treated_weight = 0.0;
  double control_sum = 0.0, control_weight = 0.0;
  std::size_t treated_count = 0, control_count = 0;
  for (const SampleObservation& obs : sample.observations) {
    if (obs.w == 1) {
      treated_sum += obs.y / obs.p;
      treated_weight += 1.0 / obs.p;
      ++treated_count;
    } else {
      control_sum += obs.y / (1.0 - obs.p);
      control_weight += 1.0 / (1.0 - obs.p);
      ++control_count;
    }
  }
  if (treated_count == 0) throw EmptyArmError(Arm::kTreated);
  if (control_count == 0) throw EmptyArmError(Arm::kControl);
  return treated_sum / treated_weight - control_sum / control_weight;
}

}  // namespace designbench
