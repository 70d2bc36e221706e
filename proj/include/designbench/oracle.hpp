#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "designbench/assignment.hpp"
#include "designbench/errors.hpp"
#include "designbench/population.hpp"

namespace designbench {

// Tolerance for comparisons along exact enumeration paths: the sums involve
// at most a few hundred double terms, far below this bound.
inline constexpr double kExactTolerance = 1e-12;

struct JointEntry {
  Stratum stratum;
  double p = 0.0;  // treatment probability of the stratum
  int w = 0;
  double prob = 0.0;  // probability of (stratum, w) within its component
};

// One branch of the assignment randomness. Independent mechanisms need a
// single component of weight 1; a shared global draw needs one component per
// coin outcome, weighted by the coin.
struct JointComponent {
  double mixture_weight = 1.0;
  std::vector<JointEntry> entries;
};

// Exact joint law of (Y(1), Y(0), X, U, W) for one sample observation.
class JointTable {
 public:
  explicit JointTable(std::vector<JointComponent> components)
      : components_(std::move(components)) {}

  const std::vector<JointComponent>& components() const { return components_; }

  bool from_shared_draw() const { return components_.size() > 1; }

  // Single-observation law with component probabilities folded in.
  std::vector<JointEntry> flattened() const {
    std::vector<JointEntry> flat;
    for (const JointComponent& component : components_) {
      for (JointEntry entry : component.entries) {
        entry.prob *= component.mixture_weight;
        flat.push_back(entry);
      }
    }
    return flat;
  }

  double pr_w(int w) const {
    double mass = 0.0;
    for (const JointEntry& entry : flattened()) {
      if (entry.w == w) mass += entry.prob;
    }
    return mass;
  }

 private:
  std::vector<JointComponent> components_;
};

// Exact joint law of one sample observation under the mechanism. Strata with
// zero weight and assignment outcomes with zero probability are omitted.
inline JointTable joint_distribution(const PopulationSpec& spec, const Mechanism& mech) {
  std::vector<JointComponent> components;
  if (mech.dependence() == Dependence::kSharedGlobalDraw) {
    const double coin = mech.coin_probability();
    JointComponent treated{coin, {}};
    JointComponent control{1.0 - coin, {}};
    for (const Stratum& s : spec.strata()) {
      if (!(s.weight > Rational(0))) continue;
      const double weight = to_double(s.weight);
      treated.entries.push_back({s, coin, 1, weight});
      control.entries.push_back({s, coin, 0, weight});
    }
    components.push_back(std::move(treated));
    components.push_back(std::move(control));
  } else {
    JointComponent only{1.0, {}};
    for (const Stratum& s : spec.strata()) {
      if (!(s.weight > Rational(0))) continue;
      const double weight = to_double(s.weight);
      const double p = treatment_probability(mech, s.latents);
      if (p > 0.0) only.entries.push_back({s, p, 1, weight * p});
      if (p < 1.0) only.entries.push_back({s, p, 0, weight * (1.0 - p)});
    }
    components.push_back(std::move(only));
  }
  return JointTable(std::move(components));
}

struct PotentialOutcomes {
  double y1 = 0.0;
  double y0 = 0.0;

  friend bool operator==(const PotentialOutcomes&, const PotentialOutcomes&) = default;
};

// Discrete distribution over (y1, y0) values, sorted by (y1, y0).
using OutcomeDistribution = std::vector<std::pair<PotentialOutcomes, double>>;

namespace detail {

inline bool outcome_less(const PotentialOutcomes& a, const PotentialOutcomes& b) {
  return a.y1 < b.y1 || (a.y1 == b.y1 && a.y0 < b.y0);
}

// Accumulates probability mass by (y1, y0) and normalizes by the total.
inline OutcomeDistribution normalized_outcomes(const std::vector<JointEntry>& entries,
                                               double total) {
  OutcomeDistribution dist;
  for (const JointEntry& entry : entries) {
    const PotentialOutcomes key{entry.stratum.latents.y1, entry.stratum.latents.y0};
    auto it = std::find_if(dist.begin(), dist.end(),
                           [&](const auto& item) { return item.first == key; });
    if (it == dist.end()) {
      dist.emplace_back(key, entry.prob / total);
    } else {
      it->second += entry.prob / total;
    }
  }
  std::sort(dist.begin(), dist.end(),
            [](const auto& a, const auto& b) { return outcome_less(a.first, b.first); });
  return dist;
}

// Entrywise equality over the union of supports.
inline bool distributions_equal(const OutcomeDistribution& a, const OutcomeDistribution& b,
                                double tolerance) {
  const auto mass_in = [](const OutcomeDistribution& dist, const PotentialOutcomes& key) {
    for (const auto& [outcomes, prob] : dist) {
      if (outcomes == key) return prob;
    }
    return 0.0;
  };
  for (const auto& [key, prob] : a) {
    if (std::abs(prob - mass_in(b, key)) > tolerance) return false;
  }
  for (const auto& [key, prob] : b) {
    if (std::abs(prob - mass_in(a, key)) > tolerance) return false;
  }
  return true;
}

inline std::vector<int> positive_mass_levels(const std::vector<JointEntry>& flat) {
  std::vector<int> levels;
  for (const JointEntry& entry : flat) {
    if (std::find(levels.begin(), levels.end(), entry.stratum.latents.x) == levels.end()) {
      levels.push_back(entry.stratum.latents.x);
    }
  }
  std::sort(levels.begin(), levels.end());
  return levels;
}

}  // namespace detail

// Propensity score Pr(W = 1 | X = x), exact from the joint law.
inline double propensity(const PopulationSpec& spec, const Mechanism& mech, int x) {
  const auto flat = joint_distribution(spec, mech).flattened();
  double level_mass = 0.0;
  double treated_mass = 0.0;
  for (const JointEntry& entry : flat) {
    if (entry.stratum.latents.x != x) continue;
    level_mass += entry.prob;
    if (entry.w == 1) treated_mass += entry.prob;
  }
  if (level_mass <= 0.0) {
    throw std::domain_error("covariate level x=" + std::to_string(x) +
                            " has zero probability");
  }
  return treated_mass / level_mass;
}

// Exact conditional distribution of (Y(1), Y(0)) given W = w.
inline OutcomeDistribution outcome_given_treatment(const PopulationSpec& spec,
                                                   const Mechanism& mech, int w) {
  const auto flat = joint_distribution(spec, mech).flattened();
  std::vector<JointEntry> arm;
  double arm_mass = 0.0;
  for (const JointEntry& entry : flat) {
    if (entry.w != w) continue;
    arm.push_back(entry);
    arm_mass += entry.prob;
  }
  if (arm_mass <= 0.0) {
    throw std::domain_error("assignment arm W=" + std::to_string(w) +
                            " has zero probability");
  }
  return detail::normalized_outcomes(arm, arm_mass);
}

enum class Verdict { kTrue, kFalse, kUndefined };

// Distributional unconfoundedness check: the law of (Y(1), Y(0)) given W = w
// (and given X = x when conditional) must not depend on w. Returns kUndefined
// when some required arm has zero probability, which is distinct from a
// confounded design.
inline Verdict check_unconfounded(const PopulationSpec& spec, const Mechanism& mech,
                                  bool conditional) {
  const auto flat = joint_distribution(spec, mech).flattened();
  const auto arm_entries = [&](int w, std::optional<int> x) {
    std::vector<JointEntry> out;
    for (const JointEntry& entry : flat) {
      if (entry.w != w) continue;
      if (x.has_value() && entry.stratum.latents.x != *x) continue;
      out.push_back(entry);
    }
    return out;
  };
  const auto mass_of = [](const std::vector<JointEntry>& entries) {
    double mass = 0.0;
    for (const JointEntry& entry : entries) mass += entry.prob;
    return mass;
  };

  std::vector<std::optional<int>> slices;
  if (conditional) {
    for (const int x : detail::positive_mass_levels(flat)) slices.emplace_back(x);
  } else {
    slices.emplace_back(std::nullopt);
  }

  bool all_equal = true;
  for (const auto& slice : slices) {
    const auto treated = arm_entries(1, slice);
    const auto control = arm_entries(0, slice);
    const double treated_mass = mass_of(treated);
    const double control_mass = mass_of(control);
    if (treated_mass <= 0.0 || control_mass <= 0.0) {
      return Verdict::kUndefined;
    }
    const auto treated_dist = detail::normalized_outcomes(treated, treated_mass);
    const auto control_dist = detail::normalized_outcomes(control, control_mass);
    all_equal =
        all_equal && detail::distributions_equal(treated_dist, control_dist, kExactTolerance);
  }
  return all_equal ? Verdict::kTrue : Verdict::kFalse;
}

// Probability limit of the difference-in-means estimator,
// E[Y | W=1] - E[Y | W=0]. Undefined when no realized sample can contain both
// arms (shared global draw) or when an arm has zero probability.
inline std::optional<double> dim_limit(const PopulationSpec& spec, const Mechanism& mech) {
  const JointTable table = joint_distribution(spec, mech);
  if (table.from_shared_draw()) return std::nullopt;
  const auto flat = table.flattened();
  double mass1 = 0.0, mass0 = 0.0, sum1 = 0.0, sum0 = 0.0;
  for (const JointEntry& entry : flat) {
    if (entry.w == 1) {
      mass1 += entry.prob;
      sum1 += entry.prob * entry.stratum.latents.y1;
    } else {
      mass0 += entry.prob;
      sum0 += entry.prob * entry.stratum.latents.y0;
    }
  }
  if (mass1 <= 0.0 || mass0 <= 0.0) return std::nullopt;
  return sum1 / mass1 - sum0 / mass0;
}

// Exact Var(WY/P - (1-W)Y/(1-P)) for one observation; equals n * Var of the
// inverse-probability-weighted estimator under i.i.d. sampling with
// independent assignment.
inline double ht_normalized_variance(const PopulationSpec& spec, const Mechanism& mech) {
  if (mech.dependence() == Dependence::kSharedGlobalDraw) {
    throw std::domain_error(
        "shared global draw: estimator terms are not independent across observations");
  }
  double first_moment = 0.0;
  double second_moment = 0.0;
  for (const Stratum& s : spec.strata()) {
    if (!(s.weight > Rational(0))) continue;
    const double p = treatment_probability(mech, s.latents);
    if (!(p > 0.0 && p < 1.0)) {
      throw PositivityError("treatment probability " + std::to_string(p) +
                            " on a positive-weight stratum; need 0 < p < 1");
    }
    const double weight = to_double(s.weight);
    const double treated_term = s.latents.y1 / p;
    const double control_term = -s.latents.y0 / (1.0 - p);
    first_moment += weight * (p * treated_term + (1.0 - p) * control_term);
    second_moment +=
        weight * (p * treated_term * treated_term + (1.0 - p) * control_term * control_term);
  }
  return second_moment - first_moment * first_moment;
}

struct TriState {
  Verdict verdict = Verdict::kUndefined;
  std::string reason;  // set when the verdict is undefined
};

struct ReportedValue {
  std::optional<double> value;
  std::string reason;  // set when the value is undefined
};

// Full exact classification of a (population, mechanism) design.
struct DesignReport {
  bool randomized = false;
  double gamma = 0.0;
  bool positivity = false;
  bool overlap = false;
  TriState unconditionally_unconfounded;
  TriState conditionally_unconfounded;
  double ate = 0.0;
  CovariateTable propensity_by_x;
  double unconditional_propensity = 0.0;
  ReportedValue dim_limit;
  ReportedValue ht_normalized_variance;
};

inline DesignReport build_report(const PopulationSpec& spec, const Mechanism& mech) {
  DesignReport report;
  const RandomizationCheck randomization = is_randomized(mech, spec);
  report.randomized = randomization.randomized;
  report.gamma = randomization.gamma;
  report.positivity = randomization.gamma > 0.0;
  report.ate = ate(spec);

  const JointTable table = joint_distribution(spec, mech);
  const auto flat = table.flattened();
  report.unconditional_propensity = table.pr_w(1);

  report.overlap = true;
  for (const int x : detail::positive_mass_levels(flat)) {
    const double score = propensity(spec, mech, x);
    report.propensity_by_x.emplace_back(x, score);
    report.overlap = report.overlap && score > 0.0 && score < 1.0;
  }

  const auto describe = [](Verdict verdict) {
    TriState state;
    state.verdict = verdict;
    if (verdict == Verdict::kUndefined) {
      state.reason = "an assignment arm has zero probability";
    }
    return state;
  };
  report.unconditionally_unconfounded = describe(check_unconfounded(spec, mech, false));
  report.conditionally_unconfounded = describe(check_unconfounded(spec, mech, true));

  if (const auto limit = dim_limit(spec, mech)) {
    report.dim_limit.value = *limit;
  } else if (table.from_shared_draw()) {
    report.dim_limit.reason = "a shared global draw never mixes treated and control units";
  } else {
    report.dim_limit.reason = "an assignment arm has zero probability";
  }

  if (table.from_shared_draw()) {
    report.ht_normalized_variance.reason =
        "shared global draw: estimator variance does not shrink with n";
  } else if (!report.positivity) {
    report.ht_normalized_variance.reason =
        "treatment probability is 0 or 1 on a positive-weight stratum";
  } else {
    report.ht_normalized_variance.value = ht_normalized_variance(spec, mech);
  }
  return report;
}

}  // namespace designbench
