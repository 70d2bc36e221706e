#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "designbench/designbench.hpp"

// Built-in scenarios: each binds one population/mechanism pair to the claims
// that hold for it, with expected values and tolerances recorded as data.
// Claim checking lives here, on purpose outside the library.
namespace designbench::cli {

struct ScenarioConfig {
  std::string scenario;
  std::string population_file;  // custom only
  std::string mechanism_file;   // custom only
  int n = 0;                    // 0 -> scenario default
  std::int64_t replications = 0;
  std::uint64_t master_seed = 42;
  std::vector<EstimatorId> estimators;  // empty -> scenario default
  enum class Sampling { kDefault, kIid, kFixedCounts } sampling = Sampling::kDefault;
};

inline const std::vector<std::string>& scenario_names() {
  static const std::vector<std::string> names = {
      "s3_confounded_random", "s4_deterministic_unconfounded",
      "s5_constant",          "s5_covariate",
      "s5_global_coin",       "s6_proportional_vs_constant",
      "custom"};
  return names;
}

struct ClaimResult {
  std::string name;
  std::string detail;
  bool pass = false;
};

struct LabeledReport {
  std::string label;
  DesignReport report;
};

struct LabeledResult {
  std::string label;
  McResult result;
};

struct FailedRun {
  std::string label;
  EstimatorId estimator = EstimatorId::kDiffInMeans;
  std::string error;
};

struct ScenarioOutcome {
  std::string scenario;
  int n = 0;
  std::int64_t replications = 0;
  std::uint64_t master_seed = 0;
  std::string sampling;
  std::vector<LabeledReport> reports;
  std::vector<LabeledResult> results;
  std::vector<FailedRun> failed_runs;
  std::vector<ClaimResult> claims;

  bool all_claims_pass() const {
    for (const ClaimResult& claim : claims) {
      if (!claim.pass) return false;
    }
    return true;
  }
};

namespace detail {

// ---- expected values, derived once from the fixed populations

constexpr double kBinaryAte = 0.5;
constexpr double kConfoundedPropensity = 5.0 / 8.0;
constexpr double kConfoundedDimLimit = 2.0 / 5.0;

// Three-point population {0.5, 1.0, 1.5}: mean 1, variance 1/6, E[Y^2] = 7/6.
constexpr double kProportionalMeanY1 = 1.0;
constexpr double kProportionalVarY1 = 1.0 / 6.0;
constexpr double kProportionalHtVariance = 1.0;    // (E[Y(1)])^2
constexpr double kConstantHtVariance = 4.0 / 3.0;  // Var(Y(1)) + E[Y(1)^2]

// ---- claim helpers

inline std::string fmt(double value) { return format_double(value); }

inline ClaimResult claim_exact(std::string name, double observed, double expected) {
  const bool pass = std::abs(observed - expected) <= kExactTolerance;
  return {std::move(name), "observed " + fmt(observed) + ", expected " + fmt(expected), pass};
}

inline ClaimResult claim_flag(std::string name, bool observed, bool expected) {
  return {std::move(name), std::string("observed ") + (observed ? "true" : "false"),
          observed == expected};
}

inline ClaimResult claim_verdict(std::string name, const TriState& observed, Verdict expected) {
  const char* text = observed.verdict == Verdict::kTrue    ? "true"
                     : observed.verdict == Verdict::kFalse ? "false"
                                                           : "undefined";
  return {std::move(name), std::string("observed ") + text, observed.verdict == expected};
}

inline ClaimResult claim_within_se(std::string name, const McResult& mc, double target,
                                   double se_count = 5.0) {
  const double distance = std::abs(mc.mean - target);
  const double allowed = se_count * mc.std_error_of_mean;
  return {std::move(name),
          "mean " + fmt(mc.mean) + " vs " + fmt(target) + ", |diff| " + fmt(distance) +
              " <= " + fmt(allowed),
          distance <= allowed};
}

inline ClaimResult claim_beyond_se(std::string name, const McResult& mc, double target,
                                   double se_count = 5.0) {
  const double distance = std::abs(mc.mean - target);
  const double required = se_count * mc.std_error_of_mean;
  return {std::move(name),
          "mean " + fmt(mc.mean) + " vs " + fmt(target) + ", |diff| " + fmt(distance) +
              " > " + fmt(required),
          distance > required};
}

inline ClaimResult claim_relative(std::string name, double observed, double expected,
                                  double tolerance) {
  const double relative = std::abs(observed - expected) / std::abs(expected);
  return {std::move(name),
          "observed " + fmt(observed) + ", expected " + fmt(expected) + " (rel err " +
              fmt(relative) + ", tol " + fmt(tolerance) + ")",
          relative <= tolerance};
}

inline ClaimResult claim_in_range(std::string name, double observed, double low, double high) {
  return {std::move(name),
          "observed " + fmt(observed) + ", range [" + fmt(low) + ", " + fmt(high) + "]",
          observed >= low && observed <= high};
}

// ---- mechanism builders for the built-in scenarios

// Treatment probability decreasing in the potential outcome: p = (3 - y1)/4.
inline Mechanism confounded_random_mechanism(const PopulationSpec& population) {
  LatentProbTable table;
  for (const Stratum& s : population.strata()) {
    table.emplace_back(s.latents, (3.0 - s.latents.y1) / 4.0);
  }
  return Mechanism::latent_fn(std::move(table));
}

// Deterministic assignment by the unobserved covariate: w = u.
inline Mechanism unobserved_match_mechanism(const PopulationSpec& population) {
  LatentBinTable table;
  for (const Stratum& s : population.strata()) {
    table.emplace_back(s.latents, s.latents.u == 0 ? 0 : 1);
  }
  return Mechanism::deterministic(std::move(table));
}

inline Mechanism covariate_split_mechanism() {
  return Mechanism::covariate_fn({{0, 0.4}, {1, 0.7}});
}

inline bool wants(const std::vector<EstimatorId>& estimators, EstimatorId id) {
  for (const EstimatorId e : estimators) {
    if (e == id) return true;
  }
  return false;
}

struct ResolvedConfig {
  int n = 0;
  std::int64_t replications = 0;
  std::uint64_t master_seed = 0;
  std::vector<EstimatorId> estimators;
  bool iid = true;
};

inline ResolvedConfig resolve(const ScenarioConfig& cfg, int default_n,
                              std::int64_t default_reps,
                              std::vector<EstimatorId> default_estimators) {
  ResolvedConfig out;
  out.n = cfg.n > 0 ? cfg.n : default_n;
  out.replications = cfg.replications > 0 ? cfg.replications : default_reps;
  out.master_seed = cfg.master_seed;
  out.estimators = cfg.estimators.empty() ? std::move(default_estimators) : cfg.estimators;
  out.iid = cfg.sampling != ScenarioConfig::Sampling::kFixedCounts;
  return out;
}

inline SamplingPlan make_sampling(const ResolvedConfig& rc) {
  if (!rc.iid) {
    const int treated = std::max(1, rc.n / 2);
    return FixedCounts{treated, std::max(1, rc.n - treated)};
  }
  return IidN{rc.n};
}

inline void stamp(ScenarioOutcome& outcome, const ScenarioConfig& cfg,
                  const ResolvedConfig& rc) {
  outcome.scenario = cfg.scenario;
  outcome.n = rc.n;
  outcome.replications = rc.replications;
  outcome.master_seed = rc.master_seed;
  outcome.sampling = rc.iid ? "iid" : "fixed_counts";
}

inline void run_estimators(const Design& design, const ResolvedConfig& rc,
                           const std::string& label, ScenarioOutcome& outcome) {
  for (const EstimatorId estimator : rc.estimators) {
    try {
      outcome.results.push_back(
          {label, run_experiment(design, estimator, rc.replications, rc.master_seed)});
    } catch (const AllFailedError& e) {
      outcome.failed_runs.push_back({label, estimator, e.what()});
    }
  }
}

inline const McResult* find_result(const ScenarioOutcome& outcome, const std::string& label,
                                   EstimatorId estimator) {
  for (const LabeledResult& item : outcome.results) {
    if (item.label == label && item.result.estimator == estimator) return &item.result;
  }
  return nullptr;
}

// ---- the scenarios
//
// Monte Carlo claims are calibrated for the scenarios' i.i.d. sampling
// defaults; under --sampling fixed_counts the experiments still run and are
// reported, but only the exact oracle claims are checked.

inline ScenarioOutcome run_confounded_random(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 10000, 1000,
                          {EstimatorId::kDiffInMeans, EstimatorId::kHorvitzThompson});
  const PopulationSpec population = make_binary_population();
  const Mechanism mechanism = confounded_random_mechanism(population);
  const Design design{population, mechanism, make_sampling(rc)};
  const DesignReport report = build_report(population, mechanism);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"design", report});
  run_estimators(design, rc, "design", outcome);

  auto& claims = outcome.claims;
  claims.push_back(claim_flag("randomized", report.randomized, true));
  claims.push_back(claim_verdict("not unconditionally unconfounded",
                                 report.unconditionally_unconfounded, Verdict::kFalse));
  claims.push_back(claim_verdict("not conditionally unconfounded",
                                 report.conditionally_unconfounded, Verdict::kFalse));
  for (const auto& [x, score] : report.propensity_by_x) {
    claims.push_back(claim_exact("propensity score is 5/8 at x=" + std::to_string(x), score,
                                 kConfoundedPropensity));
  }
  {
    // The score must coincide with no unit-level treatment probability.
    bool attained = false;
    std::string attained_set;
    for (const Stratum& s : population.strata()) {
      const double p = treatment_probability(mechanism, s.latents);
      attained = attained || p == report.unconditional_propensity;
      const std::string text = fmt(p);
      if (attained_set.find(text) == std::string::npos) {
        attained_set += attained_set.empty() ? text : ", " + text;
      }
    }
    claims.push_back({"propensity score differs from every treatment probability",
                      "score " + fmt(report.unconditional_propensity) +
                          " vs treatment probabilities {" + attained_set + "}",
                      !attained});
  }
  claims.push_back(claim_exact("ATE is 1/2", report.ate, kBinaryAte));
  {
    const double observed = report.dim_limit.value.value_or(std::nan(""));
    const bool pass = std::abs(observed - kConfoundedDimLimit) <= kExactTolerance &&
                      std::abs(observed - report.ate) > kExactTolerance;
    claims.push_back({"DiM limit 0.4 != ATE 0.5",
                      "DiM limit " + fmt(observed) + ", ATE " + fmt(report.ate), pass});
  }
  if (rc.iid) {
    if (const McResult* dim = find_result(outcome, "design", EstimatorId::kDiffInMeans)) {
      claims.push_back(
          claim_within_se("dim concentrates at the DiM limit", *dim, kConfoundedDimLimit));
      claims.push_back(claim_beyond_se("dim is biased for the ATE", *dim, kBinaryAte));
    }
    if (const McResult* ht = find_result(outcome, "design", EstimatorId::kHorvitzThompson)) {
      claims.push_back(claim_within_se("ht is unbiased for the ATE", *ht, kBinaryAte));
    }
  }
  return outcome;
}

inline ScenarioOutcome run_deterministic_unconfounded(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 10000, 1000, {EstimatorId::kDiffInMeans});
  const PopulationSpec population = make_binary_population();
  const Mechanism mechanism = unobserved_match_mechanism(population);
  const Design design{population, mechanism, make_sampling(rc)};
  const DesignReport report = build_report(population, mechanism);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"design", report});
  run_estimators(design, rc, "design", outcome);

  auto& claims = outcome.claims;
  claims.push_back(claim_flag("not randomized", report.randomized, false));
  claims.push_back(claim_verdict("unconditionally unconfounded",
                                 report.unconditionally_unconfounded, Verdict::kTrue));
  claims.push_back(
      {"overlap without positivity",
       std::string("overlap ") + (report.overlap ? "true" : "false") + ", positivity " +
           (report.positivity ? "true" : "false"),
       report.overlap && !report.positivity});
  for (const auto& [x, score] : report.propensity_by_x) {
    claims.push_back(
        claim_exact("propensity score is 1/2 at x=" + std::to_string(x), score, 0.5));
  }
  claims.push_back(claim_exact("DiM limit equals the ATE",
                               report.dim_limit.value.value_or(std::nan("")), report.ate));
  if (rc.iid) {
    if (const McResult* dim = find_result(outcome, "design", EstimatorId::kDiffInMeans)) {
      claims.push_back(claim_within_se("dim is unbiased for the ATE", *dim, report.ate));
    }
  }
  return outcome;
}

inline ScenarioOutcome run_constant(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 10000, 1000,
                          {EstimatorId::kDiffInMeans, EstimatorId::kHorvitzThompson});
  const PopulationSpec population = make_binary_population();
  const Mechanism mechanism = Mechanism::constant_prob(0.5);
  const Design design{population, mechanism, make_sampling(rc)};
  const DesignReport report = build_report(population, mechanism);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"design", report});
  run_estimators(design, rc, "design", outcome);

  auto& claims = outcome.claims;
  claims.push_back(claim_flag("randomized", report.randomized, true));
  claims.push_back(claim_verdict("unconditionally unconfounded",
                                 report.unconditionally_unconfounded, Verdict::kTrue));
  for (const auto& [x, score] : report.propensity_by_x) {
    claims.push_back(claim_exact(
        "propensity score equals the treatment probability at x=" + std::to_string(x), score,
        mechanism.coin_probability()));
  }
  if (rc.iid) {
    if (const McResult* dim = find_result(outcome, "design", EstimatorId::kDiffInMeans)) {
      claims.push_back(claim_within_se("dim is unbiased for the ATE", *dim, report.ate));
    }
    if (const McResult* ht = find_result(outcome, "design", EstimatorId::kHorvitzThompson)) {
      claims.push_back(claim_within_se("ht is unbiased for the ATE", *ht, report.ate));
    }
  }
  return outcome;
}

inline ScenarioOutcome run_covariate(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 10000, 1000,
                          {EstimatorId::kHorvitzThompson, EstimatorId::kIpwPropensity});
  const PopulationSpec population = make_binary_population();
  const Mechanism mechanism = covariate_split_mechanism();
  const Design design{population, mechanism, make_sampling(rc)};
  const DesignReport report = build_report(population, mechanism);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"design", report});
  run_estimators(design, rc, "design", outcome);

  auto& claims = outcome.claims;
  claims.push_back(claim_flag("randomized", report.randomized, true));
  claims.push_back(claim_verdict("conditionally unconfounded",
                                 report.conditionally_unconfounded, Verdict::kTrue));
  for (const auto& [x, f] : mechanism.covariate_table()) {
    claims.push_back(claim_exact(
        "propensity score equals the assignment function at x=" + std::to_string(x),
        propensity(population, mechanism, x), f));
  }
  if (rc.iid) {
    if (const McResult* ht = find_result(outcome, "design", EstimatorId::kHorvitzThompson)) {
      claims.push_back(claim_within_se("ht is unbiased for the ATE", *ht, report.ate));
    }
    if (const McResult* ipw = find_result(outcome, "design", EstimatorId::kIpwPropensity)) {
      claims.push_back(claim_within_se("ipw_x is unbiased for the ATE", *ipw, report.ate));
    }
  }
  return outcome;
}

inline ScenarioOutcome run_global_coin(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 10000, 1000,
                          {EstimatorId::kDiffInMeans, EstimatorId::kHorvitzThompson});
  const PopulationSpec population = make_binary_population();
  const Mechanism mechanism = Mechanism::global_coin(0.5);
  const DesignReport report = build_report(population, mechanism);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"design", report});

  auto& claims = outcome.claims;
  claims.push_back(claim_flag("randomized", report.randomized, true));
  claims.push_back(claim_verdict("unconditionally unconfounded",
                                 report.unconditionally_unconfounded, Verdict::kTrue));
  claims.push_back(claim_flag("overlap holds", report.overlap, true));
  claims.push_back({"DiM limit undefined: no sample mixes arms", report.dim_limit.reason,
                    !report.dim_limit.value.has_value()});

  if (!rc.iid) {
    // Fixed-count sampling forces mixed arms by construction, so the failure
    // claims below do not apply; just run what was requested.
    const Design design{population, mechanism, make_sampling(rc)};
    run_estimators(design, rc, "design", outcome);
    return outcome;
  }
  for (const EstimatorId estimator : rc.estimators) {
    if (estimator == EstimatorId::kDiffInMeans) {
      // Single-armed samples starve this estimator; the point of the scenario.
      const Design design{population, mechanism, make_sampling(rc)};
      bool all_failed = false;
      std::string detail = "experiment unexpectedly produced estimates";
      try {
        run_experiment(design, EstimatorId::kDiffInMeans, rc.replications, rc.master_seed);
      } catch (const AllFailedError& e) {
        all_failed = true;
        detail = e.what();
        outcome.failed_runs.push_back({"design", EstimatorId::kDiffInMeans, e.what()});
      }
      claims.push_back(
          {"dim fails with an empty arm on every replication", detail, all_failed});
    } else if (estimator == EstimatorId::kHorvitzThompson) {
      const int big = std::max(rc.n, 200);
      const int small = std::max(2, big / 100);
      const auto probe = variance_scaling_probe(population, mechanism,
                                                EstimatorId::kHorvitzThompson, {small, big},
                                                rc.replications, rc.master_seed);
      for (const auto& [size, result] : probe) {
        outcome.results.push_back({"variance_probe", result});
      }
      const double ratio = probe.front().second.variance / probe.back().second.variance;
      claims.push_back(claim_in_range("ht variance does not shrink with n (ratio n=" +
                                          std::to_string(small) + " / n=" +
                                          std::to_string(big) + ")",
                                      ratio, 0.5, 2.0));
    } else {
      const Design design{population, mechanism, make_sampling(rc)};
      try {
        outcome.results.push_back(
            {"design", run_experiment(design, estimator, rc.replications, rc.master_seed)});
      } catch (const AllFailedError& e) {
        outcome.failed_runs.push_back({"design", estimator, e.what()});
      }
    }
  }
  return outcome;
}

inline ScenarioOutcome run_proportional_vs_constant(const ScenarioConfig& cfg) {
  const auto rc = resolve(cfg, 1000, 4000, {EstimatorId::kHorvitzThompson});
  const PopulationSpec population = make_proportional_population();
  const Mechanism proportional = Mechanism::outcome_proportional(kProportionalMeanY1);
  const Mechanism constant = Mechanism::constant_prob(0.5);

  const DesignReport proportional_report = build_report(population, proportional);
  const DesignReport constant_report = build_report(population, constant);

  ScenarioOutcome outcome;
  stamp(outcome, cfg, rc);
  outcome.reports.push_back({"outcome_proportional", proportional_report});
  outcome.reports.push_back({"constant_half", constant_report});

  auto& claims = outcome.claims;
  const double oracle_proportional =
      proportional_report.ht_normalized_variance.value.value_or(std::nan(""));
  const double oracle_constant =
      constant_report.ht_normalized_variance.value.value_or(std::nan(""));
  claims.push_back(
      claim_exact("oracle: proportional-design normalized variance is (E[Y(1)])^2",
                  oracle_proportional, kProportionalHtVariance));
  claims.push_back(
      claim_exact("oracle: constant-design normalized variance is Var(Y(1)) + E[Y(1)^2]",
                  oracle_constant, kConstantHtVariance));
  claims.push_back(claim_exact("oracle: confounded design wins by 2 Var(Y(1))",
                               oracle_constant - oracle_proportional,
                               2.0 * kProportionalVarY1));

  if (wants(rc.estimators, EstimatorId::kHorvitzThompson)) {
    const Design proportional_design{population, proportional, make_sampling(rc)};
    const Design constant_design{population, constant, make_sampling(rc)};
    // Same master seed on both sides of the comparison: paired replications
    // squeeze the sampling noise out of the variance gap.
    const McResult mc_proportional = run_experiment(
        proportional_design, EstimatorId::kHorvitzThompson, rc.replications, rc.master_seed);
    const McResult mc_constant = run_experiment(
        constant_design, EstimatorId::kHorvitzThompson, rc.replications, rc.master_seed);
    outcome.results.push_back({"outcome_proportional", mc_proportional});
    outcome.results.push_back({"constant_half", mc_constant});

    if (!rc.iid) {
      claims.push_back({"proportional design: ht has zero variance under fixed counts",
                        "mean " + fmt(mc_proportional.mean) + ", variance " +
                            fmt(mc_proportional.variance),
                        mc_proportional.mean == kProportionalMeanY1 &&
                            mc_proportional.variance == 0.0});
      claims.push_back(claim_relative(
          "constant design: fixed-count normalized variance is 2 Var(Y(1))",
          mc_constant.normalized_variance, 2.0 * kProportionalVarY1, 0.10));
    } else {
      claims.push_back(claim_relative(
          "proportional design: empirical normalized variance matches the oracle",
          mc_proportional.normalized_variance, oracle_proportional, 0.10));
      claims.push_back(claim_relative(
          "constant design: empirical normalized variance matches the oracle",
          mc_constant.normalized_variance, oracle_constant, 0.10));
      claims.push_back(claim_relative(
          "empirical variance gap matches 2 Var(Y(1))",
          mc_constant.normalized_variance - mc_proportional.normalized_variance,
          2.0 * kProportionalVarY1, 0.15));
    }
  }
  return outcome;
}

}  // namespace detail

// Runs a built-in scenario end to end: oracle report, Monte Carlo runs, and
// the scenario's claim checks.
inline ScenarioOutcome run_scenario(const ScenarioConfig& cfg) {
  if (cfg.scenario == "s3_confounded_random") return detail::run_confounded_random(cfg);
  if (cfg.scenario == "s4_deterministic_unconfounded") {
    return detail::run_deterministic_unconfounded(cfg);
  }
  if (cfg.scenario == "s5_constant") return detail::run_constant(cfg);
  if (cfg.scenario == "s5_covariate") return detail::run_covariate(cfg);
  if (cfg.scenario == "s5_global_coin") return detail::run_global_coin(cfg);
  if (cfg.scenario == "s6_proportional_vs_constant") {
    return detail::run_proportional_vs_constant(cfg);
  }
  throw std::invalid_argument("unknown scenario \"" + cfg.scenario + "\"");
}

// Custom scenario over user-supplied population and mechanism: report plus
// the requested experiments, no claim checks.
inline ScenarioOutcome run_scenario(const ScenarioConfig& cfg,
                                    const PopulationSpec& population,
                                    const Mechanism& mechanism) {
  const auto rc = detail::resolve(cfg, 10000, 1000, {EstimatorId::kHorvitzThompson});
  const Design design{population, mechanism, detail::make_sampling(rc)};
  ScenarioOutcome outcome;
  detail::stamp(outcome, cfg, rc);
  outcome.reports.push_back({"custom", build_report(population, mechanism)});
  detail::run_estimators(design, rc, "custom", outcome);
  return outcome;
}

}  // namespace designbench::cli
