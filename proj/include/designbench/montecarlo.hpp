#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <mutex>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "designbench/errors.hpp"
#include "designbench/estimators.hpp"
#include "designbench/oracle.hpp"
#include "designbench/rng.hpp"

namespace designbench {

struct IidN {
  int n = 0;
};

// Sampling modified so that the number of observations per arm is fixed:
// each arm is drawn i.i.d. from the exact conditional law given W.
struct FixedCounts {
  int n_treated = 0;
  int n_control = 0;
};

using SamplingPlan = std::variant<IidN, FixedCounts>;

struct Design {
  PopulationSpec population;
  Mechanism mechanism;
  SamplingPlan sampling;
};

inline int total_sample_size(const SamplingPlan& plan) {
  if (const auto* iid = std::get_if<IidN>(&plan)) return iid->n;
  const auto& fixed = std::get<FixedCounts>(plan);
  return fixed.n_treated + fixed.n_control;
}

inline void validate_design(const Design& design) {
  for (const Stratum& s : design.population.strata()) {
    if (s.weight > Rational(0)) {
      treatment_probability(design.mechanism, s.latents);  // applicability check
    }
  }
  if (const auto* iid = std::get_if<IidN>(&design.sampling)) {
    if (iid->n < 2) throw std::invalid_argument("i.i.d. sampling needs n >= 2");
    return;
  }
  const auto& fixed = std::get<FixedCounts>(design.sampling);
  if (fixed.n_treated < 1 || fixed.n_control < 1) {
    throw std::invalid_argument("fixed-count sampling needs at least one unit per arm");
  }
  const JointTable table = joint_distribution(design.population, design.mechanism);
  if (!(table.pr_w(1) > 0.0) || !(table.pr_w(0) > 0.0)) {
    throw std::domain_error("fixed-count sampling needs positive probability in both arms");
  }
}

struct McResult {
  EstimatorId estimator = EstimatorId::kHorvitzThompson;
  int sample_size = 0;
  std::int64_t replications = 0;
  std::int64_t failures = 0;  // replications rejected with an empty arm
  double mean = 0.0;
  double variance = 0.0;
  double normalized_variance = 0.0;  // sample_size * variance
  double std_error_of_mean = 0.0;
  std::uint64_t master_seed = 0;
};

// Every replication of an experiment failed with an empty arm.
class AllFailedError : public std::runtime_error {
 public:
  explicit AllFailedError(std::int64_t replications)
      : std::runtime_error("all " + std::to_string(replications) +
                           " replications failed with an empty arm"),
        replications_(replications) {}

  std::int64_t replications() const { return replications_; }

 private:
  std::int64_t replications_;
};

namespace detail {

// Per-experiment state shared by all replications: the covariate score for
// the propensity-weighted estimator and the conditional arm laws for
// fixed-count sampling. Immutable once built, safe to share across workers.
struct ExperimentPlan {
  EstimatorId estimator = EstimatorId::kHorvitzThompson;
  CovariateTable score_by_x;

  struct ArmLaw {
    std::vector<Latents> support;
    std::vector<double> p;
    std::optional<CategoricalSampler> sampler;
  };
  ArmLaw arms[2];
};

inline ExperimentPlan make_plan(const Design& design, EstimatorId estimator) {
  validate_design(design);
  ExperimentPlan plan;
  plan.estimator = estimator;

  const JointTable table = joint_distribution(design.population, design.mechanism);
  const auto flat = table.flattened();

  if (estimator == EstimatorId::kIpwPropensity) {
    for (const int x : positive_mass_levels(flat)) {
      plan.score_by_x.emplace_back(x, propensity(design.population, design.mechanism, x));
    }
  }

  if (std::holds_alternative<FixedCounts>(design.sampling)) {
    for (int w = 0; w <= 1; ++w) {
      const double arm_mass = table.pr_w(w);
      std::vector<double> probabilities;
      for (const JointEntry& entry : flat) {
        if (entry.w != w) continue;
        plan.arms[w].support.push_back(entry.stratum.latents);
        plan.arms[w].p.push_back(entry.p);
        probabilities.push_back(entry.prob / arm_mass);
      }
      plan.arms[w].sampler.emplace(std::move(probabilities));
    }
  }
  return plan;
}

inline double apply_estimator(const ExperimentPlan& plan, const Sample& sample) {
  switch (plan.estimator) {
    case EstimatorId::kDiffInMeans: return diff_in_means(sample);
    case EstimatorId::kHorvitzThompson: return horvitz_thompson(sample);
    case EstimatorId::kIpwPropensity: return ipw_propensity(sample, plan.score_by_x);
    case EstimatorId::kHajek: return hajek(sample);
  }
  throw std::logic_error("unreachable estimator id");
}

inline SampleObservation realize(const Latents& latents, double p, int w) {
  SampleObservation obs;
  obs.y1 = latents.y1;
  obs.y0 = latents.y0;
  obs.x = latents.x;
  obs.u = latents.u;
  obs.p = p;
  obs.w = w;
  obs.y = w == 1 ? latents.y1 : latents.y0;
  return obs;
}

inline double run_replication(const Design& design, const ExperimentPlan& plan,
                              std::mt19937_64& rng) {
  Sample sample;
  if (const auto* iid = std::get_if<IidN>(&design.sampling)) {
    const auto latents = sample_iid(design.population, static_cast<std::size_t>(iid->n), rng);
    const auto treatments = assign(design.mechanism, latents, rng);
    sample.observations.reserve(latents.size());
    for (std::size_t i = 0; i < latents.size(); ++i) {
      const double p = treatment_probability(design.mechanism, latents[i]);
      sample.observations.push_back(realize(latents[i], p, treatments[i]));
    }
  } else {
    const auto& fixed = std::get<FixedCounts>(design.sampling);
    const int counts[2] = {fixed.n_control, fixed.n_treated};
    sample.observations.reserve(static_cast<std::size_t>(fixed.n_treated + fixed.n_control));
    for (const int w : {1, 0}) {
      const ExperimentPlan::ArmLaw& arm = plan.arms[w];
      for (int i = 0; i < counts[w]; ++i) {
        const std::size_t index = arm.sampler->draw(rng);
        sample.observations.push_back(realize(arm.support[index], arm.p[index], w));
      }
    }
  }
  return apply_estimator(plan, sample);
}

}  // namespace detail

// One replication of the full design: sample, assign, realize, estimate.
// Throws EmptyArmError when the estimator needs an arm the sample lacks.
inline double run_replication(const Design& design, EstimatorId estimator,
                              std::mt19937_64& rng) {
  const detail::ExperimentPlan plan = detail::make_plan(design, estimator);
  return detail::run_replication(design, plan, rng);
}

// Number of worker threads: DESIGNBENCH_THREADS when set, otherwise the
// hardware concurrency.
inline unsigned default_worker_count() {
  if (const char* env = std::getenv("DESIGNBENCH_THREADS")) {
    const long parsed = std::strtol(env, nullptr, 10);
    if (parsed >= 1) return static_cast<unsigned>(std::min(parsed, 256L));
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

// Runs `replications` independent replications and summarizes them.
// Replication i always uses the stream derived from (master_seed, i), and the
// reduction runs in replication order, so the result is bit-identical for any
// worker count. Replications that fail with an empty arm are counted and
// excluded from the moments.
inline McResult run_experiment(const Design& design, EstimatorId estimator,
                               std::int64_t replications, std::uint64_t master_seed,
                               unsigned threads = 0) {
  if (replications < 2) {
    throw std::invalid_argument("experiment needs at least 2 replications");
  }
  const detail::ExperimentPlan plan = detail::make_plan(design, estimator);

  std::vector<double> values(static_cast<std::size_t>(replications), 0.0);
  std::vector<unsigned char> succeeded(static_cast<std::size_t>(replications), 0);
  std::mutex error_mutex;
  std::exception_ptr error;

  const auto worker = [&](std::int64_t begin, std::int64_t end) {
    try {
      for (std::int64_t i = begin; i < end; ++i) {
        auto rng = make_stream(master_seed, static_cast<std::uint64_t>(i));
        try {
          values[static_cast<std::size_t>(i)] = detail::run_replication(design, plan, rng);
          succeeded[static_cast<std::size_t>(i)] = 1;
        } catch (const EmptyArmError&) {
        }
      }
    } catch (...) {
      const std::lock_guard<std::mutex> lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  const unsigned requested = threads == 0 ? default_worker_count() : threads;
  const std::int64_t worker_count =
      std::max<std::int64_t>(1, std::min<std::int64_t>(requested, replications));
  if (worker_count == 1) {
    worker(0, replications);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    const std::int64_t chunk = replications / worker_count;
    const std::int64_t remainder = replications % worker_count;
    std::int64_t begin = 0;
    for (std::int64_t t = 0; t < worker_count; ++t) {
      const std::int64_t end = begin + chunk + (t < remainder ? 1 : 0);
      pool.emplace_back(worker, begin, end);
      begin = end;
    }
    for (std::thread& thread : pool) thread.join();
  }
  if (error) std::rethrow_exception(error);

  std::int64_t successes = 0;
  double sum = 0.0;
  for (std::int64_t i = 0; i < replications; ++i) {
    if (succeeded[static_cast<std::size_t>(i)]) {
      sum += values[static_cast<std::size_t>(i)];
      ++successes;
    }
  }
  if (successes == 0) throw AllFailedError(replications);

  const double mean = sum / static_cast<double>(successes);
  double squared_deviations = 0.0;
  for (std::int64_t i = 0; i < replications; ++i) {
    if (succeeded[static_cast<std::size_t>(i)]) {
      const double deviation = values[static_cast<std::size_t>(i)] - mean;
      squared_deviations += deviation * deviation;
    }
  }
  const double variance =
      successes > 1 ? squared_deviations / static_cast<double>(successes - 1) : 0.0;

  McResult result;
  result.estimator = estimator;
  result.sample_size = total_sample_size(design.sampling);
  result.replications = replications;
  result.failures = replications - successes;
  result.mean = mean;
  result.variance = variance;
  result.normalized_variance = static_cast<double>(result.sample_size) * variance;
  result.std_error_of_mean = std::sqrt(variance / static_cast<double>(successes));
  result.master_seed = master_seed;
  return result;
}

// Stratified empirical score: the treated fraction per observed covariate
// level. Levels where every unit landed in one arm are returned as 0 or 1;
// the propensity-weighted estimator rejects those downstream.
inline CovariateTable estimate_propensity(const Sample& sample) {
  std::vector<int> levels;
  std::vector<std::int64_t> total, treated;
  for (const SampleObservation& obs : sample.observations) {
    const auto it = std::find(levels.begin(), levels.end(), obs.x);
    std::size_t index;
    if (it == levels.end()) {
      levels.push_back(obs.x);
      total.push_back(0);
      treated.push_back(0);
      index = levels.size() - 1;
    } else {
      index = static_cast<std::size_t>(it - levels.begin());
    }
    ++total[index];
    if (obs.w == 1) ++treated[index];
  }
  CovariateTable table;
  for (std::size_t i = 0; i < levels.size(); ++i) {
    table.emplace_back(levels[i],
                       static_cast<double>(treated[i]) / static_cast<double>(total[i]));
  }
  std::sort(table.begin(), table.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return table;
}

// Runs the same (population, mechanism, estimator) at increasing i.i.d.
// sample sizes. Shows whether the estimator's variance shrinks like 1/n or
// stalls, as it does under a shared global draw.
inline std::vector<std::pair<int, McResult>> variance_scaling_probe(
    const PopulationSpec& population, const Mechanism& mechanism, EstimatorId estimator,
    const std::vector<int>& sizes, std::int64_t replications, std::uint64_t master_seed) {
  if (sizes.empty()) throw std::invalid_argument("probe needs at least one sample size");
  for (std::size_t i = 1; i < sizes.size(); ++i) {
    if (sizes[i] <= sizes[i - 1]) {
      throw std::invalid_argument("probe sizes must be strictly increasing");
    }
  }
  std::vector<std::pair<int, McResult>> results;
  results.reserve(sizes.size());
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const Design design{population, mechanism, IidN{sizes[i]}};
    results.emplace_back(sizes[i], run_experiment(design, estimator, replications,
                                                  derive_seed(master_seed, i)));
  }
  return results;
}

}  // namespace designbench
