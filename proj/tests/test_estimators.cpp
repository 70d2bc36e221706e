#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "designbench/estimators.hpp"
#include "designbench/montecarlo.hpp"
#include "fixtures.hpp"

using namespace designbench;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

SampleObservation obs(int w, double y, double p, int x = 0) {
  SampleObservation o;
  o.w = w;
  o.y = y;
  o.p = p;
  o.x = x;
  o.y1 = w == 1 ? y : 0.0;
  o.y0 = w == 0 ? y : 0.0;
  return o;
}

// Random sample with both arms guaranteed present.
Sample random_sample(std::mt19937_64& rng, std::size_t size, bool constant_p = false) {
  Sample sample;
  while (true) {
    sample.observations.clear();
    bool treated = false, control = false;
    for (std::size_t i = 0; i < size; ++i) {
      const double p = constant_p ? 0.5 : 0.1 + 0.8 * next_unit(rng);
      const int w = next_unit(rng) < p ? 1 : 0;
      const double y = -1.0 + 2.0 * next_unit(rng);
      const int x = next_unit(rng) < 0.5 ? 0 : 1;
      sample.observations.push_back(obs(w, y, p, x));
      treated = treated || w == 1;
      control = control || w == 0;
    }
    if (treated && control) return sample;
  }
}

}  // namespace

TEST_CASE("difference in means", "[estimators]") {
  Sample sample{{obs(1, 1.0, 0.5), obs(1, 0.0, 0.5), obs(0, 0.0, 0.5)}};
  CHECK_THAT(diff_in_means(sample), WithinAbs(0.5, 1e-15));

  const Sample all_treated{{obs(1, 1.0, 0.5), obs(1, 2.0, 0.5)}};
  try {
    diff_in_means(all_treated);
    FAIL("expected EmptyArmError");
  } catch (const EmptyArmError& e) {
    CHECK(e.arm() == Arm::kControl);
  }

  const Sample all_control{{obs(0, 1.0, 0.5)}};
  try {
    diff_in_means(all_control);
    FAIL("expected EmptyArmError");
  } catch (const EmptyArmError& e) {
    CHECK(e.arm() == Arm::kTreated);
  }

  CHECK_THROWS_AS(diff_in_means(Sample{}), std::invalid_argument);
}

TEST_CASE("inverse probability weighting with true probabilities", "[estimators]") {
  CHECK_THAT(horvitz_thompson(Sample{{obs(1, 2.0, 0.5)}}), WithinAbs(4.0, 1e-15));

  // weights can disagree arm by arm
  const Sample mixed{{obs(1, 1.0, 0.25), obs(0, 1.0, 0.5)}};
  CHECK_THAT(horvitz_thompson(mixed), WithinAbs(4.0 / 2.0 - 2.0 / 2.0, 1e-15));

  CHECK_THROWS_AS(horvitz_thompson(Sample{{obs(1, 1.0, 0.0)}}), PositivityError);
  CHECK_THROWS_AS(horvitz_thompson(Sample{{obs(0, 1.0, 1.0)}}), PositivityError);
  CHECK_THROWS_AS(horvitz_thompson(Sample{}), std::invalid_argument);
}

TEST_CASE("hajek estimator", "[estimators]") {
  const Sample pair{{obs(1, 2.0, 0.5), obs(0, 1.0, 0.5)}};
  CHECK_THAT(hajek(pair), WithinAbs(1.0, 1e-15));

  SECTION("coincides with diff-in-means when p is constant") {
    auto rng = make_stream(31, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const Sample sample = random_sample(rng, 40, /*constant_p=*/true);
      CHECK_THAT(hajek(sample), WithinAbs(diff_in_means(sample), 1e-12));
    }
  }
  SECTION("errors") {
    CHECK_THROWS_AS(hajek(Sample{{obs(1, 1.0, 0.5)}}), EmptyArmError);
    CHECK_THROWS_AS(hajek(Sample{{obs(1, 1.0, 1.0), obs(0, 1.0, 0.5)}}), PositivityError);
  }
}

TEST_CASE("propensity-weighted estimator", "[estimators]") {
  SECTION("score table lookups") {
    const Sample sample{{obs(1, 1.0, 0.5, 0), obs(0, 2.0, 0.5, 1)}};
    CHECK_THROWS_AS(ipw_propensity(sample, {{0, 0.5}}), std::domain_error);  // missing x=1
    CHECK_THROWS_AS(ipw_propensity(sample, {{0, 0.5}, {1, 1.0}}), std::domain_error);
    CHECK_THROWS_AS(ipw_propensity(sample, {{0, 0.0}, {1, 0.5}}), std::domain_error);
  }
  SECTION("score equal to the constant p reproduces the probability-weighted value") {
    auto rng = make_stream(37, 0);
    for (int trial = 0; trial < 20; ++trial) {
      const Sample sample = random_sample(rng, 30, /*constant_p=*/true);
      const double via_score = ipw_propensity(sample, {{0, 0.5}, {1, 0.5}});
      CHECK_THAT(via_score, WithinAbs(horvitz_thompson(sample), 1e-15));
    }
  }
  SECTION("score equals p whenever p is a function of x alone") {
    const auto pop = make_binary_population();
    const auto mech = fixtures::covariate_split_mechanism();
    CovariateTable score;
    for (const auto& [x, f] : mech.covariate_table()) score.emplace_back(x, f);

    auto rng = make_stream(41, 0);
    const auto latents = sample_iid(pop, 500, rng);
    const auto treatments = assign(mech, latents, rng);
    Sample sample;
    for (std::size_t i = 0; i < latents.size(); ++i) {
      SampleObservation o;
      o.y1 = latents[i].y1;
      o.y0 = latents[i].y0;
      o.x = latents[i].x;
      o.u = latents[i].u;
      o.p = treatment_probability(mech, latents[i]);
      o.w = treatments[i];
      o.y = o.w == 1 ? o.y1 : o.y0;
      sample.observations.push_back(o);
    }
    CHECK_THAT(ipw_propensity(sample, score), WithinAbs(horvitz_thompson(sample), 1e-15));
  }
}

// Weighting by a constant score is weighting by the wrong thing under
// confounding. The limit of the score-weighted estimator for the
// outcome-dependent design, from the exact joint law:
//   E[W Y / s(X)] - E[(1-W) Y / (1 - s(X))]  with  s(X) = 5/8.
// Enumeration gives 2/5 -- far from the ATE of 1/2.
TEST_CASE("score weighting stays biased under confounding", "[estimators]") {
  const auto pop = make_binary_population();
  const auto mech = fixtures::outcome_dependent_mechanism();
  const double score = 5.0 / 8.0;

  // independent brute-force enumeration over (stratum, w)
  double limit = 0.0;
  for (const Stratum& s : pop.strata()) {
    const double weight = to_double(s.weight);
    const double p = treatment_probability(mech, s.latents);
    limit += weight * p * (s.latents.y1 / score);
    limit -= weight * (1.0 - p) * (s.latents.y0 / (1.0 - score));
  }
  CHECK_THAT(limit, WithinAbs(0.4, 1e-12));
  CHECK(std::abs(limit - ate(pop)) > 0.09);

  // the sampled estimator concentrates on the enumerated limit
  const Design design{pop, mech, IidN{4000}};
  const McResult mc = run_experiment(design, EstimatorId::kIpwPropensity, 400, 53);
  CHECK(std::abs(mc.mean - limit) <= 5.0 * mc.std_error_of_mean);
  CHECK(std::abs(mc.mean - ate(pop)) > 5.0 * mc.std_error_of_mean);
}

TEST_CASE("estimators scale linearly in the outcomes", "[estimators]") {
  auto rng = make_stream(43, 0);
  const CovariateTable score{{0, 0.45}, {1, 0.6}};
  for (int trial = 0; trial < 10; ++trial) {
    Sample sample = random_sample(rng, 50);
    const double c = -3.5 + 7.0 * next_unit(rng);

    Sample scaled = sample;
    for (SampleObservation& o : scaled.observations) {
      o.y *= c;
      o.y1 *= c;
      o.y0 *= c;
    }
    CHECK_THAT(diff_in_means(scaled), WithinAbs(c * diff_in_means(sample), 1e-12));
    CHECK_THAT(horvitz_thompson(scaled), WithinAbs(c * horvitz_thompson(sample), 1e-12));
    CHECK_THAT(hajek(scaled), WithinAbs(c * hajek(sample), 1e-12));
    CHECK_THAT(ipw_propensity(scaled, score),
               WithinAbs(c * ipw_propensity(sample, score), 1e-12));
  }
}

TEST_CASE("estimator names round-trip", "[estimators]") {
  for (const EstimatorId id : {EstimatorId::kDiffInMeans, EstimatorId::kHorvitzThompson,
                               EstimatorId::kIpwPropensity, EstimatorId::kHajek}) {
    const auto parsed = parse_estimator(estimator_name(id));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == id);
  }
  CHECK_FALSE(parse_estimator("nope").has_value());
}
