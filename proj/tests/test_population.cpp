#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "designbench/population.hpp"

using namespace designbench;
using Catch::Matchers::WithinAbs;

TEST_CASE("binary example population has eight equal strata", "[population]") {
  const PopulationSpec pop = make_binary_population();
  REQUIRE(pop.strata().size() == 8);

  Rational total(0);
  for (const Stratum& s : pop.strata()) {
    CHECK(s.weight == Rational(1, 8));
    CHECK(s.latents.y0 == 0.0);
    CHECK((s.latents.y1 == 0.0 || s.latents.y1 == 1.0));
    total += s.weight;
  }
  CHECK(total == Rational(1));

  // All (y1, u, x) combinations present exactly once.
  std::map<std::tuple<double, int, int>, int> seen;
  for (const Stratum& s : pop.strata()) {
    seen[{s.latents.y1, s.latents.u, s.latents.x}] += 1;
  }
  CHECK(seen.size() == 8);
}

TEST_CASE("three-point population moments", "[population]") {
  const PopulationSpec pop = make_proportional_population();
  REQUIRE(pop.strata().size() == 3);

  double mean = 0.0, second_moment = 0.0, max_y1 = 0.0;
  Rational total(0);
  for (const Stratum& s : pop.strata()) {
    CHECK(s.weight == Rational(1, 3));
    CHECK(s.latents.y0 == 0.0);
    mean += to_double(s.weight) * s.latents.y1;
    second_moment += to_double(s.weight) * s.latents.y1 * s.latents.y1;
    max_y1 = std::max(max_y1, s.latents.y1);
    total += s.weight;
  }
  CHECK(total == Rational(1));
  CHECK_THAT(mean, WithinAbs(1.0, 1e-15));
  CHECK_THAT(second_moment - mean * mean, WithinAbs(1.0 / 6.0, 1e-15));
  CHECK(max_y1 < 2.0 * mean);  // outcome-proportional assignment stays in (0, 1)
}

TEST_CASE("average treatment effect by enumeration", "[population]") {
  CHECK_THAT(ate(make_binary_population()), WithinAbs(0.5, 1e-12));
  CHECK_THAT(ate(make_proportional_population()), WithinAbs(1.0, 1e-12));

  const PopulationSpec degenerate({{Latents{3.25, 3.25, 0, 0}, Rational(1)}});
  CHECK_THAT(ate(degenerate), WithinAbs(0.0, 1e-12));
}

TEST_CASE("ate reduces to the mean of y1 when y0 is identically zero", "[population]") {
  for (const PopulationSpec& pop : {make_binary_population(), make_proportional_population()}) {
    double mean_y1 = 0.0;
    for (const Stratum& s : pop.strata()) {
      mean_y1 += to_double(s.weight) * s.latents.y1;
    }
    CHECK_THAT(ate(pop), WithinAbs(mean_y1, 1e-12));
  }
}

TEST_CASE("population validation", "[population]") {
  const Latents a{0.0, 0.0, 0, 0};
  const Latents b{1.0, 0.0, 0, 0};

  SECTION("weights must sum to exactly one") {
    REQUIRE_THROWS_WITH(PopulationSpec({{a, Rational(1, 3)}, {b, Rational(1, 3)}}),
                        Catch::Matchers::ContainsSubstring("sum"));
  }
  SECTION("negative weights rejected") {
    REQUIRE_THROWS_AS(PopulationSpec({{a, Rational(3, 2)}, {b, Rational(-1, 2)}}),
                      std::invalid_argument);
  }
  SECTION("duplicate latent tuples rejected") {
    REQUIRE_THROWS_AS(PopulationSpec({{a, Rational(1, 2)}, {a, Rational(1, 2)}}),
                      std::invalid_argument);
  }
  SECTION("zero-weight strata allowed alongside positive mass") {
    const PopulationSpec pop({{a, Rational(1)}, {b, Rational(0)}});
    CHECK(pop.strata().size() == 2);
  }
  SECTION("empty population rejected") {
    REQUIRE_THROWS_AS(PopulationSpec({}), std::invalid_argument);
  }
  SECTION("negative covariate levels rejected") {
    REQUIRE_THROWS_AS(PopulationSpec({{Latents{0.0, 0.0, -1, 0}, Rational(1)}}),
                      std::invalid_argument);
  }
}

TEST_CASE("iid sampling is deterministic given the seed", "[population]") {
  const PopulationSpec pop = make_binary_population();
  auto rng_a = make_stream(123, 0);
  auto rng_b = make_stream(123, 0);
  const auto draws_a = sample_iid(pop, 1000, rng_a);
  const auto draws_b = sample_iid(pop, 1000, rng_b);
  REQUIRE(draws_a.size() == draws_b.size());
  for (std::size_t i = 0; i < draws_a.size(); ++i) {
    CHECK(draws_a[i] == draws_b[i]);
  }
}

TEST_CASE("single-stratum population yields identical tuples", "[population]") {
  const Latents only{2.0, 1.0, 1, 0};
  const PopulationSpec pop({{only, Rational(1)}});
  auto rng = make_stream(9, 0);
  for (const Latents& draw : sample_iid(pop, 5, rng)) {
    CHECK(draw == only);
  }
}

TEST_CASE("empirical stratum frequencies match the weights", "[population]") {
  const PopulationSpec pop = make_binary_population();
  const std::size_t n = 1000000;
  auto rng = make_stream(2024, 0);
  const auto draws = sample_iid(pop, n, rng);

  for (const Stratum& s : pop.strata()) {
    std::size_t count = 0;
    for (const Latents& draw : draws) {
      if (draw == s.latents) ++count;
    }
    const double weight = to_double(s.weight);
    const double freq = static_cast<double>(count) / static_cast<double>(n);
    const double se = std::sqrt(weight * (1.0 - weight) / static_cast<double>(n));
    INFO("stratum with y1=" << s.latents.y1 << " u=" << s.latents.u << " x=" << s.latents.x);
    CHECK(std::abs(freq - weight) <= 5.0 * se);
  }

  // Zero-weight strata are never drawn.
  const PopulationSpec padded(
      {{Latents{0.0, 0.0, 0, 0}, Rational(1)}, {Latents{9.0, 9.0, 0, 0}, Rational(0)}});
  auto rng2 = make_stream(7, 0);
  for (const Latents& draw : sample_iid(padded, 20000, rng2)) {
    CHECK(draw.y1 == 0.0);
  }
}
