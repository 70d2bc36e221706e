#pragma once

#include "designbench/designbench.hpp"

// Canonical designs used across the test suite. All are defined over the
// binary example population unless noted.
namespace fixtures {

using namespace designbench;

// Randomized but confounded: p = (3 - y1) / 4, i.e. 3/4 for y1 = 0 and 1/2
// for y1 = 1.
inline Mechanism outcome_dependent_mechanism() {
  const PopulationSpec pop = make_binary_population();
  LatentProbTable table;
  for (const Stratum& s : pop.strata()) {
    table.emplace_back(s.latents, (3.0 - s.latents.y1) / 4.0);
  }
  return Mechanism::latent_fn(std::move(table));
}

// Deterministic but unconfounded: w = u.
inline Mechanism unobserved_match_mechanism() {
  const PopulationSpec pop = make_binary_population();
  LatentBinTable table;
  for (const Stratum& s : pop.strata()) {
    table.emplace_back(s.latents, s.latents.u == 0 ? 0 : 1);
  }
  return Mechanism::deterministic(std::move(table));
}

// Deterministic and confounded: w = 1[y1 = 1].
inline Mechanism outcome_threshold_mechanism() {
  const PopulationSpec pop = make_binary_population();
  LatentBinTable table;
  for (const Stratum& s : pop.strata()) {
    table.emplace_back(s.latents, s.latents.y1 == 1.0 ? 1 : 0);
  }
  return Mechanism::deterministic(std::move(table));
}

// Everyone treated; gives the W = 0 arm probability zero.
inline Mechanism always_treated_mechanism() {
  const PopulationSpec pop = make_binary_population();
  LatentBinTable table;
  for (const Stratum& s : pop.strata()) {
    table.emplace_back(s.latents, 1);
  }
  return Mechanism::deterministic(std::move(table));
}

// Randomized and conditionally unconfounded: p = f(x) with f(0) = 0.4,
// f(1) = 0.7.
inline Mechanism covariate_split_mechanism() {
  return Mechanism::covariate_fn({{0, 0.4}, {1, 0.7}});
}

}  // namespace fixtures
