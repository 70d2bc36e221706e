// Minimal tour: build a population and a mechanism, classify the design
// exactly, then check the classification against simulation.

#include <iostream>

#include "designbench/designbench.hpp"

int main() {
  using namespace designbench;

  // Treatment probability depends on the potential outcome: p = (3 - y1) / 4.
  // Randomized, but confounded.
  const PopulationSpec population = make_binary_population();
  LatentProbTable table;
  for (const Stratum& s : population.strata()) {
    table.emplace_back(s.latents, (3.0 - s.latents.y1) / 4.0);
  }
  const Mechanism mechanism = Mechanism::latent_fn(std::move(table));

  const DesignReport report = build_report(population, mechanism);
  std::cout << "exact classification:\n" << to_json(report).dump(2) << "\n\n";

  // The difference in means converges to the wrong value; weighting by the
  // true treatment probabilities recovers the ATE.
  const Design design{population, mechanism, IidN{5000}};
  const McResult dim = run_experiment(design, EstimatorId::kDiffInMeans, 500, 7);
  const McResult ht = run_experiment(design, EstimatorId::kHorvitzThompson, 500, 7);
  std::cout << "ate             " << report.ate << "\n";
  std::cout << "dim mean        " << dim.mean << "  (limit "
            << report.dim_limit.value.value_or(0.0) << ")\n";
  std::cout << "ht mean         " << ht.mean << "\n";
  return 0;
}
