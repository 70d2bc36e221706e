#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "designbench/rational.hpp"
#include "designbench/rng.hpp"

namespace designbench {

// Latent variables of one population unit: the two potential outcomes, an
// observed covariate level and an unobserved one. Only (w, y, x) of a sampled
// unit are observable in a real study; the rest exist for exact analysis.
struct Latents {
  double y1 = 0.0;
  double y0 = 0.0;
  int x = 0;
  int u = 0;

  friend bool operator==(const Latents&, const Latents&) = default;
};

// Covariate-level table x -> value, sorted by x. Used for mechanisms of the
// form p = f(x), for propensity-score tables and for estimated scores.
using CovariateTable = std::vector<std::pair<int, double>>;

inline const double* table_lookup(const CovariateTable& table, int x) {
  for (const auto& [level, value] : table) {
    if (level == x) return &value;
  }
  return nullptr;
}

struct Stratum {
  Latents latents;
  Rational weight;
};

// One sampled unit after treatment assignment and outcome realization.
struct SampleObservation {
  double y1 = 0.0;
  double y0 = 0.0;
  int x = 0;
  int u = 0;
  double p = 0.0;  // treatment probability of this unit under the mechanism
  int w = 0;
  double y = 0.0;  // realized outcome: y1 when treated, y0 otherwise
};

// A population represented as finitely many strata with exact rational
// weights. All populations considered here are discrete, so this loses
// nothing: enumeration over strata is exact.
class PopulationSpec {
 public:
  explicit PopulationSpec(std::vector<Stratum> strata) : strata_(std::move(strata)) {
    validate();
  }

  const std::vector<Stratum>& strata() const { return strata_; }

 private:
  void validate() const {
    if (strata_.empty()) {
      throw std::invalid_argument("population must contain at least one stratum");
    }
    Rational total(0);
    bool any_positive = false;
    for (std::size_t i = 0; i < strata_.size(); ++i) {
      const Stratum& s = strata_[i];
      if (!std::isfinite(s.latents.y1) || !std::isfinite(s.latents.y0)) {
        throw std::invalid_argument("stratum " + std::to_string(i) +
                                    ": potential outcomes must be finite");
      }
      if (s.latents.x < 0 || s.latents.u < 0) {
        throw std::invalid_argument("stratum " + std::to_string(i) +
                                    ": covariate levels must be non-negative");
      }
      if (s.weight < Rational(0)) {
        throw std::invalid_argument("stratum " + std::to_string(i) +
                                    ": weight must be non-negative");
      }
      any_positive = any_positive || s.weight > Rational(0);
      total += s.weight;
      for (std::size_t j = i + 1; j < strata_.size(); ++j) {
        if (strata_[j].latents == s.latents) {
          throw std::invalid_argument("strata " + std::to_string(i) + " and " +
                                      std::to_string(j) +
                                      " share the same (y1, y0, x, u) tuple");
        }
      }
    }
    if (total != Rational(1)) {
      throw std::invalid_argument("stratum weights sum to " + format_rational(total) +
                                  ", expected exactly 1");
    }
    if (!any_positive) {
      throw std::invalid_argument("population needs at least one positive-weight stratum");
    }
  }

  std::vector<Stratum> strata_;
};

// The binary example population: y0 = 0 everywhere and mass 1/8 on each of
// the eight (y1, u, x) combinations in {0,1}^3.
inline PopulationSpec make_binary_population() {
  std::vector<Stratum> strata;
  strata.reserve(8);
  for (int y1 = 0; y1 <= 1; ++y1) {
    for (int u = 0; u <= 1; ++u) {
      for (int x = 0; x <= 1; ++x) {
        strata.push_back({Latents{static_cast<double>(y1), 0.0, x, u}, Rational(1, 8)});
      }
    }
  }
  return PopulationSpec(std::move(strata));
}

// Three-point population used for the variance comparisons: y1 takes the
// values 0.5, 1.0 and 1.5 with equal mass, y0 = 0, no covariate structure.
// Every y1 lies strictly between 0 and twice the mean, as required by the
// outcome-proportional assignment rule.
inline PopulationSpec make_proportional_population() {
  std::vector<Stratum> strata;
  for (const double y1 : {0.5, 1.0, 1.5}) {
    strata.push_back({Latents{y1, 0.0, 0, 0}, Rational(1, 3)});
  }
  return PopulationSpec(std::move(strata));
}

// Average treatment effect E[Y(1) - Y(0)] by exact enumeration.
inline double ate(const PopulationSpec& spec) {
  double value = 0.0;
  for (const Stratum& s : spec.strata()) {
    value += to_double(s.weight) * (s.latents.y1 - s.latents.y0);
  }
  return value;
}

namespace detail {

// Inverse-CDF sampler over an explicit categorical distribution.
class CategoricalSampler {
 public:
  CategoricalSampler(std::vector<double> probabilities) {
    double cumulative = 0.0;
    for (const double p : probabilities) {
      cumulative += p;
      cumulative_.push_back(cumulative);
    }
    if (cumulative_.empty()) {
      throw std::invalid_argument("categorical distribution needs at least one outcome");
    }
    // Guard against accumulated rounding: the final bin absorbs the rest.
    cumulative_.back() = 1.0;
  }

  std::size_t draw(std::mt19937_64& rng) const {
    const double u = next_unit(rng);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const std::size_t index = static_cast<std::size_t>(it - cumulative_.begin());
    return std::min(index, cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace detail

// n i.i.d. draws of latent tuples, each stratum chosen with probability equal
// to its weight. Deterministic given the generator state.
inline std::vector<Latents> sample_iid(const PopulationSpec& spec, std::size_t n,
                                       std::mt19937_64& rng) {
  if (n < 1) {
    throw std::invalid_argument("sample size must be at least 1");
  }
  std::vector<Latents> support;
  std::vector<double> probabilities;
  for (const Stratum& s : spec.strata()) {
    if (s.weight > Rational(0)) {
      support.push_back(s.latents);
      probabilities.push_back(to_double(s.weight));
    }
  }
  const detail::CategoricalSampler sampler(std::move(probabilities));
  std::vector<Latents> draws;
  draws.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    draws.push_back(support[sampler.draw(rng)]);
  }
  return draws;
}

}  // namespace designbench
