#pragma once

#include "isocost/types.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace isocost {

struct GaConfig {
  int population = 24;
  int generations = 30;
  int tournament = 3;
  // Per-coordinate probability of a Gaussian nudge with standard deviation
  // mutation_scale * interval width.
  double mutation_rate = 0.03;
  double mutation_scale = 0.1;
  int elite = 2;
  std::uint64_t seed = 0;
};

struct GaResult {
  VectorXd argmax;
  double value = 0.0;
  // Best fitness seen after initialization and after each generation;
  // nondecreasing because elites survive unchanged.
  std::vector<double> best_history;
};

// Maximizes a black-box objective over a box with a compact real-coded
// genetic algorithm: tournament selection, arithmetic crossover, Gaussian
// mutation, elitism. The box midpoint and both corners are always injected
// into the initial population so coarse structure cannot be missed by bad
// luck. Candidates with non-finite objective are treated as unusable; if
// every candidate over the whole run is unusable, throws SearchError.
// Deterministic: the same seed and config replay the identical search.
GaResult ga_maximize(const std::function<double(const VectorXd&)>& objective,
                     const std::vector<Interval>& bounds, const GaConfig& cfg);

}  // namespace isocost
