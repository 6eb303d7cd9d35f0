#include "isocost/ga.hpp"

#include "isocost/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

namespace isocost {

namespace {

constexpr double kUnusable = -std::numeric_limits<double>::infinity();

double safe_eval(const std::function<double(const VectorXd&)>& objective, const VectorXd& v) {
  const double f = objective(v);
  return std::isfinite(f) ? f : kUnusable;
}

}  // namespace

GaResult ga_maximize(const std::function<double(const VectorXd&)>& objective,
                     const std::vector<Interval>& bounds, const GaConfig& cfg) {
  if (!objective) throw UsageError("ga_maximize: objective is empty");
  if (bounds.empty()) throw UsageError("ga_maximize: bounds are empty");
  for (const auto& b : bounds) {
    if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
      throw UsageError("ga_maximize: bounds must be finite with lo <= hi");
    }
  }
  if (cfg.population < 2) throw UsageError("ga_maximize: population must be >= 2");
  if (cfg.generations < 0) throw UsageError("ga_maximize: generations must be >= 0");
  if (cfg.elite < 0 || cfg.elite >= cfg.population) {
    throw UsageError("ga_maximize: elite must be in [0, population)");
  }
  if (cfg.tournament < 1) throw UsageError("ga_maximize: tournament must be >= 1");
  if (!(cfg.mutation_rate >= 0.0 && cfg.mutation_rate <= 1.0)) {
    throw UsageError("ga_maximize: mutation_rate must be in [0, 1]");
  }
  if (!(cfg.mutation_scale >= 0.0)) throw UsageError("ga_maximize: mutation_scale must be >= 0");

  const int dim = static_cast<int>(bounds.size());
  std::mt19937_64 rng(mix64(cfg.seed));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_int_distribution<int> pick(0, cfg.population - 1);

  auto random_point = [&]() {
    VectorXd v(dim);
    for (int d = 0; d < dim; ++d) v(d) = bounds[d].lo + unit(rng) * bounds[d].width();
    return v;
  };

  std::vector<VectorXd> pop;
  pop.reserve(cfg.population);
  {
    // Seed the boundary and the center so box-edge optima are always sampled;
    // a tiny population takes as many of these as it can hold.
    VectorXd mid(dim), lo(dim), hi(dim);
    for (int d = 0; d < dim; ++d) {
      mid(d) = 0.5 * (bounds[d].lo + bounds[d].hi);
      lo(d) = bounds[d].lo;
      hi(d) = bounds[d].hi;
    }
    for (const VectorXd& v : {mid, lo, hi}) {
      if (static_cast<int>(pop.size()) < cfg.population) pop.push_back(v);
    }
  }
  while (static_cast<int>(pop.size()) < cfg.population) pop.push_back(random_point());

  std::vector<double> fit(cfg.population);
  for (int i = 0; i < cfg.population; ++i) fit[i] = safe_eval(objective, pop[i]);

  auto require_usable = [&](const std::vector<double>& f, int generation) {
    if (std::none_of(f.begin(), f.end(), [](double v) { return v != kUnusable; })) {
      std::ostringstream os;
      os << "ga_maximize: all " << f.size() << " candidates evaluated non-finite in generation "
         << generation;
      throw SearchError(os.str());
    }
  };
  require_usable(fit, 0);

  // Indices sorted by fitness, best first; ties broken by index so the
  // ordering (and therefore the whole run) is reproducible.
  auto ranking = [&]() {
    std::vector<int> idx(cfg.population);
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) {
      if (fit[a] != fit[b]) return fit[a] > fit[b];
      return a < b;
    });
    return idx;
  };

  auto tournament_winner = [&]() {
    int best = pick(rng);
    for (int k = 1; k < cfg.tournament; ++k) {
      const int challenger = pick(rng);
      if (fit[challenger] > fit[best] || (fit[challenger] == fit[best] && challenger < best)) {
        best = challenger;
      }
    }
    return best;
  };

  GaResult result;
  {
    const auto idx = ranking();
    result.argmax = pop[idx[0]];
    result.value = fit[idx[0]];
    result.best_history.push_back(result.value);
  }

  for (int gen = 0; gen < cfg.generations; ++gen) {
    const auto idx = ranking();
    std::vector<VectorXd> next;
    std::vector<double> next_fit;
    next.reserve(cfg.population);
    next_fit.reserve(cfg.population);
    for (int e = 0; e < cfg.elite; ++e) {
      next.push_back(pop[idx[e]]);
      next_fit.push_back(fit[idx[e]]);
    }
    while (static_cast<int>(next.size()) < cfg.population) {
      const VectorXd& p1 = pop[tournament_winner()];
      const VectorXd& p2 = pop[tournament_winner()];
      const double alpha = unit(rng);
      VectorXd child = alpha * p1 + (1.0 - alpha) * p2;
      for (int d = 0; d < dim; ++d) {
        if (unit(rng) < cfg.mutation_rate) {
          child(d) += gauss(rng) * cfg.mutation_scale * bounds[d].width();
        }
        child(d) = bounds[d].clamp(child(d));
      }
      next.push_back(std::move(child));
      next_fit.push_back(safe_eval(objective, next.back()));
    }
    pop = std::move(next);
    fit = std::move(next_fit);
    require_usable(fit, gen + 1);

    const auto best_idx = ranking()[0];
    if (fit[best_idx] > result.value) {
      result.value = fit[best_idx];
      result.argmax = pop[best_idx];
    }
    result.best_history.push_back(result.value);
  }

  if (result.value == kUnusable) {
    throw SearchError("ga_maximize: every candidate evaluated to a non-finite objective");
  }
  result.value = objective(result.argmax);
  return result;
}

}  // namespace isocost
