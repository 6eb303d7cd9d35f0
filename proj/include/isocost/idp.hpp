#pragma once

#include "isocost/errors.hpp"
#include "isocost/front.hpp"
#include "isocost/ga.hpp"
#include "isocost/integrate.hpp"
#include "isocost/model.hpp"
#include "isocost/types.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace isocost {

enum class InitMode { random, lqr };

const char* to_string(InitMode m);

// How the per-generation cost increment is chosen: a fixed dgamma, or
// geometric growth rho * gamma that keeps the relative step constant on
// long runs.
enum class DgammaSchedule { fixed, geometric };

const char* to_string(DgammaSchedule s);

struct SolverConfig {
  int n_agents = 600;
  double r0 = 0.01;       // radius of the random initial front
  double gamma0 = 0.1;    // cost level assigned to the initial front
  double gamma_f = 250.0; // stop once the front reaches this level
  double dgamma = 0.2;    // cost increment per generation (fixed schedule)
  DgammaSchedule schedule = DgammaSchedule::fixed;
  double rho = 0.05;      // relative increment for the geometric schedule
  std::vector<Interval> control_bounds = {{-50.0, 50.0}};
  InitMode init = InitMode::random;
  GaConfig ga;            // per-agent control search (seed is derived per agent)
  double tolerance = 1e-5;     // slack when comparing gamma against gamma_f
  int max_iterations = 10000;  // generation cap
  std::uint64_t seed = 0;
  int workers = 1;
  // Replace agents that died during a generation by interpolating between
  // their angular neighbours on the new front. Off by default.
  bool resample_dead = false;
  BackwardOptions backward;
  double fd_eps = 1e-5;   // finite-difference step for the LQR-based start
};

// JSON echo of a solver configuration (used in reports and provenance).
std::string solver_config_json(const SolverConfig& cfg);

struct PolicySample {
  VectorXd state;
  double gamma = 0.0;
  VectorXd control;
};

struct GenerationStats {
  int generation = 0;
  double gamma = 0.0;
  int n_alive = 0;
  double radius = 0.0;
  std::optional<double> hypervolume;
  // Cost level the radius-ratio update rule would have assigned; kept as a
  // diagnostic only, the solver advances gamma additively by dgamma.
  std::optional<double> gamma_ratio_diag;
  double wall_seconds = 0.0;
};

struct Provenance {
  std::string model;
  std::string config_json;          // echo of the solver configuration
  std::vector<GenerationStats> generations;
  std::vector<std::string> notes;   // fixed method choices worth surfacing
  double total_wall_seconds = 0.0;

  // Serialized report. Timing fields are excluded by default so the output
  // is byte-identical across runs and worker counts.
  std::string to_json(bool include_timing = false) const;
};

struct PolicySolution {
  std::vector<IsoCostFront> fronts;  // initial front first, then one per generation
  std::vector<PolicySample> samples;
  Provenance provenance;

  const IsoCostFront& final_front() const;
};

// Thrown when the run stops before gamma_f — generation cap reached, or the
// front degenerated below three living agents; carries the fronts and
// samples completed so far.
struct PartialSolutionError : ConvergenceError {
  PartialSolutionError(const std::string& what, std::shared_ptr<PolicySolution> done)
      : ConvergenceError(what), partial(std::move(done)) {}
  std::shared_ptr<PolicySolution> partial;
};

struct ControlChoice {
  VectorXd control;     // control to apply at `state` flowing forward
  VectorXd state;       // pre-image reached by the backward step
  double dt = 0.0;      // backward step duration (negative)
  double pushed_norm = 0.0;
  double cost_ratio = 0.0;
};

// Searches the control box for the admissible control whose backward step
// from x pushes the pre-image farthest from the origin. Throws SearchError
// when no control in the box yields a valid backward step.
ControlChoice select_optimal_control(const SystemModel& model, const VectorXd& x, double dgamma,
                                     const std::vector<Interval>& bounds, const GaConfig& ga,
                                     const BackwardOptions& backward = {});

// Propagates an isocost front outward from near the origin to gamma_f,
// letting each agent pick its own control by select_optimal_control. Every
// post-initialization agent state becomes a policy sample (state, gamma,
// control). Deterministic for a fixed seed, independent of worker count.
PolicySolution solve_idp(const SystemModel& model, const SolverConfig& cfg);

}  // namespace isocost
