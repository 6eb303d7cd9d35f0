#pragma once

#include "isocost/config.hpp"
#include "isocost/dp.hpp"
#include "isocost/idp.hpp"
#include "isocost/model.hpp"
#include "isocost/policy.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace isocost {

// Methods the harness knows how to build a feedback law for.
//   idp_random / idp_lqr : front propagation policy from either start
//   lqr                  : linear gain from the origin linearization
//   dp                   : grid value-iteration policy
bool is_known_method(const std::string& name);

struct CompareConfig {
  std::vector<std::string> methods = {"idp_random", "idp_lqr", "lqr", "dp"};
  int n_init = 11;  // number of random initial conditions
  std::uint64_t seed = 0;
  int workers = 1;
  SolverConfig idp;  // shared by both idp variants; init mode is overridden
  GridSpec dp;
  SimParams sim;
  double lqr_fd_eps = 1e-5;
  // Initial conditions are drawn on an annulus of the dp state box:
  // radius uniform in [lo, hi] * half-extent, angle uniform.
  double init_radius_lo = 0.3;
  double init_radius_hi = 0.9;
};

struct CaseResult {
  VectorXd x0;
  double cost = 0.0;
  bool reached_stop = false;
  bool failed = false;
  std::string failure;
};

struct MethodResult {
  std::string name;
  std::vector<CaseResult> cases;
  double average_cost = 0.0;  // over non-failed cases; meaningless if none
  int n_succeeded = 0;
  int n_failed = 0;
  int iterations = 0;         // generations (idp) or sweeps (dp); 0 for lqr
  double solve_seconds = 0.0;
  double seconds_per_iteration = 0.0;
  std::string extra_json;     // method-specific details (gain, residuals, ...)
};

struct RunReport {
  std::string schema_version = "1";
  std::string model;
  std::uint64_t seed = 0;
  std::string config_json;
  std::vector<VectorXd> initial_conditions;
  std::vector<MethodResult> methods;  // in request order
  std::vector<std::string> ranking;   // method names by ascending average cost
  std::vector<std::string> notes;
  double total_wall_seconds = 0.0;

  // include_timing=false omits every wall-clock field, making the report
  // byte-identical across runs and worker counts.
  std::string to_json(bool include_timing = false) const;
};

// Solves each requested method once, rolls every policy out from the same
// random initial conditions, and reports per-case and average costs.
// Timing is measured and reported, never asserted: wall-clock ordering
// between methods is hardware- and load-dependent.
RunReport run_comparison(const SystemModel& model, const CompareConfig& cfg);

struct MethodTiming {
  std::string name;
  std::vector<double> solve_seconds;  // one entry per repeat
  int iterations = 0;
  double mean_seconds = 0.0;
  double mean_seconds_per_iteration = 0.0;
};

struct TimingReport {
  std::string model;
  int repeats = 0;
  std::vector<MethodTiming> methods;
  std::string to_json() const;
};

// Repeats only the solve phase of each method to measure wall time.
TimingReport measure_timing(const SystemModel& model, const CompareConfig& cfg, int repeats);

// Columns: generation, gamma, agent_id, x1, x2, u, alive (scalar control).
void write_fronts_csv(const PolicySolution& solution, std::ostream& os);

}  // namespace isocost
