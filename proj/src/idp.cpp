#include "isocost/idp.hpp"

#include "isocost/errors.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

namespace isocost {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json config_to_json(const SolverConfig& cfg) {
  ordered_json j;
  j["n_agents"] = cfg.n_agents;
  j["r0"] = cfg.r0;
  j["gamma0"] = cfg.gamma0;
  j["gamma_f"] = cfg.gamma_f;
  j["dgamma"] = cfg.dgamma;
  j["schedule"] = to_string(cfg.schedule);
  j["rho"] = cfg.rho;
  ordered_json bounds = ordered_json::array();
  for (const auto& b : cfg.control_bounds) bounds.push_back({b.lo, b.hi});
  j["control_bounds"] = bounds;
  j["init"] = to_string(cfg.init);
  j["ga"] = {{"population", cfg.ga.population},
             {"generations", cfg.ga.generations},
             {"tournament", cfg.ga.tournament},
             {"mutation_rate", cfg.ga.mutation_rate},
             {"mutation_scale", cfg.ga.mutation_scale},
             {"elite", cfg.ga.elite}};
  j["tolerance"] = cfg.tolerance;
  j["max_iterations"] = cfg.max_iterations;
  j["seed"] = cfg.seed;
  // Worker count is an execution knob with no effect on results, so it stays
  // out of the echo and reports hash identically across machines.
  j["resample_dead"] = cfg.resample_dead;
  j["backward"] = {{"g_floor", cfg.backward.g_floor},
                   {"max_backward_dt", cfg.backward.max_backward_dt},
                   {"substep", cfg.backward.substep},
                   {"cost_ratio_cap", cfg.backward.cost_ratio_cap}};
  j["fd_eps"] = cfg.fd_eps;
  return j;
}

void validate(const SystemModel& model, const SolverConfig& cfg) {
  if (cfg.n_agents < 3) throw UsageError("solve_idp: n_agents must be >= 3");
  if (!(cfg.dgamma > 0.0)) throw UsageError("solve_idp: dgamma must be > 0");
  if (!(cfg.rho > 0.0)) throw UsageError("solve_idp: rho must be > 0");
  if (!(cfg.tolerance > 0.0)) throw UsageError("solve_idp: tolerance must be > 0");
  if (!(cfg.gamma0 > 0.0)) throw UsageError("solve_idp: gamma0 must be > 0");
  if (!(cfg.gamma_f >= cfg.gamma0)) throw UsageError("solve_idp: gamma_f must be >= gamma0");
  if (cfg.init == InitMode::random && !(cfg.r0 > 0.0)) {
    throw UsageError("solve_idp: r0 must be > 0 for the random start");
  }
  if (static_cast<int>(cfg.control_bounds.size()) != model.control_dim) {
    throw UsageError("solve_idp: control_bounds size must match the model control dimension");
  }
  if (cfg.max_iterations < 1) throw UsageError("solve_idp: max_iterations must be >= 1");
  if (cfg.workers < 1) throw UsageError("solve_idp: workers must be >= 1");
  if (model.state_dim != 2) {
    throw UsageError("solve_idp: front geometry is 2-D; model must have 2 states");
  }
  const VectorXd x0 = VectorXd::Zero(model.state_dim);
  const VectorXd u0 = VectorXd::Zero(model.control_dim);
  if (eval_dynamics(model, x0, u0).norm() > 1e-8) {
    throw UsageError("solve_idp: model has no equilibrium at the origin (f(0,0) != 0)");
  }
  if (eval_cost_rate(model, x0, u0) > 1e-8) {
    throw UsageError("solve_idp: cost rate does not vanish at the origin (g(0,0) != 0)");
  }
}

// Revive dead agents on the chord between their angular neighbours among the
// survivors, so the front keeps its sample count on long runs.
void resample_dead_agents(IsoCostFront& front) {
  struct Entry {
    double angle;
    const FrontAgent* agent;
  };
  std::vector<Entry> living;
  for (const auto& a : front.agents) {
    if (a.alive && a.state.norm() > 0.0) {
      living.push_back({std::atan2(a.state(1), a.state(0)), &a});
    }
  }
  if (living.size() < 2) return;
  std::sort(living.begin(), living.end(),
            [](const Entry& a, const Entry& b) { return a.angle < b.angle; });
  for (auto& a : front.agents) {
    if (a.alive) continue;
    const double th = a.state.norm() > 0.0 ? std::atan2(a.state(1), a.state(0)) : 0.0;
    std::size_t hi = 0;
    while (hi < living.size() && living[hi].angle <= th) ++hi;
    const Entry& nxt = living[hi % living.size()];
    const Entry& prv = living[(hi + living.size() - 1) % living.size()];
    a.state = 0.5 * (prv.agent->state + nxt.agent->state);
    a.control = 0.5 * (prv.agent->control + nxt.agent->control);
    a.gamma = front.gamma;
    a.alive = true;
  }
}

GenerationStats snapshot(const IsoCostFront& front, double prev_radius, double prev_gamma,
                         double wall_seconds) {
  GenerationStats s;
  s.generation = front.generation;
  s.gamma = front.gamma;
  s.n_alive = front.n_alive();
  s.radius = front_radius(front);
  try {
    s.hypervolume = front_hypervolume(front);
  } catch (const GeometryError&) {
    s.hypervolume.reset();
  }
  if (prev_radius > 0.0) {
    const double ratio = s.radius / prev_radius;
    s.gamma_ratio_diag = ratio * ratio * prev_gamma;
  }
  s.wall_seconds = wall_seconds;
  return s;
}

}  // namespace

std::string solver_config_json(const SolverConfig& cfg) { return config_to_json(cfg).dump(); }

const char* to_string(InitMode m) {
  switch (m) {
    case InitMode::random: return "random";
    case InitMode::lqr: return "lqr";
  }
  return "unknown";
}

const char* to_string(DgammaSchedule s) {
  switch (s) {
    case DgammaSchedule::fixed: return "fixed";
    case DgammaSchedule::geometric: return "geometric";
  }
  return "unknown";
}

const IsoCostFront& PolicySolution::final_front() const {
  if (fronts.empty()) throw UsageError("solution holds no fronts");
  return fronts.back();
}

std::string Provenance::to_json(bool include_timing) const {
  ordered_json j;
  j["model"] = model;
  j["config"] = config_json.empty() ? ordered_json::object()
                                    : ordered_json::parse(config_json);
  j["notes"] = notes;
  ordered_json gens = ordered_json::array();
  for (const auto& g : generations) {
    ordered_json e;
    e["generation"] = g.generation;
    e["gamma"] = g.gamma;
    e["n_alive"] = g.n_alive;
    e["radius"] = g.radius;
    if (g.hypervolume) e["hypervolume"] = *g.hypervolume; else e["hypervolume"] = nullptr;
    if (g.gamma_ratio_diag) e["gamma_ratio_diag"] = *g.gamma_ratio_diag;
    else e["gamma_ratio_diag"] = nullptr;
    if (include_timing) e["wall_seconds"] = g.wall_seconds;
    gens.push_back(e);
  }
  j["generations"] = gens;
  if (include_timing) j["total_wall_seconds"] = total_wall_seconds;
  return j.dump(2);
}

ControlChoice select_optimal_control(const SystemModel& model, const VectorXd& x, double dgamma,
                                     const std::vector<Interval>& bounds, const GaConfig& ga,
                                     const BackwardOptions& backward) {
  if (x.size() != model.state_dim) {
    throw UsageError("select_optimal_control: state dimension mismatch");
  }
  if (static_cast<int>(bounds.size()) != model.control_dim) {
    throw UsageError("select_optimal_control: bounds must match the control dimension");
  }
  const auto objective = [&](const VectorXd& u) {
    const CheckedBackwardStep s = checked_backward_step(model, x, u, dgamma, backward);
    return s.valid ? s.state.norm() : std::numeric_limits<double>::quiet_NaN();
  };
  GaResult found = ga_maximize(objective, bounds, ga);
  const CheckedBackwardStep s = checked_backward_step(model, x, found.argmax, dgamma, backward);
  if (!s.valid) {
    throw SearchError("select_optimal_control: winning control failed revalidation");
  }
  ControlChoice choice;
  choice.control = found.argmax;
  choice.state = s.state;
  choice.dt = s.dt;
  choice.pushed_norm = s.state.norm();
  choice.cost_ratio = s.cost_ratio;
  return choice;
}

PolicySolution solve_idp(const SystemModel& model, const SolverConfig& cfg) {
  validate(model, cfg);
  const auto t_start = std::chrono::steady_clock::now();

  PolicySolution sol;
  sol.provenance.model = model.label;
  sol.provenance.config_json = solver_config_json(cfg);
  sol.provenance.notes = {
      "front radius is the root-mean-square of living agent norms",
      "gamma advances additively by dgamma; the radius-ratio update is recorded per "
      "generation as a diagnostic only",
      "each backward step lasts dgamma divided by the local cost rate, substepped on long "
      "excursions",
      "backward steps whose trapezoidal cost estimate disagrees with dgamma beyond the "
      "configured factor are rejected",
  };
  if (cfg.schedule == DgammaSchedule::geometric) {
    sol.provenance.notes.push_back(
        "cost increments grow geometrically as rho times the current level");
  }
  if (cfg.resample_dead) {
    sol.provenance.notes.push_back(
        "agents that die are replaced on the chord between their angular neighbours");
  }

  IsoCostFront front =
      cfg.init == InitMode::random
          ? init_front_random(cfg.n_agents, cfg.r0, cfg.gamma0, cfg.seed, model.control_dim)
          : init_front_lqr(model, cfg.n_agents, cfg.gamma0, cfg.fd_eps);
  sol.fronts.push_back(front);
  sol.provenance.generations.push_back(snapshot(front, 0.0, 0.0, 0.0));
  for (const auto& a : front.agents) {
    if (a.alive) sol.samples.push_back({a.state, a.gamma, a.control});
  }

  auto partial_stop = [&](const std::string& why) {
    auto partial = std::make_shared<PolicySolution>(sol);
    partial->provenance.total_wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return PartialSolutionError(why, partial);
  };

  while (front.gamma < cfg.gamma_f - cfg.tolerance) {
    if (front.generation + 1 > cfg.max_iterations) {
      std::ostringstream os;
      os << "solve_idp: generation cap " << cfg.max_iterations << " reached at gamma = "
         << front.gamma << " (target " << cfg.gamma_f << ")";
      throw partial_stop(os.str());
    }
    const auto t_gen = std::chrono::steady_clock::now();
    const double dg =
        cfg.schedule == DgammaSchedule::geometric ? cfg.rho * front.gamma : cfg.dgamma;
    const double prev_radius = front_radius(front);
    const double prev_gamma = front.gamma;

    IsoCostFront next = front;
    next.gamma = front.gamma + dg;
    next.generation = front.generation + 1;
    const int n = static_cast<int>(next.agents.size());
    parallel_for(n, cfg.workers, [&](int i) {
      FrontAgent& a = next.agents[i];
      if (!a.alive) return;
      GaConfig ga = cfg.ga;
      ga.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(next.generation),
                            static_cast<std::uint64_t>(a.id));
      try {
        const ControlChoice choice =
            select_optimal_control(model, a.state, dg, cfg.control_bounds, ga, cfg.backward);
        a.state = choice.state;
        a.control = choice.control;
        a.gamma = next.gamma;
      } catch (const NumericalError&) {
        a.alive = false;
      }
    });

    if (next.n_alive() < 3) {
      std::ostringstream os;
      os << "solve_idp: front degenerated to " << next.n_alive()
         << " living agents at gamma = " << next.gamma;
      throw partial_stop(os.str());
    }
    if (cfg.resample_dead) resample_dead_agents(next);

    for (const auto& a : next.agents) {
      if (a.alive) sol.samples.push_back({a.state, a.gamma, a.control});
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_gen).count();
    sol.provenance.generations.push_back(snapshot(next, prev_radius, prev_gamma, wall));
    sol.fronts.push_back(next);
    front = std::move(next);
  }

  sol.provenance.total_wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return sol;
}

}  // namespace isocost
