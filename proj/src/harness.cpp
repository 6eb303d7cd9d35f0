#include "isocost/harness.hpp"

#include "isocost/errors.hpp"
#include "isocost/integrate.hpp"
#include "isocost/lqr.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace isocost {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json compare_config_json(const CompareConfig& cfg) {
  ordered_json j;
  j["methods"] = cfg.methods;
  j["n_init"] = cfg.n_init;
  j["seed"] = cfg.seed;
  j["workers"] = cfg.workers;
  j["idp"] = ordered_json::parse(solver_config_json(cfg.idp));
  j["dp"] = ordered_json::parse(grid_spec_json(cfg.dp));
  j["sim"] = {{"dt", cfg.sim.dt},
              {"t_max", cfg.sim.t_max},
              {"stop_radius", cfg.sim.stop_radius},
              {"divergence_bound", cfg.sim.divergence_bound}};
  j["lqr_fd_eps"] = cfg.lqr_fd_eps;
  j["init_radius"] = {cfg.init_radius_lo, cfg.init_radius_hi};
  return j;
}

void validate(const SystemModel& model, const CompareConfig& cfg) {
  if (model.state_dim != 2 || model.control_dim != 1) {
    throw UsageError("run_comparison: handles 2-state models with a scalar control");
  }
  if (cfg.methods.empty()) throw UsageError("run_comparison: no methods requested");
  std::set<std::string> seen;
  for (const auto& m : cfg.methods) {
    if (!is_known_method(m)) {
      throw UsageError("run_comparison: unknown method '" + m +
                       "' (known: idp_random, idp_lqr, lqr, dp)");
    }
    if (!seen.insert(m).second) {
      throw UsageError("run_comparison: method '" + m + "' requested twice");
    }
  }
  if (cfg.n_init < 1) throw UsageError("run_comparison: n_init must be >= 1");
  if (!(cfg.init_radius_lo > 0.0 && cfg.init_radius_lo <= cfg.init_radius_hi &&
        cfg.init_radius_hi <= 1.0)) {
    throw UsageError("run_comparison: init radius fractions must satisfy 0 < lo <= hi <= 1");
  }
  if (cfg.workers < 1) throw UsageError("run_comparison: workers must be >= 1");
}

std::vector<VectorXd> draw_initial_conditions(const CompareConfig& cfg) {
  // Annulus of the dp state box so every method (including the grid policy)
  // is queried inside its design region.
  const double b1 = std::min(std::abs(cfg.dp.x1.lo), std::abs(cfg.dp.x1.hi));
  const double b2 = std::min(std::abs(cfg.dp.x2.lo), std::abs(cfg.dp.x2.hi));
  if (!(b1 > 0.0 && b2 > 0.0)) {
    throw UsageError("run_comparison: dp state box must straddle the origin");
  }
  std::mt19937_64 rng(mix64(cfg.seed ^ 0x1c0ffee5ull));
  std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
  std::uniform_real_distribution<double> radius(cfg.init_radius_lo, cfg.init_radius_hi);
  std::vector<VectorXd> ics;
  ics.reserve(cfg.n_init);
  for (int i = 0; i < cfg.n_init; ++i) {
    const double th = angle(rng);
    const double r = radius(rng);
    VectorXd x0(2);
    x0 << r * b1 * std::cos(th), r * b2 * std::sin(th);
    ics.push_back(x0);
  }
  return ics;
}

struct BuiltMethod {
  ControlLaw law;
  bool solve_failed = false;
  std::string failure;
  int iterations = 0;
  double solve_seconds = 0.0;
  std::string extra_json;
};

BuiltMethod build_method(const SystemModel& model, const CompareConfig& cfg,
                         const std::string& name) {
  BuiltMethod out;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    if (name == "idp_random" || name == "idp_lqr") {
      SolverConfig sc = cfg.idp;
      sc.init = name == "idp_lqr" ? InitMode::lqr : InitMode::random;
      sc.seed = cfg.seed;
      sc.workers = cfg.workers;
      PolicySolution sol = solve_idp(model, sc);
      auto table = build_policy_table(sol);
      out.law = policy_law(table);
      out.iterations = static_cast<int>(sol.fronts.size()) - 1;
      ordered_json extra;
      extra["final_gamma"] = sol.final_front().gamma;
      extra["n_alive_final"] = sol.final_front().n_alive();
      extra["n_samples"] = table->size();
      out.extra_json = extra.dump();
    } else if (name == "lqr") {
      const LqrDesign d = design_lqr(model, cfg.lqr_fd_eps);
      MatrixXd K = d.K;
      out.law.label = "lqr:" + model.label;
      out.law.fn = [K](const VectorXd& x) { return VectorXd(-(K * x)); };
      out.iterations = 0;
      ordered_json extra;
      extra["K"] = std::vector<double>(d.K.data(), d.K.data() + d.K.size());
      ordered_json prows = ordered_json::array();
      for (Eigen::Index r = 0; r < d.P.rows(); ++r) {
        ordered_json row = ordered_json::array();
        for (Eigen::Index c = 0; c < d.P.cols(); ++c) row.push_back(d.P(r, c));
        prows.push_back(row);
      }
      extra["P"] = prows;
      out.extra_json = extra.dump();
    } else if (name == "dp") {
      GridSpec gs = cfg.dp;
      gs.workers = cfg.workers;
      const ValueField field = solve_dp(model, gs);
      ordered_json extra;
      extra["converged"] = field.converged;
      extra["sweeps"] = field.iterations;
      extra["final_residual"] = field.final_residual;
      extra["boundary_clipped"] = field.boundary_clipped;
      out.extra_json = extra.dump();
      out.iterations = field.iterations;
      out.law = dp_policy(field);  // throws if unconverged
    } else {
      throw UsageError("unknown method '" + name + "'");
    }
  } catch (const std::exception& e) {
    out.solve_failed = true;
    out.failure = e.what();
  }
  out.solve_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

}  // namespace

bool is_known_method(const std::string& name) {
  return name == "idp_random" || name == "idp_lqr" || name == "lqr" || name == "dp";
}

RunReport run_comparison(const SystemModel& model, const CompareConfig& cfg) {
  validate(model, cfg);
  const auto t0 = std::chrono::steady_clock::now();

  RunReport report;
  report.model = model.label;
  report.seed = cfg.seed;
  report.config_json = compare_config_json(cfg).dump();
  report.initial_conditions = draw_initial_conditions(cfg);
  report.notes = {
      "costs are trapezoidal integrals of the running cost along closed-loop rollouts",
      "wall-clock timing is reported for information only and never ranked",
  };

  for (const auto& name : cfg.methods) {
    MethodResult mr;
    mr.name = name;
    BuiltMethod built = build_method(model, cfg, name);
    mr.iterations = built.iterations;
    mr.solve_seconds = built.solve_seconds;
    mr.seconds_per_iteration =
        built.iterations > 0 ? built.solve_seconds / built.iterations : 0.0;
    mr.extra_json = built.extra_json;

    mr.cases.resize(report.initial_conditions.size());
    if (built.solve_failed) {
      for (std::size_t i = 0; i < mr.cases.size(); ++i) {
        mr.cases[i].x0 = report.initial_conditions[i];
        mr.cases[i].failed = true;
        mr.cases[i].failure = "solve failed: " + built.failure;
      }
    } else {
      const int n = static_cast<int>(report.initial_conditions.size());
      parallel_for(n, cfg.workers, [&](int i) {
        CaseResult& cr = mr.cases[i];
        cr.x0 = report.initial_conditions[i];
        try {
          const Trajectory traj =
              simulate_closed_loop(model, built.law, cr.x0, cfg.sim.dt, cfg.sim.t_max,
                                   cfg.sim.stop_radius, cfg.sim.divergence_bound);
          cr.cost = traj.total_cost();
          cr.reached_stop = traj.termination == Termination::reached_stop_radius;
        } catch (const NumericalError& e) {
          cr.failed = true;
          cr.failure = e.what();
        }
      });
    }

    double sum = 0.0;
    for (const auto& c : mr.cases) {
      if (c.failed) {
        ++mr.n_failed;
      } else {
        sum += c.cost;
        ++mr.n_succeeded;
      }
    }
    mr.average_cost = mr.n_succeeded > 0 ? sum / mr.n_succeeded : 0.0;
    report.methods.push_back(std::move(mr));
  }

  std::vector<const MethodResult*> order;
  for (const auto& m : report.methods) order.push_back(&m);
  std::sort(order.begin(), order.end(), [](const MethodResult* a, const MethodResult* b) {
    const double ca =
        a->n_succeeded > 0 ? a->average_cost : std::numeric_limits<double>::infinity();
    const double cb =
        b->n_succeeded > 0 ? b->average_cost : std::numeric_limits<double>::infinity();
    if (ca != cb) return ca < cb;
    return a->name < b->name;
  });
  for (const auto* m : order) report.ranking.push_back(m->name);

  report.total_wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

std::string RunReport::to_json(bool include_timing) const {
  ordered_json j;
  j["schema_version"] = schema_version;
  j["model"] = model;
  j["seed"] = seed;
  j["config"] = config_json.empty() ? ordered_json::object() : ordered_json::parse(config_json);
  ordered_json ics = ordered_json::array();
  for (const auto& x0 : initial_conditions) {
    ics.push_back(std::vector<double>(x0.data(), x0.data() + x0.size()));
  }
  j["initial_conditions"] = ics;
  ordered_json ms = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json e;
    e["name"] = m.name;
    ordered_json cases = ordered_json::array();
    for (const auto& c : m.cases) {
      ordered_json ce;
      ce["x0"] = std::vector<double>(c.x0.data(), c.x0.data() + c.x0.size());
      if (c.failed) {
        ce["failed"] = true;
        ce["failure"] = c.failure;
      } else {
        ce["cost"] = c.cost;
        ce["reached_stop"] = c.reached_stop;
      }
      cases.push_back(ce);
    }
    e["cases"] = cases;
    if (m.n_succeeded > 0) e["average_cost"] = m.average_cost;
    else e["average_cost"] = nullptr;
    e["n_succeeded"] = m.n_succeeded;
    e["n_failed"] = m.n_failed;
    e["iterations"] = m.iterations;
    if (include_timing) {
      e["solve_seconds"] = m.solve_seconds;
      e["seconds_per_iteration"] = m.seconds_per_iteration;
    }
    e["extra"] = m.extra_json.empty() ? ordered_json::object()
                                      : ordered_json::parse(m.extra_json);
    ms.push_back(e);
  }
  j["methods"] = ms;
  j["ranking"] = ranking;
  j["notes"] = notes;
  if (include_timing) j["total_wall_seconds"] = total_wall_seconds;
  return j.dump(2);
}

TimingReport measure_timing(const SystemModel& model, const CompareConfig& cfg, int repeats) {
  validate(model, cfg);
  if (repeats < 1) throw UsageError("measure_timing: repeats must be >= 1");
  TimingReport report;
  report.model = model.label;
  report.repeats = repeats;
  for (const auto& name : cfg.methods) {
    MethodTiming mt;
    mt.name = name;
    for (int r = 0; r < repeats; ++r) {
      const BuiltMethod built = build_method(model, cfg, name);
      if (built.solve_failed) {
        throw NumericalError("measure_timing: method '" + name + "' failed: " + built.failure);
      }
      mt.solve_seconds.push_back(built.solve_seconds);
      mt.iterations = built.iterations;
    }
    double sum = 0.0;
    for (double s : mt.solve_seconds) sum += s;
    mt.mean_seconds = sum / repeats;
    mt.mean_seconds_per_iteration = mt.iterations > 0 ? mt.mean_seconds / mt.iterations : 0.0;
    report.methods.push_back(std::move(mt));
  }
  return report;
}

std::string TimingReport::to_json() const {
  ordered_json j;
  j["model"] = model;
  j["repeats"] = repeats;
  ordered_json ms = ordered_json::array();
  for (const auto& m : methods) {
    ordered_json e;
    e["name"] = m.name;
    e["solve_seconds"] = m.solve_seconds;
    e["iterations"] = m.iterations;
    e["mean_seconds"] = m.mean_seconds;
    e["mean_seconds_per_iteration"] = m.mean_seconds_per_iteration;
    ms.push_back(e);
  }
  j["methods"] = ms;
  return j.dump(2);
}

void write_fronts_csv(const PolicySolution& solution, std::ostream& os) {
  os << "generation,gamma,agent_id,x1,x2,u,alive\n";
  for (const auto& front : solution.fronts) {
    for (const auto& a : front.agents) {
      if (a.state.size() != 2 || a.control.size() != 1) {
        throw UsageError("write_fronts_csv: expects 2-D states and a scalar control");
      }
      os << front.generation << ',' << format_double(front.gamma) << ',' << a.id << ','
         << format_double(a.state(0)) << ',' << format_double(a.state(1)) << ','
         << format_double(a.control(0)) << ',' << (a.alive ? 1 : 0) << '\n';
    }
  }
}

}  // namespace isocost
