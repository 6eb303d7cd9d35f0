// Command-line front end: solve, simulate, compare, export.
// Exit codes: 0 success, 2 usage problems, 3 numerical failures,
// 4 an iterative solve did not converge.

#include "isocost/config.hpp"
#include "isocost/errors.hpp"
#include "isocost/harness.hpp"
#include "isocost/integrate.hpp"
#include "isocost/lqr.hpp"
#include "isocost/policy.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using namespace isocost;

namespace {

ConfigMap load_config(const std::string& path) {
  if (path.empty()) {
    std::istringstream empty;
    return ConfigMap::parse(empty, "<defaults>");
  }
  return ConfigMap::parse_file(path);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path);
  if (!f) throw UsageError("cannot write " + path.string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
}

VectorXd parse_x0(const std::string& spec) {
  std::vector<double> vals;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t pos = 0;
      vals.push_back(std::stod(item, &pos));
      if (pos != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError("--x0: cannot parse '" + item + "' as a number");
    }
  }
  if (vals.empty()) throw UsageError("--x0: no components given");
  VectorXd x0(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) x0(static_cast<Eigen::Index>(i)) = vals[i];
  return x0;
}

int run_solve(const std::string& method, const std::string& model_name,
              const std::string& config_path, const std::string& out_dir) {
  const SystemModel model = get_model(model_name);
  ConfigMap cfg = load_config(config_path);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);

  if (method == "idp") {
    SolverConfig sc;
    apply_idp_keys(cfg, sc);
    cfg.finish();
    const PolicySolution sol = solve_idp(model, sc);
    auto table = build_policy_table(sol);
    {
      std::ofstream f(out / "policy.csv");
      write_policy_csv(*table, f);
    }
    write_text(out / "policy.json", policy_metadata_json(*table));
    {
      std::ofstream f(out / "fronts.csv");
      write_fronts_csv(sol, f);
    }
    write_text(out / "provenance.json", sol.provenance.to_json(/*include_timing=*/true));
    std::cout << "solved " << model.label << ": " << sol.fronts.size() - 1 << " generations, "
              << table->size() << " policy samples, final gamma "
              << sol.final_front().gamma << "\n"
              << "wrote " << (out / "policy.csv").string() << ", policy.json, fronts.csv, "
              << "provenance.json\n";
    return 0;
  }
  if (method == "dp") {
    GridSpec gs;
    apply_dp_keys(cfg, gs);
    cfg.finish();
    const ValueField field = solve_dp(model, gs);
    if (!field.converged) {
      std::cerr << "value iteration did not converge: residual " << field.final_residual
                << " after " << field.iterations << " sweeps (tolerance " << gs.tolerance
                << ")\n";
      return 4;
    }
    {
      std::ofstream f(out / "value.csv");
      field.write_csv(f);
    }
    nlohmann::ordered_json meta;
    meta["model"] = model.label;
    meta["grid"] = nlohmann::ordered_json::parse(grid_spec_json(gs));
    meta["sweeps"] = field.iterations;
    meta["final_residual"] = field.final_residual;
    meta["discount_per_step"] = dp_discount(gs);
    meta["boundary_clipped"] = field.boundary_clipped;
    write_text(out / "dp_provenance.json", meta.dump(2));
    std::cout << "value iteration converged in " << field.iterations << " sweeps, residual "
              << field.final_residual << "\nwrote " << (out / "value.csv").string()
              << ", dp_provenance.json\n";
    return 0;
  }
  if (method == "lqr") {
    const double fd_eps = cfg.get_double("lqr_fd_eps", 1e-5);
    cfg.finish();
    const LqrDesign d = design_lqr(model, fd_eps);
    nlohmann::ordered_json j;
    auto mat = [](const MatrixXd& M) {
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      for (Eigen::Index r = 0; r < M.rows(); ++r) {
        nlohmann::ordered_json row = nlohmann::ordered_json::array();
        for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
        rows.push_back(row);
      }
      return rows;
    };
    j["model"] = model.label;
    j["A"] = mat(d.lin.A);
    j["B"] = mat(d.lin.B);
    j["Q"] = mat(d.cost.Q);
    j["R"] = mat(d.cost.R);
    j["P"] = mat(d.P);
    j["K"] = mat(d.K);
    write_text(out / "lqr.json", j.dump(2));
    std::cout << "gain K = [" << d.K << "]\nwrote " << (out / "lqr.json").string() << "\n";
    return 0;
  }
  throw UsageError("unknown solve method '" + method + "' (expected idp, dp or lqr)");
}

int run_simulate(const std::string& policy_path, const std::string& x0_spec,
                 const std::string& model_override, const std::string& config_path,
                 const std::string& out_dir) {
  std::string model_name = model_override;
  if (model_name.empty()) {
    // The metadata written next to the policy records which model it is for.
    const fs::path meta = fs::path(policy_path).parent_path() / "policy.json";
    std::ifstream f(meta);
    if (f) {
      nlohmann::json j;
      try {
        f >> j;
        model_name = j.value("model", "");
      } catch (const nlohmann::json::exception&) {
        // fall through to the error below
      }
    }
  }
  if (model_name.empty()) {
    throw UsageError("cannot determine the model; pass --model or keep policy.json next to "
                     "the policy file");
  }
  const SystemModel model = get_model(model_name);

  ConfigMap cfg = load_config(config_path);
  SimParams sim;
  apply_sim_keys(cfg, sim);
  cfg.finish();

  std::ifstream f(policy_path);
  if (!f) throw UsageError("cannot open policy file '" + policy_path + "'");
  auto table = load_policy_csv(f, model_name);

  const VectorXd x0 = parse_x0(x0_spec);
  const Trajectory traj = simulate_closed_loop(model, policy_law(table), x0, sim.dt, sim.t_max,
                                               sim.stop_radius, sim.divergence_bound);
  fs::create_directories(out_dir);
  const fs::path out_file = fs::path(out_dir) / "trajectory.csv";
  {
    std::ofstream tf(out_file);
    traj.write_csv(tf);
  }
  std::cout << "cost " << traj.total_cost() << " over " << traj.final_time() << " s ("
            << to_string(traj.termination) << "), "
            << table->fallback_count.load() << " interpolation fallbacks\nwrote "
            << out_file.string() << "\n";
  return 0;
}

int run_compare(const std::string& model_name, const std::string& methods_csv, int n_init,
                std::optional<std::uint64_t> seed, const std::string& config_path,
                const std::string& out_dir) {
  const SystemModel model = get_model(model_name);
  ConfigMap cfg = load_config(config_path);
  CompareConfig cc;
  apply_idp_keys(cfg, cc.idp);
  apply_dp_keys(cfg, cc.dp);
  apply_sim_keys(cfg, cc.sim);
  cc.n_init = cfg.get_int("n_init", cc.n_init);
  cc.lqr_fd_eps = cfg.get_double("lqr_fd_eps", cc.lqr_fd_eps);
  cc.init_radius_lo = cfg.get_double("init_radius_lo", cc.init_radius_lo);
  cc.init_radius_hi = cfg.get_double("init_radius_hi", cc.init_radius_hi);
  cfg.finish();
  cc.seed = cc.idp.seed;
  cc.workers = cc.idp.workers;
  if (n_init > 0) cc.n_init = n_init;
  if (seed) cc.seed = *seed;
  if (!methods_csv.empty()) {
    cc.methods.clear();
    std::stringstream ss(methods_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) cc.methods.push_back(item);
    }
  }

  const RunReport report = run_comparison(model, cc);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_text(out / "report.json", report.to_json(/*include_timing=*/true));
  write_text(out / "report_canonical.json", report.to_json(/*include_timing=*/false));

  std::cout << "ranking (best first):";
  for (const auto& name : report.ranking) std::cout << ' ' << name;
  std::cout << "\n";
  for (const auto& m : report.methods) {
    std::cout << "  " << m.name << ": ";
    if (m.n_succeeded > 0) {
      std::cout << "average cost " << m.average_cost << " over " << m.n_succeeded << " runs";
    } else {
      std::cout << "no successful runs";
    }
    if (m.n_failed > 0) std::cout << " (" << m.n_failed << " failed)";
    std::cout << "\n";
  }
  std::cout << "wrote " << (out / "report.json").string() << " and report_canonical.json\n";
  return 0;
}

int run_export(const std::string& what, const std::string& from_dir,
               const std::string& out_file) {
  struct Kind {
    const char* file;
    const char* header;
  };
  Kind kind;
  if (what == "contours") {
    kind = {"fronts.csv", "generation,gamma,agent_id,x1,x2,u,alive"};
  } else if (what == "policy") {
    kind = {"policy.csv", "x1,x2,gamma,u"};
  } else if (what == "value") {
    kind = {"value.csv", "x1,x2,V,u_greedy"};
  } else {
    throw UsageError("--what must be contours, policy or value, got '" + what + "'");
  }
  const fs::path src = fs::path(from_dir) / kind.file;
  std::ifstream f(src);
  if (!f) {
    throw UsageError("run directory '" + from_dir + "' holds no " + kind.file +
                     " (was the matching solve run there?)");
  }
  std::string header;
  std::getline(f, header);
  if (header != kind.header) {
    throw UsageError(src.string() + " has unexpected header '" + header + "'");
  }
  std::ofstream outf(out_file);
  if (!outf) throw UsageError("cannot write '" + out_file + "'");
  outf << header << '\n' << f.rdbuf();
  std::cout << "wrote " << out_file << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"isocost front / value iteration toolkit"};
  app.require_subcommand(1);

  std::string method, model_name, config_path, out_dir = ".";
  auto* solve = app.add_subcommand("solve", "compute a policy for a model");
  solve->add_option("method", method, "idp, dp or lqr")->required();
  solve->add_option("--model", model_name, "registered model name")->required();
  solve->add_option("--config", config_path, "key = value configuration file");
  solve->add_option("--out", out_dir, "output directory")->required();

  std::string policy_path, x0_spec, sim_model, sim_config, sim_out = ".";
  auto* simulate = app.add_subcommand("simulate", "roll a saved policy out from a state");
  simulate->add_option("--policy", policy_path, "policy.csv from a solve run")->required();
  simulate->add_option("--x0", x0_spec, "initial state, comma separated")->required();
  simulate->add_option("--model", sim_model, "model name (default: from policy.json)");
  simulate->add_option("--config", sim_config, "sim_* configuration file");
  simulate->add_option("--out", sim_out, "output directory");

  std::string cmp_model, cmp_methods, cmp_config, cmp_out = ".";
  int cmp_n_init = 0;
  std::uint64_t cmp_seed = 0;
  bool cmp_seed_set = false;
  auto* compare = app.add_subcommand("compare", "solve several methods and compare costs");
  compare->add_option("--model", cmp_model, "registered model name")->required();
  compare->add_option("--methods", cmp_methods,
                      "comma separated subset of idp_random,idp_lqr,lqr,dp");
  compare->add_option("--n-init", cmp_n_init, "number of random initial conditions");
  compare->add_option("--seed", cmp_seed, "seed override")
      ->each([&](const std::string&) { cmp_seed_set = true; });
  compare->add_option("--config", cmp_config, "key = value configuration file");
  compare->add_option("--out", cmp_out, "output directory")->required();

  std::string exp_what, exp_from, exp_out;
  auto* exp = app.add_subcommand("export", "pull one artifact out of a solve directory");
  exp->add_option("--what", exp_what, "contours, policy or value")->required();
  exp->add_option("--from", exp_from, "directory a solve wrote into")->required();
  exp->add_option("--out", exp_out, "destination file")->required();

  try {
    app.parse(argc, argv);
    if (solve->parsed()) return run_solve(method, model_name, config_path, out_dir);
    if (simulate->parsed()) {
      return run_simulate(policy_path, x0_spec, sim_model, sim_config, sim_out);
    }
    if (compare->parsed()) {
      return run_compare(cmp_model, cmp_methods, cmp_n_init,
                         cmp_seed_set ? std::optional<std::uint64_t>(cmp_seed) : std::nullopt,
                         cmp_config, cmp_out);
    }
    if (exp->parsed()) return run_export(exp_what, exp_from, exp_out);
    std::cerr << app.help();
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PartialSolutionError& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return 4;
  } catch (const ConvergenceError& e) {
    std::cerr << "did not converge: " << e.what() << "\n";
    return 4;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "unexpected failure: " << e.what() << "\n";
    return 3;
  }
}
