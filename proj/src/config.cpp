#include "isocost/config.hpp"

#include "isocost/errors.hpp"

#include <algorithm>
#include <cctype>
#include <climits>
#include <fstream>
#include <sstream>

namespace isocost {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

bool valid_key(const std::string& k) {
  if (k.empty()) return false;
  return std::all_of(k.begin(), k.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

}  // namespace

ConfigMap ConfigMap::parse(std::istream& is, const std::string& origin) {
  ConfigMap cfg;
  cfg.origin_ = origin;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": expected 'key = value', got '" << line << "'";
      throw UsageError(os.str());
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!valid_key(key)) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": bad key '" << key << "' (use [a-z0-9_]+)";
      throw UsageError(os.str());
    }
    if (value.empty()) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": key '" << key << "' has no value";
      throw UsageError(os.str());
    }
    if (!cfg.values_.emplace(key, value).second) {
      std::ostringstream os;
      os << origin << ":" << lineno << ": duplicate key '" << key << "'";
      throw UsageError(os.str());
    }
  }
  return cfg;
}

ConfigMap ConfigMap::parse_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw UsageError("cannot open config file '" + path + "'");
  return parse(f, path);
}

double ConfigMap::get_double(const std::string& key, double fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(it->second, &pos);
  } catch (const std::exception&) {
    throw UsageError(origin_ + ": key '" + key + "': cannot parse '" + it->second +
                     "' as a number");
  }
  if (pos != it->second.size()) {
    throw UsageError(origin_ + ": key '" + key + "': trailing characters in '" + it->second +
                     "'");
  }
  return v;
}

int ConfigMap::get_int(const std::string& key, int fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::size_t pos = 0;
  long v = 0;
  try {
    v = std::stol(it->second, &pos);
  } catch (const std::exception&) {
    throw UsageError(origin_ + ": key '" + key + "': cannot parse '" + it->second +
                     "' as an integer");
  }
  if (pos != it->second.size()) {
    throw UsageError(origin_ + ": key '" + key + "': trailing characters in '" + it->second +
                     "'");
  }
  if (v < INT_MIN || v > INT_MAX) {
    throw UsageError(origin_ + ": key '" + key + "': value out of range");
  }
  return static_cast<int>(v);
}

std::uint64_t ConfigMap::get_u64(const std::string& key, std::uint64_t fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(it->second, &pos);
  } catch (const std::exception&) {
    throw UsageError(origin_ + ": key '" + key + "': cannot parse '" + it->second +
                     "' as an unsigned integer");
  }
  if (pos != it->second.size()) {
    throw UsageError(origin_ + ": key '" + key + "': trailing characters in '" + it->second +
                     "'");
  }
  return v;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  std::string v = it->second;
  std::transform(v.begin(), v.end(), v.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw UsageError(origin_ + ": key '" + key + "': cannot parse '" + it->second +
                   "' as a boolean");
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  consumed_.insert(key);
  return it->second;
}

void ConfigMap::finish() const {
  std::string unknown;
  for (const auto& [k, v] : values_) {
    if (!consumed_.count(k)) unknown += (unknown.empty() ? "" : ", ") + k;
  }
  if (!unknown.empty()) {
    throw UsageError(origin_ + ": unknown keys: " + unknown);
  }
}

void apply_idp_keys(ConfigMap& cfg, SolverConfig& out) {
  out.n_agents = cfg.get_int("idp_n_agents", out.n_agents);
  out.r0 = cfg.get_double("idp_r0", out.r0);
  out.gamma0 = cfg.get_double("idp_gamma0", out.gamma0);
  out.gamma_f = cfg.get_double("idp_gamma_f", out.gamma_f);
  out.dgamma = cfg.get_double("idp_dgamma", out.dgamma);
  if (out.control_bounds.size() != 1) out.control_bounds.resize(1);
  out.control_bounds[0].lo = cfg.get_double("idp_u_min", out.control_bounds[0].lo);
  out.control_bounds[0].hi = cfg.get_double("idp_u_max", out.control_bounds[0].hi);
  const std::string init = cfg.get_string("idp_init", to_string(out.init));
  if (init == "random") {
    out.init = InitMode::random;
  } else if (init == "lqr") {
    out.init = InitMode::lqr;
  } else {
    throw UsageError("idp_init must be 'random' or 'lqr', got '" + init + "'");
  }
  out.max_iterations = cfg.get_int("idp_max_iterations", out.max_iterations);
  out.resample_dead = cfg.get_bool("idp_resample_dead", out.resample_dead);
  out.fd_eps = cfg.get_double("idp_fd_eps", out.fd_eps);

  out.ga.population = cfg.get_int("ga_population", out.ga.population);
  out.ga.generations = cfg.get_int("ga_generations", out.ga.generations);
  out.ga.tournament = cfg.get_int("ga_tournament", out.ga.tournament);
  out.ga.mutation_rate = cfg.get_double("ga_mutation_rate", out.ga.mutation_rate);
  out.ga.mutation_scale = cfg.get_double("ga_mutation_scale", out.ga.mutation_scale);
  out.ga.elite = cfg.get_int("ga_elite", out.ga.elite);

  out.backward.g_floor = cfg.get_double("bw_g_floor", out.backward.g_floor);
  out.backward.max_backward_dt = cfg.get_double("bw_max_dt", out.backward.max_backward_dt);
  out.backward.substep = cfg.get_double("bw_substep", out.backward.substep);
  out.backward.cost_ratio_cap = cfg.get_double("bw_cost_ratio_cap", out.backward.cost_ratio_cap);

  out.seed = cfg.get_u64("seed", out.seed);
  out.workers = cfg.get_int("workers", out.workers);
}

void apply_dp_keys(ConfigMap& cfg, GridSpec& out) {
  out.x1.lo = cfg.get_double("dp_x1_min", out.x1.lo);
  out.x1.hi = cfg.get_double("dp_x1_max", out.x1.hi);
  out.x1.points = cfg.get_int("dp_x1_points", out.x1.points);
  out.x2.lo = cfg.get_double("dp_x2_min", out.x2.lo);
  out.x2.hi = cfg.get_double("dp_x2_max", out.x2.hi);
  out.x2.points = cfg.get_int("dp_x2_points", out.x2.points);
  out.u.lo = cfg.get_double("dp_u_min", out.u.lo);
  out.u.hi = cfg.get_double("dp_u_max", out.u.hi);
  out.u.points = cfg.get_int("dp_u_points", out.u.points);
  out.dt = cfg.get_double("dp_dt", out.dt);
  out.decay = cfg.get_double("dp_decay", out.decay);
  out.time_constant = cfg.get_double("dp_time_constant", out.time_constant);
  out.tolerance = cfg.get_double("dp_tolerance", out.tolerance);
  out.max_iterations = cfg.get_int("dp_max_iterations", out.max_iterations);
  out.boundary_penalty = cfg.get_double("dp_boundary_penalty", out.boundary_penalty);
  out.workers = cfg.get_int("workers", out.workers);
}

void apply_sim_keys(ConfigMap& cfg, SimParams& out) {
  out.dt = cfg.get_double("sim_dt", out.dt);
  out.t_max = cfg.get_double("sim_t_max", out.t_max);
  out.stop_radius = cfg.get_double("sim_stop_radius", out.stop_radius);
  out.divergence_bound = cfg.get_double("sim_divergence_bound", out.divergence_bound);
}

}  // namespace isocost
