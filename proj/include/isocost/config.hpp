#pragma once

#include "isocost/dp.hpp"
#include "isocost/idp.hpp"

#include <iosfwd>
#include <map>
#include <set>
#include <string>

namespace isocost {

// Flat key = value configuration. '#' starts a comment, blank lines are
// skipped, keys are [a-z0-9_]+ and may not repeat. Every key must be
// consumed by one of the appliers below; leftovers are rejected so typos
// cannot silently fall back to defaults.
class ConfigMap {
 public:
  static ConfigMap parse(std::istream& is, const std::string& origin = "<config>");
  static ConfigMap parse_file(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }

  // Typed getters mark the key consumed and throw UsageError on bad values.
  double get_double(const std::string& key, double fallback);
  int get_int(const std::string& key, int fallback);
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback);
  bool get_bool(const std::string& key, bool fallback);
  std::string get_string(const std::string& key, const std::string& fallback);

  // Throws UsageError when any key was never consumed.
  void finish() const;

 private:
  std::string origin_;
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

struct SimParams {
  double dt = 0.01;
  double t_max = 50.0;
  double stop_radius = 0.01;
  double divergence_bound = 1e3;
};

// Key groups (documented in the README): idp_*, ga_*, bw_* feed the front
// solver; dp_* feeds the grid baseline; sim_* feeds closed-loop rollouts;
// seed and workers are shared.
void apply_idp_keys(ConfigMap& cfg, SolverConfig& out);
void apply_dp_keys(ConfigMap& cfg, GridSpec& out);
void apply_sim_keys(ConfigMap& cfg, SimParams& out);

}  // namespace isocost
